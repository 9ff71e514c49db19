import pytest

from wordactors.concepts import KBError, is_a, load_kb, role_permits


def test_root_of_bundled_taxonomy(demo_kb):
    assert demo_kb.root == "thing"


def test_is_a_reflexive(demo_kb):
    for c in demo_kb.concepts:
        assert is_a(demo_kb, c, c)


def test_everything_falls_under_the_root(demo_kb):
    for c in demo_kb.concepts:
        assert is_a(demo_kb, c, demo_kb.root)


def test_storage_chain(demo_kb):
    assert is_a(demo_kb, "harddisk", "storage-device")
    assert is_a(demo_kb, "harddisk", "device")
    assert not is_a(demo_kb, "storage-device", "harddisk")


def test_is_a_undefined_concept(demo_kb):
    with pytest.raises(KBError):
        is_a(demo_kb, "harddisk", "nonsense")
    with pytest.raises(KBError):
        is_a(demo_kb, "nonsense", "thing")


def test_part_role_for_the_pp_attachment(demo_kb):
    assert role_permits(demo_kb, "notebook-device", "has-part", "harddisk")


def test_tool_role_rejects_storage(demo_kb):
    # this rejection is what forces the prepositional phrase onto the noun
    assert not role_permits(demo_kb, "develop-action", "instrument", "harddisk")


def test_permissive_variant_admits_both(demo_kb, permissive_kb):
    assert not role_permits(demo_kb, "develop-action", "instrument", "harddisk")
    assert role_permits(permissive_kb, "develop-action", "instrument", "harddisk")


def test_undefined_role(demo_kb):
    with pytest.raises(KBError):
        role_permits(demo_kb, "harddisk", "no-such-role", "harddisk")


def test_range_at_root_degenerates_to_domain_check():
    kb = load_kb("concept top\nconcept a : top\nconcept b : top\nrole r domain a range top\n")
    for x in ("a", "b", "top"):
        for y in ("a", "b", "top"):
            assert role_permits(kb, x, "r", y) == is_a(kb, x, "a")


def test_is_a_is_a_partial_order(demo_kb):
    cs = sorted(demo_kb.concepts)
    for a in cs:
        for b in cs:
            if is_a(demo_kb, a, b) and is_a(demo_kb, b, a):
                assert a == b
            for c in cs:
                if is_a(demo_kb, a, b) and is_a(demo_kb, b, c):
                    assert is_a(demo_kb, a, c)


def test_role_monotone_under_filler_specialization(demo_kb):
    cs = sorted(demo_kb.concepts)
    for role in demo_kb.roles:
        for h in cs:
            for f in cs:
                if not role_permits(demo_kb, h, role, f):
                    continue
                for f2 in cs:
                    if is_a(demo_kb, f2, f):
                        assert role_permits(demo_kb, h, role, f2)


# -- loader ------------------------------------------------------------------

def test_load_comments_and_blanks():
    kb = load_kb("# nothing yet\n\nconcept top  # the root\nconcept a : top\n")
    assert kb.concepts == {"top", "a"}


@pytest.mark.parametrize("source, fragment", [
    ("concept a\nconcept a", "duplicate concept"),
    ("concept a\nconcept b", "lacks a parent"),
    ("concept a\nconcept b : zzz", "unknown parent"),
    ("concept a\nrole r domain a range zzz", "unknown concept"),
    ("concept a\nrole r domain a", "malformed role"),
    ("concept a\nconcept", "malformed concept"),
    ("widget a", "unknown declaration"),
])
def test_load_rejections(source, fragment):
    with pytest.raises(KBError) as err:
        load_kb(source)
    assert fragment in str(err.value)


def test_load_errors_carry_line_numbers():
    with pytest.raises(KBError, match="line 3"):
        load_kb("concept a\nconcept b : a\nconcept b : a\n")
