from wordactors.trees import Edge, ParseTree, is_projective


def tree(root_pos, root_surface, *triples):
    surfaces = {root_pos: root_surface}
    for hp, hs, _label, mp, ms in triples:
        surfaces[hp] = hs
        surfaces[mp] = ms
    edges = frozenset(Edge(hp, hs, label, mp, ms) for hp, hs, label, mp, ms in triples)
    return ParseTree(root_pos, root_surface, edges)


def test_render_sorts_by_head_then_label():
    t = tree(2, "b", (2, "b", "y", 3, "c"), (2, "b", "x", 1, "a"))
    assert t.render() == "b —x→ a\nb —y→ c"


def test_single_node_renders_as_its_surface():
    assert ParseTree(1, "Atari", frozenset()).render() == "Atari"


def test_canonical_is_order_free():
    a = tree(2, "b", (2, "b", "x", 1, "a"), (2, "b", "y", 3, "c"))
    b = tree(2, "b", (2, "b", "y", 3, "c"), (2, "b", "x", 1, "a"))
    assert a.canonical() == b.canonical()
    assert a.canonical() == (2, ((2, "x", 1), (2, "y", 3)))


def test_contiguous_subtrees_are_projective():
    t = tree(3, "v", (3, "v", "a", 1, "w"), (1, "w", "b", 2, "x"), (3, "v", "c", 4, "y"))
    assert is_projective(t, [1, 2, 3, 4])


def test_crossing_edge_is_not_projective():
    t = tree(1, "w", (1, "w", "a", 3, "y"), (1, "w", "d", 2, "x"), (2, "x", "b", 4, "z"))
    assert not is_projective(t, [1, 2, 3, 4])
