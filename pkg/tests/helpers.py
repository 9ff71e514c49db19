"""Bits shared by several test modules: fixture loading and the corpus."""

from importlib import resources

FIXTURES = resources.files("wordactors").joinpath("fixtures")

DEMO_SENTENCE = "Compaq entwickelt einen Notebook mit einer 120-MByte-Harddisk".split()

DEMO_EDGES = [
    "entwickelt —dirobj→ Notebook",
    "entwickelt —subj→ Compaq",
    "Notebook —ppatt→ mit",
    "Notebook —spec→ einen",
    "mit —obj→ 120-MByte-Harddisk",
    "120-MByte-Harddisk —spec→ einer",
]


def fixture_text(name: str) -> str:
    return FIXTURES.joinpath(name).read_text()


def fixture_path(name: str) -> str:
    return str(FIXTURES.joinpath(name))


def corpus_cases():
    """(expected reading count, token tuple) pairs from the bundled corpus."""
    cases = []
    for raw in fixture_text("corpus.txt").splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        want, _, sent = line.partition("|")
        cases.append((int(want.strip()), tuple(sent.split())))
    return cases
