import pytest

from helpers import fixture_text

from wordactors import concepts as cn
from wordactors import lexicon as lx


@pytest.fixture(scope="session")
def demo_lexicon():
    return lx.load_lexicon(fixture_text("demo.lex"))


@pytest.fixture(scope="session")
def demo_kb():
    return cn.load_kb(fixture_text("demo.kb"))


@pytest.fixture(scope="session")
def permissive_kb():
    return cn.load_kb(fixture_text("demo_permissive.kb"))
