import pytest

from _factories import make_corpus, make_sentence


@pytest.fixture
def nested_sentence():
    """Five tokens; a P span over the whole sentence strictly containing a
    two-token I span that shares the P end token."""
    return make_sentence(
        "abs1-0",
        ["adults", "with", "chronic", "insulin", "dependence"],
        [(0, 4, "P"), (3, 4, "I")],
    )


@pytest.fixture
def nested_corpus(nested_sentence):
    return make_corpus(nested_sentence, doc_id="abs1")


@pytest.fixture
def flat_sentence():
    return make_sentence(
        "abs2-0",
        ["metformin", "reduced", "fasting", "glucose", "levels"],
        [(0, 0, "I"), (2, 4, "O")],
    )
