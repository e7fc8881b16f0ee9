import pytest
from hypothesis import given, settings, strategies as st

from sparse_explain.analysis import tokenize
from sparse_explain.bm25 import RankedList, retrieve_topk
from sparse_explain.index import build_index, vocabulary_of
from sparse_explain.rm3 import TermDistribution, expand_query_rm3, rm3_expanded_query, rm3_weights

from conftest import PLAIN


def test_single_doc_collapses_to_mle():
    index = build_index([("d1", "cat cat dog"), ("d2", "fish")], PLAIN)
    dist = rm3_weights(["cat"], RankedList.from_ids(["d1"]), index, lam=1.0, candidate_vocab=["cat", "dog"])
    assert dist.weights == pytest.approx({"cat": 2 / 3, "dog": 1 / 3})


def test_lambda_zero_is_query_mle():
    index = build_index([("d1", "cat dog"), ("d2", "dog fish")], PLAIN)
    dist = rm3_weights(
        ["cat", "fish", "zebra"], RankedList.from_ids(["d1", "d2"]), index, 0.0, ["cat", "dog", "fish"]
    )
    assert dist.weights == pytest.approx({"cat": 0.5, "dog": 0.0, "fish": 0.5})


def test_two_doc_mixture(cat_index):
    dist = rm3_weights(["cat"], RankedList.from_ids(["d1", "d2"]), cat_index, 1.0, ["cat"])
    assert dist.weights == pytest.approx({"cat": 1.0})


def test_uniform_fallback():
    index = build_index([("d1", "cat"), ("d2", "dog")], PLAIN)
    dist = rm3_weights(["cat"], RankedList.from_ids(["d1"]), index, 1.0, ["dog", "eel"])
    assert dist.weights == pytest.approx({"dog": 0.5, "eel": 0.5})


def test_bad_lambda(cat_index):
    with pytest.raises(ValueError):
        rm3_weights(["cat"], RankedList.from_ids(["d1"]), cat_index, 1.5)


def test_unknown_feedback_doc(cat_index):
    with pytest.raises(ValueError):
        rm3_weights(["cat"], RankedList.from_ids(["nope"]), cat_index)


def test_expand_saturates_and_breaks_ties():
    dist = TermDistribution({t: 0.25 for t in "dcba"})
    assert expand_query_rm3({"q"}, dist, 10) == frozenset("abcdq")
    assert expand_query_rm3({"q"}, dist, 3) == frozenset("abcq")
    with pytest.raises(ValueError):
        expand_query_rm3({"q"}, dist, 0)


def test_distribution_must_normalize():
    with pytest.raises(ValueError):
        TermDistribution({"a": 0.4, "b": 0.4})


def test_expansion_adds_related_stems():
    docs = [
        ("d1", "The commonwealth of independent states formed after the Soviet Union"),
        ("d2", "Soviet Union republics formed the commonwealth"),
        ("d3", "Independent states of the former Soviet Union"),
        ("d4", "A recipe for bread"),
    ]
    index = build_index(docs)
    query = tokenize("commonwealth independent states")
    expanded = rm3_expanded_query(query, index, n_terms=5, feedback_docs=3)
    assert {"soviet", "union"} <= expanded
    assert set(query) <= expanded


@settings(max_examples=50)
@given(
    st.lists(st.text(alphabet="abcde ", min_size=1, max_size=20), min_size=1, max_size=6),
    st.lists(st.sampled_from(list("abcde")), max_size=3),
    st.floats(0, 1),
)
def test_distribution_invariants(texts, query, lam):
    index = build_index([(f"d{i}", t) for i, t in enumerate(texts)], PLAIN)
    ranked = RankedList.from_ids(index.doc_ids)
    vocab = vocabulary_of(ranked.doc_ids, index)
    dist = rm3_weights(query, ranked, index, lam)
    assert set(dist.weights) == set(vocab)
    if vocab:
        assert sum(dist.weights.values()) == pytest.approx(1.0)
        assert all(w >= 0 for w in dist.weights.values())


@settings(max_examples=50)
@given(st.floats(0, 1), st.floats(0, 1))
def test_raising_lambda_never_helps_absent_query_term(l1, l2):
    lo, hi = sorted((l1, l2))
    index = build_index([("d1", "cat dog"), ("d2", "dog dog fish"), ("d3", "eel")], PLAIN)
    fb = RankedList.from_ids(["d1", "d2"])
    vocab = ["cat", "dog", "eel", "fish"]  # eel is in no feedback doc
    w_lo = rm3_weights(["eel", "cat"], fb, index, lo, vocab).weights["eel"]
    w_hi = rm3_weights(["eel", "cat"], fb, index, hi, vocab).weights["eel"]
    assert w_hi <= w_lo + 1e-12
