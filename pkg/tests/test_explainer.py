import itertools
import json

import numpy as np
import pytest

from sparse_explain.blackbox import Bm25Ranker, RunFileRanker, hidden_query_oracle
from sparse_explain.bm25 import RankedList, retrieve_topk
from sparse_explain.explainer import (
    ExplanationError,
    ExplanationResult,
    Explainer,
    QueryState,
    SearchConfig,
    bfs_explain,
    evaluate_state,
    greedy_explain,
    query_rng,
)
from sparse_explain.index import build_index, vocabulary_of
from sparse_explain.overlap import rbo_at_k
from sparse_explain.rm3 import TermDistribution

from conftest import PLAIN, random_corpus
from oracles import brute_force_topk


@pytest.fixture(scope="module")
def corpus30():
    rng = np.random.default_rng(21)
    docs, vocab = random_corpus(rng, 30, 25, 8)
    return docs, build_index(docs, PLAIN)


def _reachable_pair(docs, index):
    """A 2-term hidden query whose terms both appear in its own top 10."""
    for a, b in itertools.combinations(index.vocabulary, 2):
        target = retrieve_topk({a, b}, index)
        if len(target) >= 5 and {a, b} <= set(vocabulary_of(target.doc_ids, index)):
            return (a, b), target
    raise AssertionError("no usable pair")


def test_hidden_pair_recovered(corpus30):
    docs, index = corpus30
    hidden, target = _reachable_pair(docs, index)
    # independent oracle: exhaustive search over 1- and 2-term subsets with the brute-force scorer
    vocab = vocabulary_of(target.doc_ids, index)
    goals = [
        s for n in (1, 2) for s in itertools.combinations(vocab, n)
        if rbo_at_k(brute_force_topk(s, docs, 10)[0], target.doc_ids) == 1.0
    ]
    assert tuple(sorted(hidden)) in goals
    res = bfs_explain(["w0"], hidden_query_oracle(hidden, index), index, SearchConfig(seed=3), qid="q")
    assert res.fidelity.rbo == 1.0
    assert res.terminated_by == "goal_reached"


@pytest.mark.parametrize("explain", [bfs_explain, greedy_explain])
def test_self_approximation(corpus30, explain):
    _, index = corpus30
    query = ["w1", "w4"]
    res = explain(query, Bm25Ranker(index), index, SearchConfig(seed=1))
    assert res.fidelity.rbo == 1.0


@pytest.mark.parametrize("explain", [bfs_explain, greedy_explain])
def test_deterministic(corpus30, explain):
    _, index = corpus30
    bb = hidden_query_oracle({"w2", "w7", "w9"}, index)
    a = explain(["w2"], bb, index, SearchConfig(seed=5), qid="x")
    b = explain(["w2"], bb, index, SearchConfig(seed=5), qid="x")
    assert a.to_json() == b.to_json()


def test_evaluate_state(corpus30):
    _, index = corpus30
    target = hidden_query_oracle({"w3", "w5"}, index).rank([])
    assert evaluate_state({"w3", "w5"}, target, index) == 1.0
    assert evaluate_state(set(), target, index) == 0.0
    for terms in (["w1"], ["w3", "w8"], ["w0", "w5", "w6"]):
        assert 0.0 <= evaluate_state(terms, target, index) <= 1.0


def test_empty_target_rejected(corpus30):
    _, index = corpus30
    with pytest.raises(ExplanationError):
        bfs_explain(["w1"], hidden_query_oracle({"nothing"}, index), index)


def test_unknown_target_docs_listed(corpus30):
    _, index = corpus30
    bb = RunFileRanker({"q": RankedList.from_ids(["doc000", "ghost1", "ghost2"])})
    with pytest.raises(ExplanationError, match="ghost1, ghost2"):
        bfs_explain(["w1"], bb, index, qid="q")


def test_empty_candidate_vocab():
    index = build_index([("e", "a"), ("f", "cat")], PLAIN)
    with pytest.raises(ExplanationError, match="vocabulary"):
        Explainer(["cat"], RankedList.from_ids(["e"]), index)


def test_root_children_are_single_adds(corpus30):
    _, index = corpus30
    ex = Explainer(["w1"], retrieve_topk(["w1", "w2"], index), index, SearchConfig(), query_rng(0, "q"))
    kids = ex.generate_children(ex.root())
    assert kids
    assert all(len(c.terms) == 1 and c.parent_action[0] == "add" and c.depth == 1 for c in kids)
    assert all(c.terms[0] in ex.vocab for c in kids)


def test_exhausted_vocab_only_removes():
    index = build_index([("x", "cat")], PLAIN)
    ex = Explainer(["cat"], RankedList.from_ids(["x"]), index, SearchConfig(), query_rng(0, None))
    kids = ex.generate_children(QueryState(("cat",), 1, 1.0))
    assert [c.terms for c in kids] == [()]


def test_point_mass_rm3_gives_one_add_child(corpus30):
    _, index = corpus30
    ex = Explainer(["w1"], retrieve_topk(["w1", "w2"], index), index, SearchConfig(), query_rng(4, "q"))
    x = ex.vocab[-1]
    ex.rm3_dist = TermDistribution({t: float(t == x) for t in ex.vocab})
    ex.add_weights = np.array([ex.rm3_dist.weights[t] for t in ex.vocab])
    ex.root()
    state = QueryState((ex.vocab[0],), 1, 0.0)
    kids = ex.generate_children(state)
    adds = {c.terms for c in kids if c.parent_action[0] == "add"}
    assert adds == {tuple(sorted((ex.vocab[0], x)))}


def test_search_invariants(corpus30):
    _, index = corpus30
    target = hidden_query_oracle({"w3", "w11", "w17"}, index).rank([])
    ex = Explainer(["w3"], target, index, SearchConfig(bfs_max_states=400), query_rng(2, "q"))
    seen = []
    orig = ex.evaluate

    def spy(terms):
        if terms not in ex.memo:
            seen.append(terms)
        return orig(terms)

    ex.evaluate = spy
    res = ex.best_first("q")
    assert len(seen) == len(set(seen)) == res.states_evaluated
    vocab = set(ex.vocab)
    assert all(set(t) <= vocab for t in seen)
    scores = [s for _, s in res.best_score_trace]
    assert scores == sorted(scores)
    idx = [i for i, _ in res.best_score_trace]
    assert idx == sorted(idx)
    # reported fidelity is reproducible from the equivalent query alone
    assert res.fidelity.rbo == rbo_at_k(retrieve_topk(res.equivalent_query, index), target)


def test_greedy_budget(corpus30):
    _, index = corpus30
    target = hidden_query_oracle({"w3", "w11", "w17"}, index).rank([])
    bb = RunFileRanker({"q": target})
    res = greedy_explain(["w3"], bb, index, SearchConfig(greedy_max_states=50), qid="q")
    assert res.states_evaluated <= 50


def test_depth_limit_termination(corpus30):
    _, index = corpus30
    target = RankedList.from_ids(["doc003", "doc001", "doc017"])
    bb = RunFileRanker({"q": target})
    res = bfs_explain(["w3"], bb, index, SearchConfig(max_depth=1, branching=3, bfs_max_states=None), qid="q")
    assert res.fidelity.rbo < 1.0
    assert res.terminated_by == "depth_limit"
    assert res.states_evaluated == 4


def test_state_budget(corpus30):
    _, index = corpus30
    target = RankedList.from_ids(["doc003", "doc001", "doc017", "doc020"])
    res = bfs_explain(["w3"], RunFileRanker({"q": target}), index, SearchConfig(bfs_max_states=25), qid="q")
    assert res.states_evaluated <= 25
    assert res.terminated_by in ("state_budget", "goal_reached")


def test_result_json_shape(corpus30):
    _, index = corpus30
    res = bfs_explain(["w1"], hidden_query_oracle({"w1", "w2"}, index), index, qid="7")
    d = json.loads(res.to_json())
    assert {"qid", "equivalent_query", "jaccard", "rbo", "states_evaluated", "terminated_by", "trace"} <= set(d)
    back = ExplanationResult.from_dict(d)
    assert back.equivalent_query == res.equivalent_query and back.fidelity == res.fidelity


def test_config_validation():
    with pytest.raises(ValueError):
        SearchConfig(branching=0)
    with pytest.raises(ValueError):
        SearchConfig(omega="ndcg")
    with pytest.raises(ValueError):
        SearchConfig(rbo_p=1.0)
    assert SearchConfig().k == 10 and SearchConfig().branching == 30 and SearchConfig().max_depth == 10
