"""Equivalent-query search.

Given a black-box ranking for a query, search over term sets drawn from
the vocabulary of the black box's top-k documents for the one whose BM25
ranking overlaps the black box's ranking the most. Two strategies share
the state model and child generation: best-first search with back-tracking
and a greedy walk that only follows the best child.
"""

from __future__ import annotations

import heapq
import json
import zlib
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from . import kernels
from .blackbox import BlackBoxRanker
from .bm25 import DEFAULT_PARAMS, Bm25Params, RankedList, searcher_for, tfidf_weight
from .index import InvertedIndex, vocabulary_of
from .overlap import FidelityScore, fidelity
from .rm3 import TermDistribution, rm3_weights

OMEGAS = ("rbo", "jaccard")
TERMINATIONS = ("depth_limit", "frontier_exhausted", "goal_reached", "state_budget")


DEFAULT_BFS_MAX_STATES = 20000


class ExplanationError(ValueError):
    pass


@dataclass(frozen=True)
class SearchConfig:
    k: int = 10
    branching: int = 30
    max_depth: int = 10
    greedy_max_states: int = 1000
    rbo_p: float = 0.9
    seed: int = 0
    omega: str = "rbo"
    # cap on states evaluated by best-first search; None means unlimited,
    # which with b=30 and depth 10 rarely terminates in practice
    bfs_max_states: Optional[int] = DEFAULT_BFS_MAX_STATES
    bm25: Bm25Params = DEFAULT_PARAMS
    removal_eps: float = 1e-6

    def __post_init__(self):
        for name in ("k", "branching", "max_depth", "greedy_max_states"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.bfs_max_states is not None and self.bfs_max_states < 1:
            raise ValueError("bfs_max_states must be positive or None")
        if not 0.0 < self.rbo_p < 1.0:
            raise ValueError("rbo_p must be in (0, 1)")
        if self.omega not in OMEGAS:
            raise ValueError(f"omega must be one of {OMEGAS}")
        if self.removal_eps <= 0:
            raise ValueError("removal_eps must be positive")


@dataclass(frozen=True)
class QueryState:
    terms: tuple[str, ...]  # sorted, distinct
    depth: int
    score: float
    parent_action: tuple = ("root",)

    @property
    def priority(self):
        # best score first, then shallower, then lexicographic term set
        return (-self.score, self.depth, self.terms)


@dataclass
class ExplanationResult:
    qid: Optional[str]
    method: str
    equivalent_query: tuple[str, ...]
    fidelity: FidelityScore
    states_evaluated: int
    best_score_trace: list[tuple[int, float]]
    terminated_by: str
    target: tuple[str, ...] = field(default=(), repr=False)

    def to_dict(self) -> dict:
        return {
            "qid": self.qid,
            "method": self.method,
            "equivalent_query": list(self.equivalent_query),
            "jaccard": self.fidelity.jaccard,
            "rbo": self.fidelity.rbo,
            "k": self.fidelity.k,
            "states_evaluated": self.states_evaluated,
            "terminated_by": self.terminated_by,
            "trace": [[i, s] for i, s in self.best_score_trace],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))

    @classmethod
    def from_dict(cls, d: dict) -> "ExplanationResult":
        return cls(
            qid=d["qid"],
            method=d.get("method", "bfs"),
            equivalent_query=tuple(d["equivalent_query"]),
            fidelity=FidelityScore(d["jaccard"], d["rbo"], d.get("k", 10)),
            states_evaluated=d["states_evaluated"],
            best_score_trace=[(int(i), float(s)) for i, s in d["trace"]],
            terminated_by=d["terminated_by"],
        )


def query_rng(seed: int, qid: Optional[str]) -> np.random.Generator:
    """Per-query generator: independent of how queries are scheduled."""
    salt = zlib.crc32((qid or "").encode("utf-8"))
    return np.random.default_rng(np.random.SeedSequence([seed, salt]))


def _draw(rng: np.random.Generator, weights: np.ndarray) -> int:
    cum = np.cumsum(weights)
    total = cum[-1]
    if not total > 0:
        return int(rng.integers(len(weights)))
    return min(int(np.searchsorted(cum, rng.random() * total, side="right")), len(weights) - 1)


class Explainer:
    """Search state for explaining one black-box ranking.

    Holds the frozen candidate vocabulary and sampling weights, the memo of
    evaluated term sets, the set of generated term sets, and the running
    best state. One instance serves exactly one search.
    """

    def __init__(
        self,
        query_terms: Iterable[str],
        target: RankedList,
        index: InvertedIndex,
        cfg: SearchConfig = SearchConfig(),
        rng: Optional[np.random.Generator] = None,
    ):
        self.query = tuple(sorted(set(query_terms)))
        self.target = target.truncate(cfg.k)
        self.index = index
        self.cfg = cfg
        self.rng = rng if rng is not None else query_rng(cfg.seed, None)
        if not len(self.target):
            raise ExplanationError("black box returned an empty ranking")
        missing = index.missing(self.target.doc_ids)
        if missing:
            raise ExplanationError(f"black box returned documents not in the corpus: {', '.join(missing)}")

        self.searcher = searcher_for(index, cfg.bm25)
        self.target_numbers = np.array(
            [index.doc_number(d) for d in self.target.doc_ids], dtype=np.int64
        )
        self.vocab = vocabulary_of(self.target.doc_ids, index)
        if not self.vocab:
            raise ExplanationError("candidate vocabulary is empty; nothing to explain with")
        self.vocab_pos = {t: i for i, t in enumerate(self.vocab)}

        # add: pure relevance model over the candidate vocabulary
        self.rm3_dist: TermDistribution = rm3_weights(
            self.query, self.target, index, 1.0, self.vocab, cfg.bm25
        )
        self.add_weights = np.array([self.rm3_dist.weights[t] for t in self.vocab])
        # remove: inversely proportional to tf-idf over the black box's documents
        self.remove_weights = {
            t: 1.0 / (tfidf_weight(t, self.target.doc_ids, index) + cfg.removal_eps)
            for t in self.vocab
        }

        self.memo: dict[tuple[str, ...], float] = {}
        self.generated: set[tuple[str, ...]] = set()
        self.best: Optional[QueryState] = None
        self.trace: list[tuple[int, float]] = []

    @property
    def states_evaluated(self) -> int:
        return len(self.memo)

    # -- evaluation ----------------------------------------------------

    def evaluate(self, terms: tuple[str, ...]) -> float:
        if terms in self.memo:
            return self.memo[terms]
        ids = self.searcher.term_ids(terms)
        docs, _ = self.searcher.topk_numbers(ids, self.cfg.k)
        if self.cfg.omega == "rbo":
            score = kernels.rbo(docs, self.target_numbers, self.cfg.k, self.cfg.rbo_p)
        else:
            score = kernels.jaccard(docs, self.target_numbers, self.cfg.k)
        self.memo[terms] = score
        return score

    def _make_state(self, terms: tuple[str, ...], depth: int, action: tuple) -> QueryState:
        state = QueryState(terms, depth, self.evaluate(terms), action)
        if self.best is None or state.score > self.best.score:
            self.best = state
            self.trace.append((self.states_evaluated - 1, state.score))
        return state

    def root(self) -> QueryState:
        self.generated.add(())
        return self._make_state((), 0, ("root",))

    # -- child generation ----------------------------------------------

    def _sample_add(self, state: QueryState) -> str:
        weights = self.add_weights.copy()
        present = [self.vocab_pos[t] for t in state.terms]
        weights[present] = 0.0
        if not weights.sum() > 0:
            weights = np.ones(len(self.vocab))
            weights[present] = 0.0
        return self.vocab[_draw(self.rng, weights)]

    def _sample_remove(self, state: QueryState) -> str:
        weights = np.array([self.remove_weights[t] for t in state.terms])
        return state.terms[_draw(self.rng, weights)]

    def generate_children(self, state: QueryState, limit: Optional[int] = None) -> list[QueryState]:
        """Sample up to ``branching`` previously ungenerated children of ``state``.

        Each draw picks add or remove with equal probability (remove is
        impossible on the empty state, add once every candidate term is
        present). Draws that reproduce an already generated term set are
        discarded; at most ``10 * branching`` draws are made. ``limit`` caps
        the number of new evaluations. Generation stops early at a goal state.
        """
        b = self.cfg.branching
        if limit is not None:
            b = min(b, limit)
        can_remove = len(state.terms) > 0
        can_add = len(state.terms) < len(self.vocab)
        children: list[QueryState] = []
        attempts = 0
        while len(children) < b and attempts < 10 * self.cfg.branching:
            attempts += 1
            if can_add and (not can_remove or self.rng.random() < 0.5):
                term = self._sample_add(state)
                terms = tuple(sorted(state.terms + (term,)))
                action = ("add", term)
            else:
                term = self._sample_remove(state)
                terms = tuple(t for t in state.terms if t != term)
                action = ("remove", term)
            if terms in self.generated:
                continue
            self.generated.add(terms)
            child = self._make_state(terms, state.depth + 1, action)
            children.append(child)
            if child.score >= 1.0:
                break
        return children

    # -- strategies ----------------------------------------------------

    def _result(self, method: str, qid: Optional[str], terminated_by: str) -> ExplanationResult:
        best = self.best
        retrieved = self.searcher.retrieve(best.terms, self.cfg.k)
        fid = fidelity(retrieved, self.target, self.cfg.k, self.cfg.rbo_p)
        return ExplanationResult(
            qid=qid,
            method=method,
            equivalent_query=best.terms,
            fidelity=fid,
            states_evaluated=self.states_evaluated,
            best_score_trace=list(self.trace),
            terminated_by=terminated_by,
            target=tuple(self.target.doc_ids),
        )

    def best_first(self, qid: Optional[str] = None) -> ExplanationResult:
        """Always expand the best unexplored state.

        States at ``max_depth`` are leaves. The search ends when a state
        reproduces the target exactly, when no expandable state is left
        (``depth_limit`` if leaves were cut off, else ``frontier_exhausted``),
        or when the state budget is spent.
        """
        cfg = self.cfg
        root = self.root()
        frontier: list = [(root.priority, root)]
        cut_off = False
        terminated_by = None
        while frontier:
            if self.best.score >= 1.0:
                terminated_by = "goal_reached"
                break
            budget = None
            if cfg.bfs_max_states is not None:
                budget = cfg.bfs_max_states - self.states_evaluated
                if budget <= 0:
                    terminated_by = "state_budget"
                    break
            _, state = heapq.heappop(frontier)
            if state.depth >= cfg.max_depth:
                cut_off = True
                continue
            for child in self.generate_children(state, budget):
                heapq.heappush(frontier, (child.priority, child))
        if terminated_by is None:
            if self.best.score >= 1.0:
                terminated_by = "goal_reached"
            else:
                terminated_by = "depth_limit" if cut_off else "frontier_exhausted"
        return self._result("bfs", qid, terminated_by)

    def greedy(self, qid: Optional[str] = None) -> ExplanationResult:
        """Follow the best child at every step, without back-tracking."""
        cfg = self.cfg
        current = self.root()
        while True:
            if self.best.score >= 1.0:
                terminated_by = "goal_reached"
                break
            remaining = cfg.greedy_max_states - self.states_evaluated
            if remaining <= 0:
                terminated_by = "state_budget"
                break
            children = self.generate_children(current, remaining)
            if not children:
                terminated_by = "frontier_exhausted"
                break
            current = min(children, key=lambda s: s.priority)
        return self._result("greedy", qid, terminated_by)


def evaluate_state(
    state_terms: Iterable[str],
    target_list: RankedList,
    index: InvertedIndex,
    cfg: SearchConfig = SearchConfig(),
) -> float:
    """Overlap between BM25's top-k for ``state_terms`` and ``target_list``."""
    if not len(target_list):
        raise ExplanationError("target list is empty")
    searcher = searcher_for(index, cfg.bm25)
    retrieved = searcher.retrieve(state_terms, cfg.k)
    fid = fidelity(retrieved, target_list, cfg.k, cfg.rbo_p)
    return fid.rbo if cfg.omega == "rbo" else fid.jaccard


def _explainer(query, blackbox: BlackBoxRanker, index, cfg, qid) -> Explainer:
    query = tuple(sorted(set(query)))
    target = blackbox.rank(query, qid)
    return Explainer(query, target, index, cfg, query_rng(cfg.seed, qid))


def bfs_explain(
    query: Iterable[str],
    blackbox: BlackBoxRanker,
    index: InvertedIndex,
    cfg: SearchConfig = SearchConfig(),
    qid: Optional[str] = None,
) -> ExplanationResult:
    return _explainer(query, blackbox, index, cfg, qid).best_first(qid)


def greedy_explain(
    query: Iterable[str],
    blackbox: BlackBoxRanker,
    index: InvertedIndex,
    cfg: SearchConfig = SearchConfig(),
    qid: Optional[str] = None,
) -> ExplanationResult:
    return _explainer(query, blackbox, index, cfg, qid).greedy(qid)


METHODS = {"bfs": bfs_explain, "greedy": greedy_explain}
