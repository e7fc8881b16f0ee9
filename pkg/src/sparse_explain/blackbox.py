"""Sources of the black-box ranking being explained.

Anything that can produce a ranked list for a query plugs in here: TREC
run files written by external systems, and two built-in synthetic rankers
used for testing and desk-scale experiments.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Optional, Protocol

import numpy as np

from .bm25 import DEFAULT_PARAMS, Bm25Params, RankedList, idf, retrieve_topk
from .index import InvertedIndex


class RunFormatError(ValueError):
    pass


class BlackBoxRanker(Protocol):
    kind: str

    def rank(self, query_terms: Iterable[str], qid: Optional[str] = None) -> RankedList: ...


RunFile = dict[str, RankedList]


def load_run(path: str | Path, max_k: int = 1000) -> RunFile:
    """Read a TREC run (``qid Q0 docid rank score tag``), truncating to ``max_k``."""
    rows: dict[str, list[tuple[int, str, float]]] = {}
    seen: set[tuple[str, str]] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            parts = line.split()
            if len(parts) != 6:
                raise RunFormatError(f"{path}:{lineno}: expected 6 columns, got {len(parts)}")
            qid, _q0, doc_id, rank, score, _tag = parts
            try:
                rank_i, score_f = int(rank), float(score)
            except ValueError:
                raise RunFormatError(f"{path}:{lineno}: bad rank or score") from None
            if (qid, doc_id) in seen:
                raise RunFormatError(f"{path}:{lineno}: duplicate document {doc_id} for query {qid}")
            seen.add((qid, doc_id))
            rows.setdefault(qid, []).append((rank_i, doc_id, score_f))

    run: RunFile = {}
    for qid, entries in rows.items():
        entries.sort()
        ranks = [r for r, _, _ in entries]
        if ranks != list(range(1, len(ranks) + 1)):
            raise RunFormatError(f"{path}: ranks for query {qid} are not contiguous from 1")
        kept = entries[:max_k]
        run[qid] = RankedList(tuple((d, s) for _, d, s in kept), max_k)
    return run


def format_run(run: Mapping[str, RankedList], tag: str = "sparse_explain") -> str:
    lines = []
    for qid in sorted(run):
        for rank, (doc_id, score) in enumerate(run[qid].entries, 1):
            lines.append(f"{qid} Q0 {doc_id} {rank} {score!r} {tag}\n")
    return "".join(lines)


def write_run(path: str | Path, run: Mapping[str, RankedList], tag: str = "sparse_explain") -> None:
    Path(path).write_text(format_run(run, tag), encoding="utf-8")


@dataclass
class RunFileRanker:
    run: RunFile
    k: int = 10
    kind: str = field(default="run_file", init=False)

    def rank(self, query_terms=(), qid=None) -> RankedList:
        if qid is None:
            raise ValueError("a run-file ranker needs the query id")
        try:
            return self.run[qid].truncate(self.k)
        except KeyError:
            raise KeyError(f"query {qid!r} not in run file") from None


@dataclass
class HiddenQueryOracle:
    """A 'black box' that is secretly BM25 run with a fixed hidden query."""

    hidden_terms: frozenset[str]
    index: InvertedIndex
    params: Bm25Params = DEFAULT_PARAMS
    k: int = 10
    kind: str = field(default="hidden_query_oracle", init=False)

    def __post_init__(self):
        self.hidden_terms = frozenset(self.hidden_terms)
        if not self.hidden_terms:
            raise ValueError("hidden query must have at least one term")
        self._list = retrieve_topk(self.hidden_terms, self.index, self.params, self.k)

    def rank(self, query_terms=(), qid=None) -> RankedList:
        return self._list


def hidden_query_oracle(hidden_terms, index, params=DEFAULT_PARAMS, k=10) -> HiddenQueryOracle:
    return HiddenQueryOracle(frozenset(hidden_terms), index, params, k)


@dataclass
class Bm25Ranker:
    """BM25 on the original query: explaining the approximator with itself."""

    index: InvertedIndex
    params: Bm25Params = DEFAULT_PARAMS
    k: int = 10
    kind: str = field(default="bm25", init=False)

    def rank(self, query_terms, qid=None) -> RankedList:
        return retrieve_topk(query_terms, self.index, self.params, self.k)


def term_vector(term: str, dim: int, seed: int) -> np.ndarray:
    """Deterministic pseudo-random unit vector for ``term``."""
    digest = hashlib.blake2b(f"{seed}\x1f{term}".encode(), digest_size=8).digest()
    v = np.random.default_rng(int.from_bytes(digest, "little")).standard_normal(dim)
    return v / np.linalg.norm(v)


class HashedEmbeddingRanker:
    """Dense stand-in: cosine between idf-weighted mean term vectors.

    The vectors share dimensions by chance, so documents can score well
    without containing any query term.
    """

    kind = "hashed_embedding"

    def __init__(self, dim: int, seed: int, index: InvertedIndex, k: int = 10):
        if dim < 8:
            raise ValueError(f"dim must be >= 8, got {dim}")
        self.dim, self.seed, self.index, self.k = dim, seed, index, k
        n = index.doc_count
        self._idf = {t: idf(index.doc_freq[t], n) for t in index.vocabulary}
        self._vectors = (
            np.stack([term_vector(t, dim, seed) for t in index.vocabulary])
            if index.vocabulary
            else np.zeros((0, dim))
        )
        docs = np.zeros((n, dim))
        for i, counts in enumerate(index.doc_term_counts):
            if not counts:
                continue
            ids = [index.term_ids[t] for t in counts]
            w = np.array([tf * self._idf[t] for t, tf in counts.items()])
            docs[i] = w @ self._vectors[ids] / w.sum()
        norms = np.linalg.norm(docs, axis=1)
        self._has_vector = norms > 0
        self._docs = np.divide(docs, norms[:, None], out=np.zeros_like(docs), where=norms[:, None] > 0)

    def query_vector(self, query_terms: Iterable[str]) -> Optional[np.ndarray]:
        terms = sorted(t for t in set(query_terms) if t in self.index.term_ids)
        if not terms:
            return None
        ids = [self.index.term_ids[t] for t in terms]
        w = np.array([self._idf[t] for t in terms])
        q = w @ self._vectors[ids] / w.sum()
        norm = np.linalg.norm(q)
        return q / norm if norm > 0 else None

    def cosines(self, query_terms: Iterable[str]) -> np.ndarray:
        q = self.query_vector(query_terms)
        if q is None:
            return np.zeros(self.index.doc_count)
        return self._docs @ q

    def rank(self, query_terms, qid=None) -> RankedList:
        q = self.query_vector(query_terms)
        if q is None:
            return RankedList((), self.k)
        cand = np.flatnonzero(self._has_vector)
        scores = self._docs[cand] @ q
        order = np.lexsort((cand, -scores))[: self.k]
        ids = self.index.doc_ids
        return RankedList(tuple((ids[cand[i]], float(scores[i])) for i in order), self.k)


def hashed_embedding_ranker(dim: int, seed: int, index: InvertedIndex, k: int = 10) -> HashedEmbeddingRanker:
    return HashedEmbeddingRanker(dim, seed, index, k)


@dataclass
class PerQueryRanker:
    """Dispatch by qid to a per-topic ranker (e.g. one hidden oracle per topic)."""

    rankers: Mapping[str, BlackBoxRanker]
    kind: str = field(default="per_query", init=False)

    def rank(self, query_terms=(), qid=None) -> RankedList:
        if qid not in self.rankers:
            raise KeyError(f"no ranker for query {qid!r}")
        return self.rankers[qid].rank(query_terms, qid)
