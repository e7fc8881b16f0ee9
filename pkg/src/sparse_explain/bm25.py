"""BM25 scoring, top-k retrieval and tf-idf term weights."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .index import CorpusError, InvertedIndex


@dataclass(frozen=True)
class Bm25Params:
    k1: float = 1.2
    b: float = 0.75

    def __post_init__(self):
        if self.k1 < 0:
            raise ValueError(f"k1 must be >= 0, got {self.k1}")
        if not 0 <= self.b <= 1:
            raise ValueError(f"b must be in [0, 1], got {self.b}")


DEFAULT_PARAMS = Bm25Params()


@dataclass(frozen=True)
class RankedList:
    """Ordered ``(doc_id, score)`` pairs cut off at ``k``."""

    entries: tuple[tuple[str, float], ...]
    k: int

    def __post_init__(self):
        if len(self.entries) > self.k:
            raise ValueError(f"{len(self.entries)} entries exceed cutoff k={self.k}")
        ids = self.doc_ids
        if len(set(ids)) != len(ids):
            raise ValueError("ranked list contains duplicate doc_ids")

    @property
    def doc_ids(self) -> list[str]:
        return [d for d, _ in self.entries]

    @property
    def scores(self) -> list[float]:
        return [s for _, s in self.entries]

    def __len__(self) -> int:
        return len(self.entries)

    def truncate(self, k: int) -> "RankedList":
        return RankedList(self.entries[:k], k)

    @classmethod
    def from_ids(cls, doc_ids: Sequence[str], k: int | None = None) -> "RankedList":
        """Build a list from IDs alone, with descending placeholder scores."""
        n = len(doc_ids)
        return cls(tuple((d, float(n - i)) for i, d in enumerate(doc_ids)), k or max(n, 1))


def idf(df: int, n_docs: int) -> float:
    return math.log(1.0 + (n_docs - df + 0.5) / (df + 0.5))


class Bm25Searcher:
    """Precomputed per-posting BM25 impacts for one parameter setting.

    With set semantics every query term contributes independently, so the
    score of a document is the sum of the impacts of the postings it hits.
    """

    def __init__(self, index: InvertedIndex, params: Bm25Params = DEFAULT_PARAMS):
        self.index = index
        self.params = params
        k1, b = params.k1, params.b
        n = index.doc_count
        avg = index.avg_doc_length
        # same operation order as term_impact, so results are bit-identical
        idfs = np.array([idf(index.doc_freq[t], n) for t in index.vocabulary])
        w = np.repeat(idfs, np.diff(index.post_offsets))
        tf = index.post_tfs
        if len(tf):
            norm = 1.0 - b + b * index.length_array[index.post_docs] / avg
        else:
            norm = np.ones(0)
        self.impacts = w * (tf * (k1 + 1.0)) / (tf + k1 * norm)

    def term_ids(self, terms: Iterable[str]) -> np.ndarray:
        """Sorted IDs of the distinct in-vocabulary terms."""
        ids = self.index.term_ids
        return np.array(sorted({ids[t] for t in terms if t in ids}), dtype=np.int64)

    def topk_numbers(self, term_ids: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
        idx = self.index
        return kernels.bm25_topk(
            term_ids, idx.post_offsets, idx.post_docs, self.impacts, idx.doc_count, k
        )

    def retrieve(self, query_terms: Iterable[str], k: int) -> RankedList:
        if k < 1:
            raise ValueError(f"k must be >= 1, got {k}")
        docs, scores = self.topk_numbers(self.term_ids(query_terms), k)
        ids = self.index.doc_ids
        return RankedList(
            tuple((ids[d], s) for d, s in zip(docs.tolist(), scores.tolist())), k
        )


def term_impact(w: float, tf: float, dl: float, avg: float, k1: float, b: float) -> float:
    norm = 1.0 - b + b * dl / avg if avg > 0 else 1.0
    return w * (tf * (k1 + 1.0)) / (tf + k1 * norm)


def searcher_for(index: InvertedIndex, params: Bm25Params = DEFAULT_PARAMS) -> Bm25Searcher:
    """Return the cached searcher for ``(index, params)``."""
    cache = index._searchers
    if params not in cache:
        cache[params] = Bm25Searcher(index, params)
    return cache[params]


def bm25_score(
    query_terms: Iterable[str],
    doc_id: str,
    index: InvertedIndex,
    params: Bm25Params = DEFAULT_PARAMS,
) -> float:
    counts = index.term_counts(doc_id)
    dl = float(index.doc_lengths[doc_id])
    score = 0.0
    for term in sorted(set(query_terms)):
        tf = counts.get(term)
        if not tf:
            continue
        w = idf(index.doc_freq[term], index.doc_count)
        score += term_impact(w, float(tf), dl, index.avg_doc_length, params.k1, params.b)
    return score


def retrieve_topk(
    query_terms: Iterable[str],
    index: InvertedIndex,
    params: Bm25Params = DEFAULT_PARAMS,
    k: int = 10,
) -> RankedList:
    """Top ``k`` documents by BM25; ties go to the smaller doc_id.

    Documents matching no query term are never returned, so the empty
    query yields an empty list.
    """
    return searcher_for(index, params).retrieve(query_terms, k)


def tfidf_weight(term: str, doc_set: Iterable[str], index: InvertedIndex) -> float:
    """Total term frequency over ``doc_set`` times BM25 idf; 0 for unknown terms."""
    df = index.doc_freq.get(term)
    if not df:
        return 0.0
    total = 0
    for doc_id in doc_set:
        total += index.term_counts(doc_id).get(term, 0)
    return total * idf(df, index.doc_count)


def check_docs_known(doc_ids: Iterable[str], index: InvertedIndex) -> None:
    missing = index.missing(doc_ids)
    if missing:
        raise CorpusError(f"documents not in the corpus: {', '.join(missing)}")
