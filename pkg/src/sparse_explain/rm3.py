"""RM3 relevance-model weights and RM3 query expansion."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

from .bm25 import DEFAULT_PARAMS, Bm25Params, RankedList, bm25_score, check_docs_known, retrieve_topk
from .index import InvertedIndex, vocabulary_of

DEFAULT_LAMBDA = 0.5
DEFAULT_EXPANSION_TERMS = 10
DEFAULT_FEEDBACK_DOCS = 10


@dataclass(frozen=True)
class TermDistribution:
    weights: dict[str, float]
    source_docs: tuple[str, ...] = field(default=())

    def __post_init__(self):
        if any(w < 0 for w in self.weights.values()):
            raise ValueError("negative term weight")
        if self.weights and abs(sum(self.weights.values()) - 1.0) > 1e-9:
            raise ValueError("term weights do not sum to 1")

    def top(self, n: int) -> list[str]:
        """The ``n`` heaviest terms; ties resolved lexicographically."""
        ranked = sorted(self.weights.items(), key=lambda kv: (-kv[1], kv[0]))
        return [t for t, _ in ranked[:n]]


def _softmax(xs: list[float]) -> list[float]:
    m = max(xs)
    exps = [math.exp(x - m) for x in xs]
    z = sum(exps)
    return [e / z for e in exps]


def rm3_weights(
    query_terms: Iterable[str],
    feedback_list: RankedList,
    index: InvertedIndex,
    lam: float = DEFAULT_LAMBDA,
    candidate_vocab: Iterable[str] | None = None,
    params: Bm25Params = DEFAULT_PARAMS,
) -> TermDistribution:
    """Interpolate the query's MLE model with the RM1 relevance model.

    The document posterior P(Q|D) is the softmax of the BM25 scores of the
    feedback documents for the query. The result is restricted to
    ``candidate_vocab`` (default: the feedback vocabulary) and renormalized;
    if nothing survives with positive mass it is uniform over the vocabulary.
    """
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lambda must be in [0, 1], got {lam}")
    docs = feedback_list.doc_ids
    if not docs:
        raise ValueError("RM3 needs at least one feedback document")
    check_docs_known(docs, index)
    query = sorted(set(query_terms))
    vocab = sorted(set(candidate_vocab)) if candidate_vocab is not None else vocabulary_of(docs, index)
    if not vocab:
        return TermDistribution({}, tuple(docs))

    posterior = _softmax([bm25_score(query, d, index, params) for d in docs])
    rm1 = dict.fromkeys(vocab, 0.0)
    for d, p_qd in zip(docs, posterior):
        dl = index.doc_lengths[d]
        if dl == 0:
            continue
        for term, tf in index.term_counts(d).items():
            if term in rm1:
                rm1[term] += tf / dl * p_qd
    z_rm1 = sum(rm1.values())

    p_query = 1.0 / len(query) if query else 0.0
    qset = set(query)
    mixed = {}
    for term in vocab:
        w = lam * (rm1[term] / z_rm1) if z_rm1 > 0 else 0.0
        if term in qset:
            w += (1.0 - lam) * p_query
        mixed[term] = w
    z = sum(mixed.values())
    if z <= 0:
        return TermDistribution({t: 1.0 / len(vocab) for t in vocab}, tuple(docs))
    return TermDistribution({t: w / z for t, w in mixed.items()}, tuple(docs))


def expand_query_rm3(
    query_terms: Iterable[str], dist: TermDistribution, n_terms: int = DEFAULT_EXPANSION_TERMS
) -> frozenset[str]:
    if n_terms < 1:
        raise ValueError(f"n_terms must be >= 1, got {n_terms}")
    return frozenset(query_terms) | frozenset(dist.top(n_terms))


def rm3_expanded_query(
    query_terms: Iterable[str],
    index: InvertedIndex,
    params: Bm25Params = DEFAULT_PARAMS,
    lam: float = DEFAULT_LAMBDA,
    n_terms: int = DEFAULT_EXPANSION_TERMS,
    feedback_docs: int = DEFAULT_FEEDBACK_DOCS,
) -> frozenset[str]:
    """Model-agnostic baseline: classic PRF over BM25's own first-pass list."""
    query = frozenset(query_terms)
    feedback = retrieve_topk(query, index, params, feedback_docs)
    if not len(feedback):
        return query
    dist = rm3_weights(query, feedback, index, lam, None, params)
    return expand_query_rm3(query, dist, n_terms)
