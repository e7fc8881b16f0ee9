"""Pure-Python kernels. Semantics are the reference for ``_ckernels.pyx``."""

from __future__ import annotations

import heapq

import numpy as np


def bm25_topk(term_ids, offsets, post_docs, impacts, n_docs, k):
    """Accumulate per-posting impacts for ``term_ids`` and return the top ``k``.

    Terms are accumulated in the order given. Only documents matching at
    least one term are candidates. Ties go to the lower document number.
    Returns ``(doc_numbers int64, scores float64)``.
    """
    scores: dict[int, float] = {}
    for t in term_ids:
        lo, hi = int(offsets[t]), int(offsets[t + 1])
        for d, w in zip(post_docs[lo:hi].tolist(), impacts[lo:hi].tolist()):
            scores[d] = scores.get(d, 0.0) + w
    best = heapq.nsmallest(k, scores.items(), key=lambda kv: (-kv[1], kv[0]))
    docs = np.fromiter((d for d, _ in best), dtype=np.int64, count=len(best))
    vals = np.fromiter((s for _, s in best), dtype=np.float64, count=len(best))
    return docs, vals


def rbo(a, b, k, p):
    """Normalized truncated RBO over the first ``k`` ranks.

    The sum runs to depth ``min(k, max(len(a), len(b)))``; positions past
    the end of the shorter list never match.
    """
    na, nb = min(len(a), k), min(len(b), k)
    depth = max(na, nb)
    if depth == 0:
        return 0.0
    seen_a: set = set()
    seen_b: set = set()
    overlap = 0
    num = 0.0
    den = 0.0
    weight = 1.0
    for i in range(depth):
        x = a[i] if i < na else None
        y = b[i] if i < nb else None
        if x is not None and y is not None and x == y:
            overlap += 1
        else:
            if x is not None:
                if x in seen_b:
                    overlap += 1
                seen_a.add(x)
            if y is not None:
                if y in seen_a:
                    overlap += 1
                seen_b.add(y)
        num += weight * (overlap / (i + 1))
        den += weight
        weight *= p
    return num / den


def jaccard(a, b, k):
    sa, sb = set(a[:k]), set(b[:k])
    union = len(sa | sb)
    if union == 0:
        return 0.0
    return len(sa & sb) / union
