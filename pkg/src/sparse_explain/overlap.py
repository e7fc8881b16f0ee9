"""Fidelity between two ranked lists: Jaccard and rank-biased overlap at k.

RBO here is the normalized truncated form: the weighted average agreement
over the first ``k`` ranks, divided by the total weight, so two identical
lists score exactly 1 at any depth. This is biased upward relative to the
extrapolated RBO usually reported for indefinite rankings.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

from . import kernels
from .bm25 import RankedList

DEFAULT_RBO_P = 0.9

ListLike = Union[RankedList, Sequence[str]]


@dataclass(frozen=True)
class FidelityScore:
    jaccard: float
    rbo: float
    k: int

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        for name in ("jaccard", "rbo"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} outside [0, 1]")


def _ids(x: ListLike) -> list[str]:
    return x.doc_ids if isinstance(x, RankedList) else list(x)


def _encode(a: ListLike, b: ListLike):
    # the kernels compare integer codes
    codes: dict[str, int] = {}
    ea = [codes.setdefault(d, len(codes)) for d in _ids(a)]
    eb = [codes.setdefault(d, len(codes)) for d in _ids(b)]
    return ea, eb


def jaccard_at_k(a: ListLike, b: ListLike, k: int = 10) -> float:
    ea, eb = _encode(a, b)
    return kernels.jaccard(ea, eb, k)


def rbo_at_k(a: ListLike, b: ListLike, k: int = 10, p: float = DEFAULT_RBO_P) -> float:
    """Normalized truncated RBO with persistence ``p``.

    >>> round(rbo_at_k(["a", "b", "c"], ["a", "c", "b"], k=3, p=0.9), 4)
    0.8339
    """
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must be in (0, 1), got {p}")
    ea, eb = _encode(a, b)
    return kernels.rbo(ea, eb, k, p)


def fidelity(a: ListLike, b: ListLike, k: int = 10, p: float = DEFAULT_RBO_P) -> FidelityScore:
    return FidelityScore(jaccard_at_k(a, b, k), rbo_at_k(a, b, k, p), k)
