"""Hot loops of the search: BM25 top-k accumulation and list overlap.

The compiled ``_ckernels`` extension is used when it has been built;
otherwise the pure-Python ``_pykernels`` module is used. Setting
``SPARSE_EXPLAIN_PURE_PYTHON=1`` forces the fallback. ``BACKEND`` names
the active implementation.
"""

import os

from . import _pykernels

try:
    if os.environ.get("SPARSE_EXPLAIN_PURE_PYTHON", "") not in ("", "0"):
        raise ImportError("pure-Python kernels requested")
    from . import _ckernels as _impl

    BACKEND = "cython"
except ImportError:
    _impl = _pykernels
    BACKEND = "python"

bm25_topk = _impl.bm25_topk
rbo = _impl.rbo
jaccard = _impl.jaccard


def available_backends():
    """Map backend name to module for every importable implementation."""
    out = {"python": _pykernels}
    try:
        from . import _ckernels
    except ImportError:
        pass
    else:
        out["cython"] = _ckernels
    return out


__all__ = ["BACKEND", "available_backends", "bm25_topk", "jaccard", "rbo"]
