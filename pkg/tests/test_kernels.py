import numpy as np
import pytest

from sparse_explain import kernels
from sparse_explain.bm25 import searcher_for
from sparse_explain.index import build_index

from conftest import PLAIN, random_corpus

BACKENDS = kernels.available_backends()


def test_python_fallback_always_available():
    assert "python" in BACKENDS
    assert kernels.BACKEND in BACKENDS


@pytest.mark.parametrize("name", sorted(BACKENDS))
def test_bm25_topk_parity(name):
    ref = BACKENDS["python"]
    impl = BACKENDS[name]
    rng = np.random.default_rng(11)
    for _ in range(50):
        docs, vocab = random_corpus(rng, int(rng.integers(1, 60)), 10, 6)
        index = build_index(docs, PLAIN)
        s = searcher_for(index)
        ids = s.term_ids(rng.choice(vocab, size=int(rng.integers(0, 5))).tolist())
        k = int(rng.integers(1, 20))
        args = (ids, index.post_offsets, index.post_docs, s.impacts, index.doc_count, k)
        d0, s0 = ref.bm25_topk(*args)
        d1, s1 = impl.bm25_topk(*args)
        assert d0.tolist() == d1.tolist()
        assert s0.tolist() == s1.tolist()  # bit-identical


@pytest.mark.parametrize("name", sorted(BACKENDS))
def test_overlap_parity(name):
    ref = BACKENDS["python"]
    impl = BACKENDS[name]
    rng = np.random.default_rng(3)
    for _ in range(300):
        a = rng.permutation(15)[: rng.integers(0, 12)].astype(np.int64)
        b = rng.permutation(15)[: rng.integers(0, 12)].astype(np.int64)
        k = int(rng.integers(1, 12))
        assert impl.rbo(a, b, k, 0.9) == ref.rbo(a, b, k, 0.9)
        assert impl.jaccard(a, b, k) == ref.jaccard(a, b, k)


def test_identical_lists_exactly_one():
    for impl in BACKENDS.values():
        for n in range(1, 11):
            a = np.arange(n, dtype=np.int64)
            assert impl.rbo(a, a, 10, 0.9) == 1.0
