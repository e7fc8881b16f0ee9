"""Compare the compiled and pure-Python kernels.

    python3 benchmarks/bench_kernels.py [--queries 2000] [--search-topics 8]

Times BM25 top-10 retrieval and RBO on the default synthetic corpus with
each available backend, checks both agree, then runs a few best-first
searches end to end under each backend in a subprocess.
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from sparse_explain import kernels
from sparse_explain.bench import BenchConfig, generate_benchmark
from sparse_explain.bm25 import searcher_for

SEARCH_SNIPPET = """
import sys, time
from sparse_explain import kernels
from sparse_explain.analysis import tokenize
from sparse_explain.bench import BenchConfig, generate_benchmark
from sparse_explain.blackbox import RunFileRanker
from sparse_explain.explainer import SearchConfig, bfs_explain
b = generate_benchmark(BenchConfig(n_hashed_topics=0))
qids = b.qids("oracle")[: int(sys.argv[1])]
cfg = SearchConfig(bfs_max_states=int(sys.argv[2]))
t = time.perf_counter()
states = sum(bfs_explain(tokenize(b.topics[q]), RunFileRanker(b.runs), b.index, cfg, qid=q).states_evaluated for q in qids)
print(kernels.BACKEND, states, time.perf_counter() - t)
"""


def _time(fn, repeat=3):
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--queries", type=int, default=2000)
    ap.add_argument("--search-topics", type=int, default=8)
    ap.add_argument("--search-states", type=int, default=5000)
    args = ap.parse_args()

    bench = generate_benchmark(BenchConfig(n_oracle_topics=1, n_hashed_topics=0))
    index = bench.index
    searcher = searcher_for(index)
    rng = np.random.default_rng(0)
    vocab = len(index.vocabulary)
    queries = [np.unique(rng.integers(0, vocab, size=rng.integers(1, 9))).astype(np.int64) for _ in range(args.queries)]
    pairs = [(rng.permutation(40)[:10].astype(np.int64), rng.permutation(40)[:10].astype(np.int64)) for _ in range(args.queries)]

    backends = kernels.available_backends()
    print(f"corpus: {index.doc_count} docs, {vocab} terms; {args.queries} queries; backends: {', '.join(backends)}")
    results = {}
    for name, mod in backends.items():
        topk = lambda: [mod.bm25_topk(q, index.post_offsets, index.post_docs, searcher.impacts, index.doc_count, 10) for q in queries]
        rbo = lambda: [mod.rbo(a, b, 10, 0.9) for a, b in pairs]
        results[name] = (topk(), rbo())
        t_topk, t_rbo = _time(topk), _time(rbo)
        print(f"{name:>7}: bm25_topk {1e6 * t_topk / len(queries):8.1f} us/query   rbo {1e6 * t_rbo / len(pairs):6.2f} us/pair")
    ref = results["python"]
    for name, (topk, rbo) in results.items():
        same = all(np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1]) for a, b in zip(topk, ref[0]))
        print(f"{name:>7}: identical to python: topk={same} rbo={rbo == ref[1]}")

    print(f"end-to-end best-first search, {args.search_topics} topics, cap {args.search_states} states:")
    for name in backends:
        env = dict(os.environ, SPARSE_EXPLAIN_PURE_PYTHON="1" if name == "python" else "0")
        out = subprocess.run(
            [sys.executable, "-c", SEARCH_SNIPPET, str(args.search_topics), str(args.search_states)],
            env=env, capture_output=True, text=True, check=True,
        ).stdout.split()
        print(f"{out[0]:>7}: {out[1]} states in {float(out[2]):.2f} s")


if __name__ == "__main__":
    main()
