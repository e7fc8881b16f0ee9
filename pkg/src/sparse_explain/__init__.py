"""Explain a black-box ranker with an equivalent sparse (BM25) query."""

from .analysis import tokenize
from .blackbox import (
    Bm25Ranker,
    HashedEmbeddingRanker,
    RunFileRanker,
    hashed_embedding_ranker,
    hidden_query_oracle,
    load_run,
    write_run,
)
from .bm25 import Bm25Params, RankedList, retrieve_topk
from .evaluation import average_precision, build_report, load_qrels, ndcg_at_k
from .explainer import ExplanationResult, SearchConfig, bfs_explain, greedy_explain
from .index import InvertedIndex, build_index, vocabulary_of
from .kernels import BACKEND
from .overlap import fidelity, jaccard_at_k, rbo_at_k
from .rm3 import expand_query_rm3, rm3_weights

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "Bm25Params",
    "Bm25Ranker",
    "ExplanationResult",
    "HashedEmbeddingRanker",
    "InvertedIndex",
    "RankedList",
    "RunFileRanker",
    "SearchConfig",
    "average_precision",
    "bfs_explain",
    "build_index",
    "build_report",
    "expand_query_rm3",
    "fidelity",
    "greedy_explain",
    "hashed_embedding_ranker",
    "hidden_query_oracle",
    "jaccard_at_k",
    "load_qrels",
    "load_run",
    "ndcg_at_k",
    "rbo_at_k",
    "retrieve_topk",
    "rm3_weights",
    "tokenize",
    "vocabulary_of",
    "write_run",
]
