"""Seeded synthetic benchmark: a topical corpus plus two black-box topic suites.

* ``oracle`` topics: the black box is BM25 run with a hidden 2-4 term query,
  part of the topic query plus terms a relevance model draws from the
  candidate vocabulary, so an exact equivalent query exists.
* ``hashed`` topics: the black box is the hashed-embedding ranker.

Hashed-suite qrels are derived from the black box's own top 10 by rank band.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .analysis import tokenize
from .blackbox import HashedEmbeddingRanker, hidden_query_oracle, write_run
from .bm25 import DEFAULT_PARAMS, RankedList, retrieve_topk
from .index import InvertedIndex, build_index, vocabulary_of, write_corpus_jsonl, write_topics_tsv
from .rm3 import rm3_weights

_ONSETS = ["b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "br", "kl", "st", "tr"]
_VOWELS = ["a", "i", "o", "u"]
_CODAS = ["", "", "k", "m", "n", "r", "t", "x"]
_FILLERS = ["the", "of", "and", "a", "to", "in", "is", "with", "for", "on"]

#: ranks 1-3 -> 3, 4-6 -> 2, 7-10 -> 1; everything else unjudged (0)
GRADE_BANDS = ((3, 3), (6, 2), (10, 1))


@dataclass(frozen=True)
class BenchConfig:
    n_docs: int = 1000
    n_topics_latent: int = 40
    words_per_topic: int = 30
    background_vocab: int = 1500
    doc_len: tuple[int, int] = (30, 90)
    topic_word_share: float = 0.55
    n_oracle_topics: int = 25
    n_hashed_topics: int = 25
    hashed_dim: int = 384
    hashed_seed: int = 17
    k: int = 10
    seed: int = 0


@dataclass
class Benchmark:
    docs: list[tuple[str, str]]
    index: InvertedIndex
    topics: dict[str, str]  # qid -> query text
    suite: dict[str, str]  # qid -> "oracle" | "hashed"
    hidden: dict[str, tuple[str, ...]]  # oracle qid -> hidden terms
    runs: dict[str, RankedList]  # qid -> black-box top-k
    qrels: dict[str, dict[str, int]] = field(default_factory=dict)
    config: BenchConfig = field(default_factory=BenchConfig)

    def qids(self, suite: str | None = None) -> list[str]:
        return sorted(q for q in self.topics if suite is None or self.suite[q] == suite)

    def save(self, out_dir: str | Path) -> dict[str, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = {
            "corpus": out / "corpus.jsonl",
            "topics": out / "topics.tsv",
            "run": out / "blackbox.run",
            "qrels": out / "qrels.txt",
            "hidden": out / "hidden.tsv",
            "suites": out / "suites.tsv",
        }
        write_corpus_jsonl(paths["corpus"], self.docs)
        write_topics_tsv(paths["topics"], {q: self.topics[q] for q in self.qids()})
        write_run(paths["run"], self.runs, tag="synthetic")
        with open(paths["qrels"], "w", encoding="utf-8") as fh:
            for qid in sorted(self.qrels):
                for doc_id, grade in sorted(self.qrels[qid].items()):
                    fh.write(f"{qid} 0 {doc_id} {grade}\n")
        with open(paths["hidden"], "w", encoding="utf-8") as fh:
            for qid in sorted(self.hidden):
                fh.write(f"{qid}\t{' '.join(self.hidden[qid])}\n")
        with open(paths["suites"], "w", encoding="utf-8") as fh:
            for qid in self.qids():
                fh.write(f"{qid}\t{self.suite[qid]}\n")
        return paths


def _make_words(rng: np.random.Generator, n: int) -> list[str]:
    words: list[str] = []
    seen: set[str] = set()
    while len(words) < n:
        n_syll = int(rng.integers(2, 4))
        w = "".join(
            _ONSETS[rng.integers(len(_ONSETS))] + _VOWELS[rng.integers(len(_VOWELS))]
            for _ in range(n_syll)
        ) + _CODAS[rng.integers(len(_CODAS))]
        # keep only words the analyzer maps to themselves
        if w in seen or tokenize(w) != [w]:
            continue
        seen.add(w)
        words.append(w)
    return words


def _zipf(n: int, s: float = 1.0) -> np.ndarray:
    w = 1.0 / np.arange(1, n + 1) ** s
    return w / w.sum()


def grades_from_ranking(ranking: RankedList) -> dict[str, int]:
    grades = {}
    for rank, doc_id in enumerate(ranking.doc_ids, 1):
        for upto, grade in GRADE_BANDS:
            if rank <= upto:
                grades[doc_id] = grade
                break
    return grades


def generate_corpus(cfg: BenchConfig, rng: np.random.Generator):
    n_topic_words = cfg.n_topics_latent * cfg.words_per_topic
    words = _make_words(rng, n_topic_words + cfg.background_vocab)
    topic_words = [
        words[i * cfg.words_per_topic : (i + 1) * cfg.words_per_topic]
        for i in range(cfg.n_topics_latent)
    ]
    background = words[n_topic_words:]
    bg_p = _zipf(len(background))
    tw_p = _zipf(cfg.words_per_topic, 0.8)
    width = len(str(cfg.n_docs - 1))
    docs = []
    for i in range(cfg.n_docs):
        n_mix = int(rng.integers(1, 3))
        mix = rng.choice(cfg.n_topics_latent, size=n_mix, replace=False)
        length = int(rng.integers(cfg.doc_len[0], cfg.doc_len[1] + 1))
        tokens = []
        for _ in range(length):
            r = rng.random()
            if r < cfg.topic_word_share:
                z = mix[rng.integers(n_mix)]
                tokens.append(topic_words[z][rng.choice(cfg.words_per_topic, p=tw_p)])
            elif r < cfg.topic_word_share + 0.15:
                tokens.append(_FILLERS[rng.integers(len(_FILLERS))])
            else:
                tokens.append(background[rng.choice(len(background), p=bg_p)])
        docs.append((f"d{i:0{width}d}", " ".join(tokens)))
    return docs, topic_words


def generate_benchmark(cfg: BenchConfig = BenchConfig()) -> Benchmark:
    rng = np.random.default_rng(cfg.seed)
    docs, topic_words = generate_corpus(cfg, rng)
    index = build_index(docs)
    params = DEFAULT_PARAMS
    topics: dict[str, str] = {}
    suite: dict[str, str] = {}
    hidden: dict[str, tuple[str, ...]] = {}
    runs: dict[str, RankedList] = {}
    qrels: dict[str, dict[str, int]] = {}

    def topic_query(z: int) -> list[str]:
        n = int(rng.integers(2, 4))
        return sorted(rng.choice(topic_words[z], size=n, replace=False).tolist())

    n = 0
    while len(hidden) < cfg.n_oracle_topics:
        z = int(rng.integers(cfg.n_topics_latent))
        query = topic_query(z)
        first = retrieve_topk(query, index, params, cfg.k)
        if len(first) < cfg.k:
            continue
        vocab = vocabulary_of(first.doc_ids, index)
        # a query-expansion black box: part of the query plus terms a
        # relevance model ties to it, 2-4 terms in all
        size = int(rng.integers(2, 5))
        n_keep = int(rng.integers(1, min(len(query), size - 1) + 1))
        kept = rng.choice(query, size=n_keep, replace=False).tolist()
        rm = rm3_weights(query, first, index, 1.0, vocab, params).weights
        pool = [t for t in vocab if t not in kept]
        w = np.array([rm[t] for t in pool])
        extra = rng.choice(pool, size=size - n_keep, replace=False, p=w / w.sum()).tolist()
        terms = tuple(sorted(kept + extra))
        oracle = hidden_query_oracle(terms, index, params, cfg.k)
        target = oracle.rank(query)
        # the hidden query must itself be a reachable state
        if len(target) < cfg.k or not set(terms) <= set(vocabulary_of(target.doc_ids, index)):
            continue
        qid = f"o{n:03d}"
        n += 1
        topics[qid], suite[qid], hidden[qid], runs[qid] = " ".join(query), "oracle", terms, target

    ranker = HashedEmbeddingRanker(cfg.hashed_dim, cfg.hashed_seed, index, cfg.k)
    n = 0
    while n < cfg.n_hashed_topics:
        query = topic_query(int(rng.integers(cfg.n_topics_latent)))
        target = ranker.rank(query)
        if len(target) < cfg.k:
            continue
        qid = f"h{n:03d}"
        n += 1
        topics[qid], suite[qid], runs[qid] = " ".join(query), "hashed", target
        qrels[qid] = grades_from_ranking(target)
    return Benchmark(docs, index, topics, suite, hidden, runs, qrels, cfg)
