"""Document ingestion and the immutable inverted index."""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from .analysis import DEFAULT_ANALYZER, Analyzer

INDEX_FORMAT = 1


class CorpusError(ValueError):
    """Raised for malformed corpora: duplicate IDs, bad JSONL lines, unknown documents."""


@dataclass(frozen=True)
class Document:
    doc_id: str
    raw_text: str
    terms: tuple[str, ...]

    @property
    def length(self) -> int:
        return len(self.terms)


class InvertedIndex:
    """Postings, document lengths and collection statistics.

    Documents are numbered in ascending ``doc_id`` order, so comparing
    internal document numbers is the same as comparing IDs. Term numbers
    follow lexicographic term order. Postings are kept twice: as Python
    dicts for the public accessors and as CSR arrays for the kernels.
    """

    def __init__(self, documents: Iterable[Document]):
        docs = sorted(documents, key=lambda d: d.doc_id)
        self.documents: tuple[Document, ...] = tuple(docs)
        self.doc_ids: tuple[str, ...] = tuple(d.doc_id for d in docs)
        self._doc_number = {doc_id: i for i, doc_id in enumerate(self.doc_ids)}
        self.doc_count = len(docs)
        self.doc_lengths = {d.doc_id: d.length for d in docs}
        self.length_array = np.array([d.length for d in docs], dtype=np.float64)
        self.avg_doc_length = float(self.length_array.mean()) if docs else 0.0
        self.doc_term_counts: tuple[dict[str, int], ...] = tuple(
            dict(Counter(d.terms)) for d in docs
        )

        postings: dict[str, list[tuple[str, int]]] = {}
        for doc, counts in zip(docs, self.doc_term_counts):
            for term, tf in counts.items():
                postings.setdefault(term, []).append((doc.doc_id, tf))
        self.vocabulary: tuple[str, ...] = tuple(sorted(postings))
        self.postings = {t: postings[t] for t in self.vocabulary}
        self.term_ids = {t: i for i, t in enumerate(self.vocabulary)}
        self.collection_term_counts = {
            t: sum(tf for _, tf in plist) for t, plist in self.postings.items()
        }
        self.doc_freq = {t: len(plist) for t, plist in self.postings.items()}

        offsets = np.zeros(len(self.vocabulary) + 1, dtype=np.int64)
        for i, t in enumerate(self.vocabulary):
            offsets[i + 1] = offsets[i] + len(self.postings[t])
        self.post_offsets = offsets
        self.post_docs = np.fromiter(
            (self._doc_number[d] for t in self.vocabulary for d, _ in self.postings[t]),
            dtype=np.int32,
            count=int(offsets[-1]),
        )
        self.post_tfs = np.fromiter(
            (tf for t in self.vocabulary for _, tf in self.postings[t]),
            dtype=np.float64,
            count=int(offsets[-1]),
        )
        self._searchers: dict = {}

    def __len__(self) -> int:
        return self.doc_count

    def __contains__(self, doc_id: str) -> bool:
        return doc_id in self._doc_number

    def doc_number(self, doc_id: str) -> int:
        try:
            return self._doc_number[doc_id]
        except KeyError:
            raise CorpusError(f"unknown doc_id {doc_id!r}") from None

    def document(self, doc_id: str) -> Document:
        return self.documents[self.doc_number(doc_id)]

    def term_counts(self, doc_id: str) -> dict[str, int]:
        return self.doc_term_counts[self.doc_number(doc_id)]

    def missing(self, doc_ids: Iterable[str]) -> list[str]:
        """IDs from ``doc_ids`` that are not in the index, in input order."""
        return [d for d in doc_ids if d not in self._doc_number]

    # -- serialization -------------------------------------------------

    def to_json(self) -> str:
        payload = {
            "format": INDEX_FORMAT,
            "documents": [
                {"doc_id": d.doc_id, "text": d.raw_text, "terms": list(d.terms)}
                for d in self.documents
            ],
        }
        return json.dumps(payload, ensure_ascii=False, separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str) -> "InvertedIndex":
        payload = json.loads(text)
        if payload.get("format") != INDEX_FORMAT:
            raise CorpusError(f"unsupported index format {payload.get('format')!r}")
        return cls(
            Document(d["doc_id"], d["text"], tuple(d["terms"]))
            for d in payload["documents"]
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json() + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "InvertedIndex":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


def build_index(
    docs: Iterable[tuple[str, str]], analyzer: Analyzer = DEFAULT_ANALYZER
) -> InvertedIndex:
    """Tokenize ``(doc_id, raw_text)`` pairs and index them.

    Documents whose text analyzes to nothing are kept with length 0.
    """
    seen: set[str] = set()
    documents = []
    for doc_id, text in docs:
        if doc_id in seen:
            raise CorpusError(f"duplicate doc_id {doc_id!r}")
        seen.add(doc_id)
        documents.append(Document(doc_id, text, tuple(analyzer(text))))
    return InvertedIndex(documents)


def vocabulary_of(doc_ids: Iterable[str], index: InvertedIndex) -> list[str]:
    """Distinct terms of the given documents, sorted lexicographically."""
    doc_ids = list(doc_ids)
    missing = index.missing(doc_ids)
    if missing:
        raise CorpusError(f"documents not in the corpus: {', '.join(missing)}")
    vocab: set[str] = set()
    for doc_id in doc_ids:
        vocab.update(index.term_counts(doc_id))
    return sorted(vocab)


def read_corpus_jsonl(path: str | Path) -> Iterator[tuple[str, str]]:
    """Yield ``(doc_id, text)`` from a JSONL file of ``{"doc_id", "text"}`` objects."""
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                doc_id, text = obj["doc_id"], obj["text"]
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise CorpusError(f"{path}:{lineno}: bad corpus line ({exc})") from None
            if not isinstance(doc_id, str) or not isinstance(text, str):
                raise CorpusError(f"{path}:{lineno}: doc_id and text must be strings")
            yield doc_id, text


def write_corpus_jsonl(path: str | Path, docs: Iterable[tuple[str, str]]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for doc_id, text in docs:
            fh.write(json.dumps({"doc_id": doc_id, "text": text}, ensure_ascii=False))
            fh.write("\n")


def read_topics_tsv(path: str | Path) -> dict[str, str]:
    """Parse ``qid<TAB>query text`` lines."""
    topics: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            qid, sep, text = line.partition("\t")
            if not sep or not qid:
                raise CorpusError(f"{path}:{lineno}: expected 'qid<TAB>query'")
            if qid in topics:
                raise CorpusError(f"{path}:{lineno}: duplicate qid {qid!r}")
            topics[qid] = text
    return topics


def write_topics_tsv(path: str | Path, topics: dict[str, str]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for qid, text in topics.items():
            fh.write(f"{qid}\t{text}\n")
