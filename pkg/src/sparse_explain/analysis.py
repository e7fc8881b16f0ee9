"""Text analysis: lowercase, split on non-alphanumerics, drop stopwords, Porter-stem."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources

from nltk.stem.porter import PorterStemmer

_TOKEN_RE = re.compile(r"[a-z0-9]+")
_STEMMER = PorterStemmer(mode=PorterStemmer.ORIGINAL_ALGORITHM)


def load_stopwords() -> frozenset[str]:
    """Read the shipped English stopword list."""
    text = resources.files(__package__).joinpath("stopwords.txt").read_text("utf-8")
    words = (line.strip() for line in text.splitlines())
    return frozenset(w for w in words if w and not w.startswith("#"))


STOPWORDS = load_stopwords()


@lru_cache(maxsize=1 << 16)
def stem(word: str) -> str:
    # Iterate to a fixed point so the pipeline is idempotent on its own output.
    while True:
        stemmed = _STEMMER.stem(word)
        if stemmed == word:
            return word
        word = stemmed


@dataclass(frozen=True)
class Analyzer:
    """Analysis pipeline configuration.

    The defaults are the pipeline used everywhere in the package; the knobs
    exist so tests can switch individual stages off.
    """

    stopwords: frozenset[str] = field(default=STOPWORDS)
    stemming: bool = True

    def __call__(self, text: str) -> list[str]:
        out = []
        for token in _TOKEN_RE.findall(text.lower()):
            if token in self.stopwords:
                continue
            if self.stemming:
                token = stem(token)
                # a stem can collide with a stopword ("others" -> "other")
                if token in self.stopwords:
                    continue
            out.append(token)
        return out


DEFAULT_ANALYZER = Analyzer()


def tokenize(text: str, pipeline: Analyzer = DEFAULT_ANALYZER) -> list[str]:
    """Turn raw text into the list of stemmed index terms.

    >>> tokenize("durable medical equipment")
    ['durabl', 'medic', 'equip']
    """
    return pipeline(text)
