import numpy as np
import pytest

from sparse_explain.analysis import Analyzer
from sparse_explain.index import build_index

# analyzer for hand-checked examples: 'a' is the only stopword, no stemming
PLAIN = Analyzer(frozenset({"a"}), stemming=False)


@pytest.fixture
def cat_index():
    return build_index([("d1", "a cat"), ("d2", "a cat cat")], PLAIN)


def random_corpus(rng: np.random.Generator, n_docs: int, vocab_size: int = 12, max_len: int = 8):
    vocab = [f"w{i}" for i in range(vocab_size)]
    docs = []
    for i in range(n_docs):
        n = int(rng.integers(0, max_len + 1))
        docs.append((f"doc{i:03d}", " ".join(rng.choice(vocab, size=n).tolist())))
    return docs, vocab


@pytest.fixture
def small_random_index():
    rng = np.random.default_rng(5)
    docs, vocab = random_corpus(rng, 40, 15, 10)
    return build_index(docs, PLAIN), vocab


# one line per acceptance criterion, printed after the run
ACCEPTANCE: dict[str, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(ACCEPTANCE, key=lambda n: int(n.split()[0][1:])):
        ok, detail = ACCEPTANCE[name]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
