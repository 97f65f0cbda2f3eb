import numpy as np
import pytest
from hypothesis import settings

from laconic.sparse import SparseVector

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


def random_vector(rng: np.random.Generator, vocab_size: int, max_nnz: int = 20) -> SparseVector:
    n = int(rng.integers(0, min(max_nnz, vocab_size) + 1))
    terms = rng.choice(vocab_size, size=n, replace=False)
    weights = rng.random(n).astype(np.float32) + np.float32(0.01)
    return SparseVector.from_pairs(zip(terms.tolist(), weights.tolist()), vocab_size)


def random_corpus(rng, n_docs, vocab_size, max_nnz=20, prefix="d"):
    return [(f"{prefix}{i}", random_vector(rng, vocab_size, max_nnz)) for i in range(n_docs)]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
