"""Seeded synthetic sparse corpora with a skewed term distribution."""

from __future__ import annotations

import numpy as np

from .sparse import SparseVector


def _term_probs(vocab_size: int, skew: float) -> np.ndarray:
    p = 1.0 / np.arange(1, vocab_size + 1) ** skew
    return p / p.sum()


def random_corpus(
    num_docs: int,
    vocab_size: int,
    seed: int = 0,
    min_nnz: int = 1,
    max_nnz: int = 32,
    skew: float = 0.8,
    prefix: str = "d",
) -> list[tuple[str, SparseVector]]:
    """Documents with Zipf-like term frequencies and log1p-scaled weights."""
    rng = np.random.default_rng(seed)
    probs = _term_probs(vocab_size, skew)
    perm = rng.permutation(vocab_size)
    docs = []
    for i in range(num_docs):
        n = int(rng.integers(min_nnz, min(max_nnz, vocab_size) + 1))
        terms = perm[rng.choice(vocab_size, size=n, replace=False, p=probs)]
        weights = np.log1p(rng.exponential(2.0, size=n)) + 1e-3
        docs.append((f"{prefix}{i}", SparseVector.from_pairs(zip(terms.tolist(), weights.tolist()), vocab_size)))
    return docs


def queries_from_corpus(
    corpus: list[tuple[str, SparseVector]],
    num_queries: int,
    seed: int = 0,
    terms_per_query: int = 8,
    noise_terms: int = 2,
) -> list[SparseVector]:
    """Queries built from a random document's heaviest terms plus a few random terms."""
    rng = np.random.default_rng(seed)
    vocab_size = corpus[0][1].vocab_size
    out = []
    for _ in range(num_queries):
        _, doc = corpus[int(rng.integers(len(corpus)))]
        top = np.argsort(-doc.weights, kind="stable")[:terms_per_query]
        pairs = {int(doc.terms[i]): float(doc.weights[i]) * rng.uniform(0.5, 1.5) for i in top}
        for t in rng.integers(0, vocab_size, size=noise_terms).tolist():
            pairs.setdefault(int(t), float(rng.uniform(0.1, 1.0)))
        out.append(SparseVector.from_pairs(pairs.items(), vocab_size))
    return out


def topical_corpus(
    num_docs: int,
    vocab_size: int,
    seed: int = 0,
    num_topics: int = 64,
    topic_terms: int = 200,
    min_nnz: int = 16,
    max_nnz: int = 96,
    topic_share: float = 0.7,
    skew: float = 0.8,
    prefix: str = "d",
) -> list[tuple[str, SparseVector]]:
    """Documents mixing one topic's term pool with background vocabulary.

    Topic terms are drawn from a per-topic subset and weighted higher than
    background terms, mimicking the co-occurrence structure of encoder output.
    """
    rng = np.random.default_rng(seed)
    background = _term_probs(vocab_size, skew)
    bg_perm = rng.permutation(vocab_size)
    pools = [rng.choice(vocab_size, size=min(topic_terms, vocab_size), replace=False) for _ in range(num_topics)]
    pool_probs = _term_probs(min(topic_terms, vocab_size), skew)
    docs = []
    for i in range(num_docs):
        pool = pools[int(rng.integers(num_topics))]
        n = int(rng.integers(min_nnz, min(max_nnz, vocab_size) + 1))
        n_topic = min(int(round(n * topic_share)), pool.size)
        picked = dict.fromkeys(pool[rng.choice(pool.size, size=n_topic, replace=False, p=pool_probs)].tolist())
        weights = {t: float(np.log1p(rng.exponential(4.0))) + 0.2 for t in picked}
        for t in bg_perm[rng.choice(vocab_size, size=n - n_topic, replace=False, p=background)].tolist():
            weights.setdefault(t, float(np.log1p(rng.exponential(1.0))) + 1e-3)
        docs.append((f"{prefix}{i}", SparseVector.from_pairs(weights.items(), vocab_size)))
    return docs
