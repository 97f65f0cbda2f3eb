"""Exact impact-ordered inverted index with term-at-a-time scoring."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from ..sparse import ContractError, SparseVector
from . import _kernels
from ._topk import id_ranks


@dataclass(frozen=True)
class Posting:
    doc_ordinal: int
    impact: float


def _check_corpus(corpus: Iterable[tuple[str, SparseVector]], vocab_size: int | None):
    ids: list[str] = []
    vecs: list[SparseVector] = []
    seen: set[str] = set()
    for doc_id, vec in corpus:
        if doc_id in seen:
            raise ContractError(f"duplicate document id {doc_id!r}")
        if vocab_size is None:
            vocab_size = vec.vocab_size
        elif vec.vocab_size != vocab_size:
            raise ContractError(
                f"document {doc_id!r} has vocabulary size {vec.vocab_size}, expected {vocab_size}"
            )
        seen.add(doc_id)
        ids.append(doc_id)
        vecs.append(vec)
    if vocab_size is None:
        raise ContractError("cannot infer vocabulary size from an empty corpus")
    return ids, vecs, vocab_size


def invert(vecs: list[SparseVector], vocab_size: int):
    """CSR posting lists: each term's postings by descending impact, then ordinal."""
    lens = np.fromiter((len(v) for v in vecs), dtype=np.int64, count=len(vecs))
    if lens.sum() == 0:
        return np.zeros(vocab_size + 1, np.int64), np.empty(0, np.uint32), np.empty(0, np.float32)
    terms = np.concatenate([v.terms for v in vecs]).astype(np.int64)
    weights = np.concatenate([v.weights for v in vecs])
    docs = np.repeat(np.arange(len(vecs), dtype=np.int64), lens)
    order = np.lexsort((docs, -weights.astype(np.float64), terms))
    counts = np.bincount(terms, minlength=vocab_size)
    offsets = np.concatenate([[0], np.cumsum(counts)])
    return offsets, docs[order].astype(np.uint32), weights[order]


class InvertedIndex:
    kind = "exact"

    def __init__(self, vocab_size: int, doc_ids: list[str], offsets, post_docs, post_impacts):
        self.vocab_size = int(vocab_size)
        self.doc_ids = list(doc_ids)
        self.offsets = np.asarray(offsets, dtype=np.int64)
        self.post_docs = np.asarray(post_docs, dtype=np.uint32)
        self.post_impacts = np.asarray(post_impacts, dtype=np.float32)
        if self.offsets.shape != (self.vocab_size + 1,):
            raise ContractError("posting offsets do not match vocabulary size")
        if self.post_docs.size and int(self.post_docs.max()) >= len(self.doc_ids):
            raise ContractError("posting refers to an unknown document ordinal")
        self._ranks = id_ranks(self.doc_ids)

    @property
    def doc_count(self) -> int:
        return len(self.doc_ids)

    @property
    def total_postings(self) -> int:
        return int(self.post_docs.size)

    def postings(self, term: int) -> list[Posting]:
        lo, hi = self.offsets[term], self.offsets[term + 1]
        return [Posting(int(d), float(w)) for d, w in zip(self.post_docs[lo:hi], self.post_impacts[lo:hi])]

    def reconstruct(self) -> list[SparseVector]:
        """Forward vectors rebuilt from the postings (ordinal order)."""
        terms = np.repeat(np.arange(self.vocab_size), np.diff(self.offsets))
        order = np.lexsort((terms, self.post_docs))
        docs = self.post_docs[order]
        bounds = np.searchsorted(docs, np.arange(self.doc_count + 1))
        t, w = terms[order], self.post_impacts[order]
        return [
            SparseVector(t[bounds[i] : bounds[i + 1]], w[bounds[i] : bounds[i + 1]], self.vocab_size)
            for i in range(self.doc_count)
        ]


def build_exact(corpus: Iterable[tuple[str, SparseVector]], vocab_size: int | None = None) -> InvertedIndex:
    ids, vecs, vocab_size = _check_corpus(corpus, vocab_size)
    return InvertedIndex(vocab_size, ids, *invert(vecs, vocab_size))


def check_query(vocab_size: int, query: SparseVector, k: int) -> None:
    if k < 1:
        raise ContractError(f"k must be >= 1, got {k}")
    if query.vocab_size != vocab_size:
        raise ContractError(f"query vocabulary {query.vocab_size} != index vocabulary {vocab_size}")


def search_exact(index: InvertedIndex, query: SparseVector, k: int) -> list[tuple[str, float]]:
    check_query(index.vocab_size, query, k)
    if not len(query) or not index.doc_count:
        return []
    ords, scores = _kernels.exact_search(
        query.terms.astype(np.int64),
        query.weights.astype(np.float64),
        index.offsets,
        index.post_docs,
        index.post_impacts,
        index._ranks,
        k,
    )
    return [(index.doc_ids[o], float(s)) for o, s in zip(ords.tolist(), scores.tolist())]
