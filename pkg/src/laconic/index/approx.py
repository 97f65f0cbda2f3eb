"""Seismic-style approximate retrieval over statically pruned, blocked posting lists.

Each posting list keeps only its highest-impact fraction, is cut into blocks
of consecutive postings, and every block carries a quantized summary vector
that upper-bounds the kept postings of its documents. At query time a block
is opened only if its summary bound can beat the current k-th best score
(loosened by ``heap_factor``); opened documents are always rescored exactly
from the forward store.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from ..sparse import ContractError, SparseVector
from . import _kernels
from ._topk import id_ranks
from .exact import InvertedIndex, _check_corpus, check_query, invert, search_exact

@dataclass(frozen=True)
class ApproxParams:
    alpha: float = 0.5
    block_size: int = 8
    summary_levels: int = 16
    heap_factor: float = 0.9

    def __post_init__(self):
        if not 0 < self.alpha <= 1:
            raise ContractError(f"alpha must be in (0, 1], got {self.alpha}")
        if int(self.block_size) != self.block_size or self.block_size < 1:
            raise ContractError(f"block_size must be a positive integer, got {self.block_size}")
        if not 2 <= self.summary_levels <= 256:
            raise ContractError(f"summary_levels must be in [2, 256], got {self.summary_levels}")
        if not 0 < self.heap_factor <= 1:
            raise ContractError(f"heap_factor must be in (0, 1], got {self.heap_factor}")


def kept_count(n: int, alpha: float) -> int:
    # round first so e.g. 0.3 * 10 keeps 3, not 4
    return min(n, math.ceil(round(alpha * n, 9)))


def dequantize(codes, scales, levels: int) -> np.ndarray:
    """Level codes back to float32 weights; code ``levels-1`` maps exactly to the scale."""
    codes = np.asarray(codes, dtype=np.float64)
    return ((np.asarray(scales, dtype=np.float64) * codes) / (levels - 1)).astype(np.float32)


def quantize_up(weights: np.ndarray, scales: np.ndarray, levels: int) -> np.ndarray:
    """Smallest level codes whose dequantized value is >= the weight."""
    w = weights.astype(np.float64)
    codes = np.ceil(w * (levels - 1) / scales).clip(0, levels - 1).astype(np.int64)
    low = dequantize(codes, scales, levels) < weights
    while np.any(low):
        codes[low] = np.minimum(codes[low] + 1, levels - 1)
        low = dequantize(codes, scales, levels) < weights
    return codes.astype(np.uint8)


def _csr_rows(indptr: np.ndarray, terms: np.ndarray, weights: np.ndarray):
    """Zero-padded (rows, width) views of a CSR matrix, for gather-style scoring."""
    n = indptr.size - 1
    lens = np.diff(indptr)
    width = int(lens.max()) if n and lens.size else 0
    pad_t = np.zeros((n, max(width, 1)), dtype=np.int64)
    pad_w = np.zeros((n, max(width, 1)), dtype=np.float32)
    if terms.size:
        rows = np.repeat(np.arange(n), lens)
        cols = np.arange(terms.size) - np.repeat(indptr[:-1], lens)
        pad_t[rows, cols] = terms
        pad_w[rows, cols] = weights
    return pad_t, pad_w


def _by_doc(offsets, post_docs, post_w, doc_count: int, vocab_size: int):
    """Regroup term-major postings into doc-major CSR with ascending terms."""
    terms = np.repeat(np.arange(vocab_size, dtype=np.int64), np.diff(offsets))
    order = np.lexsort((terms, post_docs))
    indptr = np.concatenate([[0], np.cumsum(np.bincount(post_docs, minlength=doc_count))]).astype(np.int64)
    return indptr, terms[order].astype(np.uint32), post_w[order]


class ApproxIndex:
    kind = "approx"

    def __init__(
        self,
        vocab_size: int,
        doc_ids: list[str],
        params: ApproxParams,
        fwd_indptr,
        fwd_terms,
        fwd_weights,
        kept_offsets,
        kept_docs,
        kept_impacts,
        block_offsets,
        block_ends,
        sum_indptr,
        sum_terms,
        sum_codes,
        sum_scales,
    ):
        self.vocab_size = int(vocab_size)
        self.doc_ids = list(doc_ids)
        self.params = params
        self.fwd_indptr = np.asarray(fwd_indptr, dtype=np.int64)
        self.fwd_terms = np.asarray(fwd_terms, dtype=np.uint32)
        self.fwd_weights = np.asarray(fwd_weights, dtype=np.float32)
        self.kept_offsets = np.asarray(kept_offsets, dtype=np.int64)
        self.kept_docs = np.asarray(kept_docs, dtype=np.uint32)
        self.kept_impacts = np.asarray(kept_impacts, dtype=np.float32)
        self.block_offsets = np.asarray(block_offsets, dtype=np.int64)
        self.block_ends = np.asarray(block_ends, dtype=np.uint32)
        self.sum_indptr = np.asarray(sum_indptr, dtype=np.int64)
        self.sum_terms = np.asarray(sum_terms, dtype=np.uint32)
        self.sum_codes = np.asarray(sum_codes, dtype=np.uint8)
        self.sum_scales = np.asarray(sum_scales, dtype=np.float32)
        n_blocks = self.block_ends.size
        if self.fwd_indptr.shape != (self.doc_count + 1,):
            raise ContractError("forward store does not match document count")
        if self.kept_offsets.shape != (self.vocab_size + 1,) or self.block_offsets.shape != (self.vocab_size + 1,):
            raise ContractError("per-term tables do not match vocabulary size")
        if self.sum_indptr.shape != (n_blocks + 1,) or self.sum_scales.shape != (n_blocks,):
            raise ContractError("summary tables do not match block count")

        # global [start, end) of each block inside kept_docs
        owner = np.repeat(np.arange(self.vocab_size), np.diff(self.block_offsets))
        ends = self.block_ends.astype(np.int64)
        starts = np.zeros_like(ends)
        if n_blocks:
            starts[1:] = ends[:-1]
            starts[self.block_offsets[:-1][np.diff(self.block_offsets) > 0]] = 0
        starts += self.kept_offsets[owner]
        ends = ends + self.kept_offsets[owner]
        self._block_start, self._block_end = starts, ends
        per_entry_scale = np.repeat(self.sum_scales, np.diff(self.sum_indptr))
        self._sum_vals = dequantize(self.sum_codes, per_entry_scale, params.summary_levels).astype(np.float64)
        self._sum_terms = self.sum_terms.astype(np.int64)
        self._ranks = id_ranks(self.doc_ids)

    @property
    def doc_count(self) -> int:
        return len(self.doc_ids)

    @property
    def block_count(self) -> int:
        return int(self.block_ends.size)

    @property
    def total_postings(self) -> int:
        return int(self.kept_docs.size)

    def forward(self, ordinal: int) -> SparseVector:
        lo, hi = self.fwd_indptr[ordinal], self.fwd_indptr[ordinal + 1]
        return SparseVector(self.fwd_terms[lo:hi], self.fwd_weights[lo:hi], self.vocab_size)

    def blocks(self, term: int) -> list[tuple[np.ndarray, SparseVector]]:
        """(doc ordinals, dequantized summary) for each block of ``term``."""
        out = []
        for b in range(self.block_offsets[term], self.block_offsets[term + 1]):
            docs = self.kept_docs[self._block_start[b] : self._block_end[b]]
            s, e = self.sum_indptr[b], self.sum_indptr[b + 1]
            out.append((docs, SparseVector(self._sum_terms[s:e], self._sum_vals[s:e], self.vocab_size)))
        return out

    def kept_vectors(self) -> list[SparseVector]:
        """Each document restricted to the postings that survived pruning."""
        indptr, terms, weights = _by_doc(
            self.kept_offsets, self.kept_docs, self.kept_impacts, self.doc_count, self.vocab_size
        )
        return [
            SparseVector(terms[indptr[i] : indptr[i + 1]], weights[indptr[i] : indptr[i + 1]], self.vocab_size)
            for i in range(self.doc_count)
        ]


def build_approx(
    corpus: Iterable[tuple[str, SparseVector]],
    params: ApproxParams = ApproxParams(),
    vocab_size: int | None = None,
) -> ApproxIndex:
    if not isinstance(params, ApproxParams):
        raise ContractError("params must be an ApproxParams")
    ids, vecs, vocab_size = _check_corpus(corpus, vocab_size)
    n = len(ids)
    offsets, post_docs, post_w = invert(vecs, vocab_size)
    fwd_indptr, fwd_terms, fwd_w = _by_doc(offsets, post_docs, post_w, n, vocab_size)

    lens = np.diff(offsets)
    keep = np.array([kept_count(int(m), params.alpha) for m in lens], dtype=np.int64)
    kept_offsets = np.concatenate([[0], np.cumsum(keep)]).astype(np.int64)
    mask = np.arange(post_docs.size) - np.repeat(offsets[:-1], lens) < np.repeat(keep, lens)
    kept_docs, kept_w = post_docs[mask], post_w[mask]

    kindptr, kterms, kweights = _by_doc(kept_offsets, kept_docs, kept_w, n, vocab_size)
    pad_t, pad_w = _csr_rows(kindptr, kterms.astype(np.int64), kweights)

    bs = params.block_size
    levels = params.summary_levels
    block_counts = -(-keep // bs)
    block_ends = []
    sum_counts, sum_terms, sum_weights = [], [], []
    for term in np.flatnonzero(keep).tolist():
        lo, m = kept_offsets[term], keep[term]
        docs = kept_docs[lo : lo + m]
        block_ends.append(np.minimum(np.arange(1, block_counts[term] + 1) * bs, m))
        bid = np.repeat(np.arange(m) // bs, pad_t.shape[1])
        t, w = pad_t[docs].ravel(), pad_w[docs].ravel()
        live = w > 0
        key = bid[live] * vocab_size + t[live]
        w = w[live]
        order = np.argsort(key, kind="stable")
        key, w = key[order], w[order]
        starts = np.flatnonzero(np.concatenate([[True], key[1:] != key[:-1]]))
        ukey = key[starts]
        sum_weights.append(np.maximum.reduceat(w, starts))
        sum_terms.append(ukey % vocab_size)
        sum_counts.append(np.bincount(ukey // vocab_size, minlength=int(block_counts[term])))

    if block_ends:
        block_ends = np.concatenate(block_ends)
        sum_terms = np.concatenate(sum_terms)
        sum_weights = np.concatenate(sum_weights)
        sum_counts = np.concatenate(sum_counts)
    else:
        block_ends = np.empty(0, np.int64)
        sum_terms = np.empty(0, np.int64)
        sum_weights = np.empty(0, np.float32)
        sum_counts = np.empty(0, np.int64)
    sum_indptr = np.concatenate([[0], np.cumsum(sum_counts)]).astype(np.int64)
    scales = (
        np.maximum.reduceat(sum_weights, sum_indptr[:-1]) if sum_counts.size else np.empty(0, np.float32)
    )
    codes = quantize_up(sum_weights, np.repeat(scales, sum_counts), levels)
    block_offsets = np.concatenate([[0], np.cumsum(block_counts)]).astype(np.int64)
    return ApproxIndex(
        vocab_size, ids, params,
        fwd_indptr, fwd_terms, fwd_w,
        kept_offsets, kept_docs, kept_w,
        block_offsets, block_ends, sum_indptr, sum_terms, codes, scales,
    )  # fmt: skip


def search_approx(index: ApproxIndex, query: SparseVector, k: int) -> list[tuple[str, float]]:
    return search_approx_with_stats(index, query, k)[0]


def search_approx_with_stats(index: ApproxIndex, query: SparseVector, k: int):
    """Like :func:`search_approx`, plus work counters.

    The counters are summary entries read, blocks opened and documents rescored.
    """
    check_query(index.vocab_size, query, k)
    if not len(query) or not index.doc_count:
        return [], {"summary_entries": 0, "blocks": 0, "docs": 0}
    qdense = np.zeros(index.vocab_size, dtype=np.float64)
    qdense[query.terms] = query.weights
    visit_order = query.terms[np.lexsort((query.terms, -query.weights))].astype(np.int64)
    ords, scores, work = _kernels.approx_search(
        visit_order, qdense,
        index.block_offsets, index.sum_indptr, index._sum_terms, index._sum_vals,
        index._block_start, index._block_end, index.kept_docs,
        index.fwd_indptr, index.fwd_terms, index.fwd_weights,
        index._ranks, k, float(index.params.heap_factor),
    )  # fmt: skip
    hits = [(index.doc_ids[o], s) for o, s in zip(ords.tolist(), scores.tolist())]
    return hits, dict(zip(("summary_entries", "blocks", "docs"), work.tolist()))


def recall_vs_exact(
    index: ApproxIndex, exact: InvertedIndex, queries: Sequence[SparseVector], k: int
) -> float:
    """Mean overlap of approximate and exact top-k; 1.0 when no query has exact hits."""
    if index.doc_count != exact.doc_count:
        raise ContractError(f"corpus mismatch: {index.doc_count} vs {exact.doc_count} documents")
    recalls = []
    for q in queries:
        truth = {d for d, _ in search_exact(exact, q, k)}
        if not truth:
            continue
        got = {d for d, _ in search_approx(index, q, k)}
        recalls.append(len(truth & got) / len(truth))
    return float(np.mean(recalls)) if recalls else 1.0
