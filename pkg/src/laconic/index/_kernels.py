"""Compiled inner loops for both search paths.

Summation order is the same everywhere: per document, products are added
left to right in ascending term order starting from 0.0, in float64. That
makes exact, approximate and brute-force scores bit-identical.
"""

from __future__ import annotations

import numba
import numpy as np

# guards the float32 skip test against rounding in the bound sum
BOUND_SLACK = 1.0 + 1e-12


@numba.njit(cache=True, nogil=True, inline="always")
def _worse(sa, ra, sb, rb):
    # lower score is worse; on equal scores the larger id rank is worse
    return sa < sb or (sa == sb and ra > rb)


@numba.njit(cache=True, nogil=True)
def _sift_down(hs, hr, hd, size, i):
    while True:
        left = 2 * i + 1
        if left >= size:
            return
        child = left
        right = left + 1
        if right < size and _worse(hs[right], hr[right], hs[left], hr[left]):
            child = right
        if _worse(hs[child], hr[child], hs[i], hr[i]):
            hs[i], hs[child] = hs[child], hs[i]
            hr[i], hr[child] = hr[child], hr[i]
            hd[i], hd[child] = hd[child], hd[i]
            i = child
        else:
            return


@numba.njit(cache=True, nogil=True)
def _offer(hs, hr, hd, size, k, score, rank, doc):
    """Insert into a size-k min-heap rooted at the current worst; returns the new size."""
    if size < k:
        i = size
        hs[i], hr[i], hd[i] = score, rank, doc
        while i > 0:
            parent = (i - 1) // 2
            if _worse(hs[i], hr[i], hs[parent], hr[parent]):
                hs[i], hs[parent] = hs[parent], hs[i]
                hr[i], hr[parent] = hr[parent], hr[i]
                hd[i], hd[parent] = hd[parent], hd[i]
                i = parent
            else:
                break
        return size + 1
    if _worse(hs[0], hr[0], score, rank):
        hs[0], hr[0], hd[0] = score, rank, doc
        _sift_down(hs, hr, hd, size, 0)
    return size


@numba.njit(cache=True, nogil=True)
def _drain(hs, hr, hd, size):
    """Heap contents best-first."""
    out_d = np.empty(size, np.int64)
    out_s = np.empty(size, np.float32)
    n = size
    while n > 0:
        out_d[n - 1] = hd[0]
        out_s[n - 1] = hs[0]
        n -= 1
        hs[0], hr[0], hd[0] = hs[n], hr[n], hd[n]
        _sift_down(hs, hr, hd, n, 0)
    return out_d, out_s


@numba.njit(cache=True, nogil=True)
def exact_search(q_terms, q_weights, offsets, post_docs, post_impacts, ranks, k):
    n_docs = ranks.shape[0]
    acc = np.zeros(n_docs, np.float64)
    for i in range(q_terms.shape[0]):
        t = q_terms[i]
        qw = q_weights[i]
        for p in range(offsets[t], offsets[t + 1]):
            acc[post_docs[p]] += qw * np.float64(post_impacts[p])
    hs = np.empty(k, np.float32)
    hr = np.empty(k, np.int64)
    hd = np.empty(k, np.int64)
    size = 0
    for d in range(n_docs):
        if acc[d] > 0.0:
            s = np.float32(acc[d])
            if s > 0 and (size < k or s >= hs[0]):
                size = _offer(hs, hr, hd, size, k, s, ranks[d], d)
    return _drain(hs, hr, hd, size)


@numba.njit(cache=True, nogil=True)
def approx_search(
    q_terms, qdense, block_offsets, sum_indptr, sum_terms, sum_vals,
    block_start, block_end, kept_docs, fwd_indptr, fwd_terms, fwd_weights,
    ranks, k, heap_factor,
):  # fmt: skip
    """``q_terms`` must already be in visiting order (descending query weight)."""
    visited = np.zeros(ranks.shape[0], np.bool_)
    hs = np.empty(k, np.float32)
    hr = np.empty(k, np.int64)
    hd = np.empty(k, np.int64)
    size = 0
    floor = 0.0
    stats = np.zeros(3, np.int64)  # summary entries read, blocks opened, documents rescored
    for qi in range(q_terms.shape[0]):
        t = q_terms[qi]
        b0 = block_offsets[t]
        nb = block_offsets[t + 1] - b0
        if nb == 0:
            continue
        bounds = np.empty(nb, np.float32)
        for j in range(nb):
            s = 0.0
            for e in range(sum_indptr[b0 + j], sum_indptr[b0 + j + 1]):
                s += qdense[sum_terms[e]] * sum_vals[e]
            stats[0] += sum_indptr[b0 + j + 1] - sum_indptr[b0 + j]
            bounds[j] = np.float32(s * BOUND_SLACK)
        order = np.argsort(-bounds, kind="mergesort")
        for j in order:
            if size == k and bounds[j] < floor:
                break
            b = b0 + j
            stats[1] += 1
            for p in range(block_start[b], block_end[b]):
                d = kept_docs[p]
                if visited[d]:
                    continue
                visited[d] = True
                stats[2] += 1
                s = 0.0
                for e in range(fwd_indptr[d], fwd_indptr[d + 1]):
                    s += qdense[fwd_terms[e]] * np.float64(fwd_weights[e])
                s32 = np.float32(s)
                if s32 > 0 and (size < k or s32 >= hs[0]):
                    size = _offer(hs, hr, hd, size, k, s32, ranks[d], d)
            if size == k:
                floor = np.float64(hs[0]) / heap_factor
    ords, scores = _drain(hs, hr, hd, size)
    return ords, scores, stats
