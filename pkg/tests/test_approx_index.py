import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from laconic.index import ApproxParams, build_approx, build_exact, recall_vs_exact, search_approx, search_exact
from laconic.index.approx import dequantize, kept_count, quantize_up, search_approx_with_stats
from laconic.sparse import ContractError, SparseVector, dot
from laconic.synthetic import queries_from_corpus, random_corpus as zipf_corpus

from conftest import random_corpus, random_vector

DEGENERATE = ApproxParams(alpha=1.0, block_size=1, heap_factor=1.0)


def summary_level_grid(scale, levels):
    return dequantize(np.arange(levels), np.full(levels, scale, np.float32), levels)


@pytest.mark.parametrize(
    "params",
    [
        {"alpha": 0.0},
        {"alpha": 1.5},
        {"block_size": 0},
        {"block_size": 2.5},
        {"summary_levels": 1},
        {"summary_levels": 257},
        {"heap_factor": 0.0},
        {"heap_factor": 1.1},
    ],
)
def test_invalid_params_rejected(params):
    with pytest.raises(ContractError):
        ApproxParams(**params)


def test_build_rejects_duplicate_ids():
    v = SparseVector.from_pairs([(0, 1.0)], 4)
    with pytest.raises(ContractError):
        build_approx([("a", v), ("a", v)])


def test_truncation_keeps_three_of_ten():
    assert kept_count(10, 0.3) == 3
    weights = np.linspace(0.1, 1.0, 10)
    corpus = [(f"d{i}", SparseVector.from_pairs([(0, w)], 1)) for i, w in enumerate(weights)]
    index = build_approx(corpus, ApproxParams(alpha=0.3, block_size=100))
    assert index.total_postings == 3
    kept = [v.weights[0] for v in index.kept_vectors() if len(v)]
    np.testing.assert_array_equal(sorted(kept), np.float32(weights[-3:]))


def test_tiny_lists_keep_one_posting():
    assert kept_count(1, 0.01) == 1
    assert kept_count(0, 0.5) == 0
    assert all(kept_count(n, 1.0) == n for n in range(50))


def test_single_block_summary_is_max_rounded_up(rng):
    corpus = random_corpus(rng, 30, 12)
    index = build_approx(corpus, ApproxParams(alpha=1.0, block_size=10**9, summary_levels=8))
    for term in range(12):
        blocks = index.blocks(term)
        impacts = [v.weights[v.terms == term] for _, v in corpus]
        impacts = np.concatenate(impacts)
        if impacts.size == 0:
            assert blocks == []
            continue
        assert len(blocks) == 1
        _, summary = blocks[0]
        value = summary.weights[summary.terms == term][0]
        # levels span [0, block scale]; the term max is rounded up to the next level
        grid = summary_level_grid(index.sum_scales[index.block_offsets[term]], 8)
        assert value == grid[np.searchsorted(grid, impacts.max())]


def test_quantize_up_picks_smallest_covering_level(rng):
    for _ in range(200):
        levels = int(rng.integers(2, 257))
        scale = np.float32(rng.uniform(0.01, 10))
        w = (rng.random(20) * scale).astype(np.float32)
        codes = quantize_up(w, np.full(20, scale, np.float32), levels)
        grid = summary_level_grid(scale, levels)
        for wi, c in zip(w, codes):
            assert grid[c] >= wi
            assert c == 0 or grid[c - 1] < wi


@given(
    seed=st.integers(0, 2**32 - 1),
    alpha=st.floats(0.05, 1.0),
    block_size=st.integers(1, 12),
    levels=st.integers(2, 32),
)
def test_every_block_upper_bounds_its_kept_postings(seed, alpha, block_size, levels):
    rng = np.random.default_rng(seed)
    corpus = random_corpus(rng, 100, 24, max_nnz=8)
    index = build_approx(corpus, ApproxParams(alpha=alpha, block_size=block_size, summary_levels=levels))
    kept = index.kept_vectors()
    for term in range(24):
        for docs, summary in index.blocks(term):
            assert 1 <= docs.size <= block_size
            bound = dict(summary.items())
            for d in docs.tolist():
                for t, w in kept[d].items():
                    assert bound[t] >= w
            # and for any nonnegative query the block bound dominates each member
            q = random_vector(rng, 24)
            assert max(dot(q, kept[d]) for d in docs.tolist()) <= dot(q, summary)


def test_posting_lists_sorted_and_truncated(rng):
    corpus = random_corpus(rng, 60, 10)
    params = ApproxParams(alpha=0.4, block_size=3)
    index = build_approx(corpus, params)
    exact = build_exact(corpus)
    for term in range(10):
        full = exact.postings(term)
        docs = np.concatenate([d for d, _ in index.blocks(term)] or [np.empty(0, np.uint32)])
        assert docs.tolist() == [p.doc_ordinal for p in full[: kept_count(len(full), 0.4)]]


def test_forward_store_is_lossless(rng):
    corpus = random_corpus(rng, 80, 40)
    index = build_approx(corpus, ApproxParams(alpha=0.2))
    assert [index.forward(i) for i in range(80)] == [v for _, v in corpus]


def test_empty_query_and_empty_corpus(rng):
    index = build_approx(random_corpus(rng, 10, 8))
    assert search_approx(index, SparseVector.empty(8), 5) == []
    empty = build_approx([], vocab_size=8)
    assert empty.doc_count == 0
    assert search_approx(empty, SparseVector.from_pairs([(0, 1.0)], 8), 5) == []


def test_k_zero_rejected(rng):
    index = build_approx(random_corpus(rng, 10, 8))
    with pytest.raises(ContractError):
        search_approx(index, SparseVector.from_pairs([(0, 1.0)], 8), 0)


@given(seed=st.integers(0, 2**32 - 1), k=st.integers(1, 15))
def test_degenerate_params_equal_exact(seed, k):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 300))
    corpus = random_corpus(rng, n, 50, max_nnz=10)
    exact = build_exact(corpus)
    approx = build_approx(corpus, DEGENERATE)
    for _ in range(5):
        q = random_vector(rng, 50, 8)
        assert search_approx(approx, q, k) == search_exact(exact, q, k)


def test_degenerate_equals_exact_on_1000_docs():
    corpus = zipf_corpus(1000, 400, seed=3)
    exact = build_exact(corpus)
    approx = build_approx(corpus, DEGENERATE)
    for q in queries_from_corpus(corpus, 40, seed=4):
        assert search_approx(approx, q, 10) == search_exact(exact, q, 10)


@given(seed=st.integers(0, 2**32 - 1), alpha=st.floats(0.05, 1.0), hf=st.floats(0.1, 1.0))
def test_returned_scores_are_exact_dots(seed, alpha, hf):
    rng = np.random.default_rng(seed)
    corpus = random_corpus(rng, 120, 30, max_nnz=8)
    index = build_approx(corpus, ApproxParams(alpha=alpha, block_size=4, heap_factor=hf))
    vecs = dict(corpus)
    q = random_vector(rng, 30, 6)
    hits = search_approx(index, q, 10)
    for doc_id, score in hits:
        assert score == pytest.approx(dot(q, vecs[doc_id]), rel=1e-6)
    keys = [(-s, d) for d, s in hits]
    assert keys == sorted(keys)


def test_recall_deterministic_and_monotone_in_alpha():
    corpus = zipf_corpus(500, 1000, seed=7)
    queries = queries_from_corpus(corpus, 50, seed=8)
    exact = build_exact(corpus)
    recalls = []
    for alpha in (0.2, 0.5, 1.0):
        params = ApproxParams(alpha=alpha, block_size=8, heap_factor=0.9)
        index = build_approx(corpus, params)
        r = recall_vs_exact(index, exact, queries, 10)
        assert 0.0 <= r <= 1.0
        assert r == recall_vs_exact(build_approx(corpus, params), exact, queries, 10)
        recalls.append(r)
    assert recalls == sorted(recalls)
    assert recall_vs_exact(build_approx(corpus, DEGENERATE), exact, queries, 10) == 1.0


def test_recall_vacuous_and_mismatch(rng):
    corpus = random_corpus(rng, 20, 16)
    exact = build_exact(corpus)
    index = build_approx(corpus)
    assert recall_vs_exact(index, exact, [], 10) == 1.0
    assert recall_vs_exact(index, exact, [SparseVector.empty(16)], 10) == 1.0
    with pytest.raises(ContractError, match="mismatch"):
        recall_vs_exact(index, build_exact(corpus[:-1]), [], 10)


def test_heap_factor_reduces_work():
    corpus = zipf_corpus(2000, 800, seed=1)
    queries = queries_from_corpus(corpus, 20, seed=2)
    work = []
    for hf in (1.0, 0.5):
        index = build_approx(corpus, ApproxParams(alpha=1.0, block_size=8, heap_factor=hf))
        work.append(sum(search_approx_with_stats(index, q, 10)[1]["docs"] for q in queries))
    assert work[1] <= work[0]
