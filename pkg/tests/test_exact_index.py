import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from laconic.index import Posting, build_exact, search_exact
from laconic.sparse import ContractError, SparseVector, dot

from conftest import random_corpus, random_vector


def brute_force(corpus, query, k):
    """Score every document and rank by (float32 score desc, id asc)."""
    scored = [(doc_id, np.float32(dot(query, v))) for doc_id, v in corpus]
    scored = [(d, s) for d, s in scored if s > 0]
    scored.sort(key=lambda r: (-r[1], r[0]))
    return [(d, float(s)) for d, s in scored[:k]]


def test_empty_corpus():
    index = build_exact([], vocab_size=8)
    assert index.doc_count == 0
    assert index.total_postings == 0
    assert all(index.postings(t) == [] for t in range(8))
    assert search_exact(index, SparseVector.from_pairs([(1, 1.0)], 8), 5) == []


def test_single_doc_postings():
    index = build_exact([("a", SparseVector.from_pairs([(3, 2.0)], 8))])
    assert index.postings(3) == [Posting(0, 2.0)]
    assert index.total_postings == 1


def test_single_shared_term_scores_product():
    index = build_exact([("a", SparseVector.from_pairs([(1, 3.0), (2, 0.5)], 8))])
    q = SparseVector.from_pairs([(2, 4.0), (5, 1.0)], 8)
    assert search_exact(index, q, 3) == [("a", 2.0)]


def test_empty_query_gives_empty_result(rng):
    index = build_exact(random_corpus(rng, 20, 32))
    assert search_exact(index, SparseVector.empty(32), 10) == []


def test_reconstruction_is_lossless(rng):
    corpus = random_corpus(rng, 100, 64)
    index = build_exact(corpus)
    assert index.reconstruct() == [v for _, v in corpus]


def test_postings_sorted_by_descending_impact(rng):
    index = build_exact(random_corpus(rng, 100, 16))
    for t in range(16):
        impacts = [p.impact for p in index.postings(t)]
        assert impacts == sorted(impacts, reverse=True)
        assert all(w > 0 for w in impacts)


def test_duplicate_id_rejected():
    v = SparseVector.from_pairs([(0, 1.0)], 4)
    with pytest.raises(ContractError, match="duplicate"):
        build_exact([("a", v), ("a", v)])


def test_vocab_mismatch_rejected():
    with pytest.raises(ContractError):
        build_exact([("a", SparseVector.from_pairs([(0, 1.0)], 4)), ("b", SparseVector.from_pairs([(0, 1.0)], 5))])


def test_k_zero_rejected(rng):
    index = build_exact(random_corpus(rng, 5, 8))
    with pytest.raises(ContractError):
        search_exact(index, SparseVector.from_pairs([(0, 1.0)], 8), 0)


def test_query_vocab_mismatch_rejected(rng):
    index = build_exact(random_corpus(rng, 5, 8))
    with pytest.raises(ContractError):
        search_exact(index, SparseVector.from_pairs([(0, 1.0)], 9), 3)


def test_matches_brute_force_200_docs(rng):
    corpus = random_corpus(rng, 200, 128)
    index = build_exact(corpus)
    for _ in range(20):
        q = random_vector(rng, 128)
        got = search_exact(index, q, 10)
        want = brute_force(corpus, q, 10)
        assert [d for d, _ in got] == [d for d, _ in want]
        np.testing.assert_allclose([s for _, s in got], [s for _, s in want], rtol=1e-6)


def test_ties_broken_by_ascending_id():
    v = SparseVector.from_pairs([(0, 1.0)], 2)
    index = build_exact([("b", v), ("c", v), ("a", v)])
    assert [d for d, _ in search_exact(index, v, 3)] == ["a", "b", "c"]
    assert [d for d, _ in search_exact(index, v, 2)] == ["a", "b"]


@given(seed=st.integers(0, 2**32 - 1), k=st.integers(1, 30), extra=st.integers(0, 30))
def test_prefix_property(seed, k, extra):
    rng = np.random.default_rng(seed)
    # small vocab and coarse weights make ties common
    corpus = [
        (f"d{i}", SparseVector.from_pairs([(int(t), float(rng.integers(1, 3))) for t in rng.choice(6, 2, replace=False)], 6))
        for i in range(40)
    ]
    index = build_exact(corpus)
    q = random_vector(rng, 6, 3)
    short = search_exact(index, q, k)
    long = search_exact(index, q, k + extra)
    assert long[: len(short)] == short


@given(seed=st.integers(0, 2**32 - 1))
def test_only_positive_scores_and_sharing_docs(seed):
    rng = np.random.default_rng(seed)
    corpus = random_corpus(rng, 50, 40, max_nnz=4)
    index = build_exact(corpus)
    q = random_vector(rng, 40, 4)
    vecs = dict(corpus)
    for doc_id, score in search_exact(index, q, 50):
        assert score > 0
        assert set(vecs[doc_id].terms.tolist()) & set(q.terms.tolist())
