import io
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra import numpy as hnp

from laconic.encoder import (
    ToyEncoderParams,
    pool_dense,
    splade_pool,
    splade_pool_backward,
    toy_encode,
    toy_encode_backward,
)
from laconic.sparse import ContractError, from_dense

finite = st.floats(-5, 5, allow_nan=False, width=64)
matrices = hnp.arrays(np.float64, st.tuples(st.integers(1, 6), st.integers(1, 12)), elements=finite)


def reference_pool(H):
    """Column max, ReLU and log1p written out element by element."""
    L, V = len(H), len(H[0])
    out = []
    for j in range(V):
        m = max(H[i][j] for i in range(L))
        out.append(math.log1p(m) if m > 0 else 0.0)
    return np.array(out)


def central_diff(f, x, h=1e-4):
    g = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        xp, xm = x.copy(), x.copy()
        xp[idx] += h
        xm[idx] -= h
        g[idx] = (f(xp) - f(xm)) / (2 * h)
    return g


def test_all_negative_logits_give_empty():
    assert len(splade_pool(-np.ones((2, 3)))) == 0


def test_single_positive_logit():
    v = splade_pool([[math.e - 1, 0.0]])
    assert v.items() == [(0, pytest.approx(1.0, rel=1e-7))]


def test_pool_matches_reference(rng):
    H = rng.normal(size=(4, 8))
    expected = from_dense(reference_pool(H.tolist()))
    assert splade_pool(H) == expected


def test_pool_rejects_non_finite():
    with pytest.raises(ContractError):
        splade_pool([[0.0, np.nan]])
    with pytest.raises(ContractError):
        splade_pool(np.zeros((0, 3)))


@given(matrices, st.randoms(use_true_random=False))
def test_pool_properties(H, rnd):
    out = pool_dense(H)
    assert np.all(out >= 0)
    assert np.all(splade_pool(H).weights > 0)
    perm = list(range(H.shape[0]))
    rnd.shuffle(perm)
    np.testing.assert_array_equal(pool_dense(H[perm]), out)
    np.testing.assert_array_equal(pool_dense(np.vstack([H, H])), out)
    i, j = rnd.randrange(H.shape[0]), rnd.randrange(H.shape[1])
    bumped = H.copy()
    bumped[i, j] += 1.0
    assert np.all(pool_dense(bumped) >= out)


def test_backward_dead_region():
    assert not np.any(splade_pool_backward(-np.ones((3, 4)), np.ones(4)))


def test_backward_scalar():
    g = splade_pool_backward([[math.e - 1]], [1.0])
    assert g[0, 0] == pytest.approx(1 / math.e, rel=1e-12)


def test_backward_tie_goes_to_lowest_row():
    g = splade_pool_backward([[1.0], [1.0], [0.5]], [2.0])
    assert g[:, 0].tolist() == [1.0, 0.0, 0.0]


def test_backward_shape_mismatch():
    with pytest.raises(ContractError):
        splade_pool_backward(np.ones((2, 3)), np.ones(4))


def _away_from_kinks(H, margin=1e-3):
    top2 = np.sort(H, axis=0)[-2:] if H.shape[0] > 1 else None
    if np.any(np.abs(H.max(axis=0)) < margin):
        return False
    return top2 is None or np.all(top2[1] - top2[0] > margin)


def test_backward_matches_finite_differences(rng):
    checked = 0
    while checked < 10:
        H = rng.normal(size=(3, 5))
        if not _away_from_kinks(H):
            continue
        up = rng.normal(size=5)
        numeric = central_diff(lambda X: float(up @ pool_dense(X)), H)
        np.testing.assert_allclose(splade_pool_backward(H, up), numeric, rtol=1e-4, atol=1e-8)
        checked += 1


def test_toy_encode_examples():
    zero = ToyEncoderParams(np.zeros((4, 3)), np.zeros((3, 5)))
    assert not np.any(toy_encode([0, 1, 3], zero))
    p = ToyEncoderParams([[2.0]], [[1.0, -1.0]])
    np.testing.assert_array_equal(toy_encode([0], p), [[2.0, -2.0]])


def test_toy_encode_matches_loop_matmul(rng):
    p = ToyEncoderParams.init(10, 4, 6, seed=3)
    ids = [7, 2, 7]
    expected = np.zeros((3, 6))
    for i, tok in enumerate(ids):
        for j in range(6):
            for r in range(4):
                expected[i, j] += p.embedding[tok, r] * p.projection[r, j]
    np.testing.assert_allclose(toy_encode(ids, p), expected, rtol=1e-12)


def test_toy_encode_rejects_unknown_token():
    p = ToyEncoderParams.init(5, 2, 3, seed=0)
    with pytest.raises(ContractError):
        toy_encode([5], p)
    with pytest.raises(ContractError):
        toy_encode([], p)


def test_end_to_end_gradient(rng):
    p = ToyEncoderParams.init(6, 3, 5, seed=1)
    ids = [0, 4, 2]
    up = rng.normal(size=5)
    assert _away_from_kinks(toy_encode(ids, p))

    def loss(emb, proj):
        return float(up @ pool_dense(toy_encode(ids, ToyEncoderParams(emb, proj))))

    g_emb, g_proj = toy_encode_backward(ids, p, splade_pool_backward(toy_encode(ids, p), up))
    np.testing.assert_allclose(g_emb, central_diff(lambda e: loss(e, p.projection), p.embedding), rtol=1e-4, atol=1e-8)
    np.testing.assert_allclose(g_proj, central_diff(lambda w: loss(p.embedding, w), p.projection), rtol=1e-4, atol=1e-8)


def test_params_json_roundtrip():
    p = ToyEncoderParams.init(7, 3, 5, seed=9)
    buf = io.StringIO()
    p.save(buf)
    buf.seek(0)
    q = ToyEncoderParams.load(buf)
    np.testing.assert_array_equal(p.embedding, q.embedding)
    np.testing.assert_array_equal(p.projection, q.projection)
