"""Log-saturated max-pooling of per-token vocabulary logits, plus a toy encoder.

The toy encoder is an embedding lookup followed by a linear projection onto the
vocabulary; it stands in for a language model and its LM head so the pooling
math and its gradients can be exercised at desk scale.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import IO, Sequence

import numpy as np

from .sparse import ContractError, SparseVector, from_dense


def _check_logits(H) -> np.ndarray:
    H = np.asarray(H, dtype=np.float64)
    if H.ndim != 2 or H.shape[0] < 1 or H.shape[1] < 1:
        raise ContractError(f"logit matrix must be 2-d with positive dimensions, got shape {H.shape}")
    if not np.all(np.isfinite(H)):
        raise ContractError("logit matrix contains non-finite values")
    return H


def pool_dense(H) -> np.ndarray:
    """Dense pooled activations ``log1p(relu(max over rows))``, shape (V,)."""
    H = _check_logits(H)
    return np.log1p(np.maximum(H.max(axis=0), 0.0))


def splade_pool(H) -> SparseVector:
    return from_dense(pool_dense(H))


def splade_pool_backward(H, upstream) -> np.ndarray:
    """Gradient of the pooled output w.r.t. ``H`` given d(loss)/d(output).

    The whole subgradient of a column goes to its arg-max row (lowest index on
    ties); columns whose max is <= 0 get nothing.
    """
    H = _check_logits(H)
    upstream = np.asarray(upstream, dtype=np.float64)
    if upstream.shape != (H.shape[1],):
        raise ContractError(f"upstream gradient shape {upstream.shape} does not match V={H.shape[1]}")
    rows = H.argmax(axis=0)  # first occurrence on ties
    cols = np.arange(H.shape[1])
    peak = H[rows, cols]
    local = np.where(peak > 0, 1.0 / (1.0 + np.maximum(peak, 0.0)), 0.0)
    grad = np.zeros_like(H)
    grad[rows, cols] = upstream * local
    return grad


@dataclass
class ToyEncoderParams:
    embedding: np.ndarray  # (num_tokens, d)
    projection: np.ndarray  # (d, V)

    def __post_init__(self):
        self.embedding = np.asarray(self.embedding, dtype=np.float64)
        self.projection = np.asarray(self.projection, dtype=np.float64)
        if self.embedding.ndim != 2 or self.projection.ndim != 2:
            raise ContractError("embedding and projection must be 2-d")
        if self.embedding.shape[1] != self.projection.shape[0]:
            raise ContractError(
                f"embedding width {self.embedding.shape[1]} != projection rows {self.projection.shape[0]}"
            )
        if not (np.all(np.isfinite(self.embedding)) and np.all(np.isfinite(self.projection))):
            raise ContractError("parameters must be finite")

    @property
    def num_tokens(self) -> int:
        return self.embedding.shape[0]

    @property
    def width(self) -> int:
        return self.embedding.shape[1]

    @property
    def vocab_size(self) -> int:
        return self.projection.shape[1]

    @classmethod
    def init(cls, num_tokens: int, width: int, vocab_size: int, seed: int, scale: float = 0.5):
        rng = np.random.default_rng(seed)
        emb = rng.normal(0.0, scale, size=(num_tokens, width))
        proj = rng.normal(0.0, scale, size=(width, vocab_size))
        return cls(emb, proj)

    def copy(self) -> "ToyEncoderParams":
        return ToyEncoderParams(self.embedding.copy(), self.projection.copy())

    def to_json(self) -> dict:
        return {
            "num_tokens": self.num_tokens,
            "width": self.width,
            "vocab_size": self.vocab_size,
            "embedding": self.embedding.ravel().tolist(),
            "projection": self.projection.ravel().tolist(),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ToyEncoderParams":
        n, d, v = int(obj["num_tokens"]), int(obj["width"]), int(obj["vocab_size"])
        emb = np.asarray(obj["embedding"], dtype=np.float64)
        proj = np.asarray(obj["projection"], dtype=np.float64)
        if emb.size != n * d or proj.size != d * v:
            raise ContractError("parameter arrays do not match declared dimensions")
        return cls(emb.reshape(n, d), proj.reshape(d, v))

    def save(self, fh: IO[str]) -> None:
        json.dump(self.to_json(), fh)

    @classmethod
    def load(cls, fh: IO[str]) -> "ToyEncoderParams":
        return cls.from_json(json.load(fh))


def _check_tokens(token_ids: Sequence[int], params: ToyEncoderParams) -> np.ndarray:
    ids = np.asarray(token_ids, dtype=np.int64)
    if ids.ndim != 1 or ids.size == 0:
        raise ContractError("token id sequence must be non-empty")
    if ids.min() < 0 or ids.max() >= params.num_tokens:
        raise ContractError(f"unknown token id (table has {params.num_tokens} entries)")
    return ids


def toy_encode(token_ids: Sequence[int], params: ToyEncoderParams) -> np.ndarray:
    """Per-token logits, shape (len(token_ids), V)."""
    ids = _check_tokens(token_ids, params)
    return params.embedding[ids] @ params.projection


def toy_encode_backward(token_ids, params: ToyEncoderParams, grad_logits) -> tuple[np.ndarray, np.ndarray]:
    """Accumulate parameter gradients from d(loss)/d(logits).

    Returns (grad_embedding, grad_projection) with the parameters' shapes.
    """
    ids = _check_tokens(token_ids, params)
    g = np.asarray(grad_logits, dtype=np.float64)
    rows = params.embedding[ids]
    g_proj = rows.T @ g
    g_emb = np.zeros_like(params.embedding)
    np.add.at(g_emb, ids, g @ params.projection.T)
    return g_emb, g_proj


def encode(token_ids: Sequence[int], params: ToyEncoderParams) -> SparseVector:
    return splade_pool(toy_encode(token_ids, params))
