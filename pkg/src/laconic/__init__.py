"""Learned sparse retrieval: log-saturated max-pooled encodings, contrastive
training with FLOPs regularization, and exact/approximate inverted-index search."""

from .encoder import ToyEncoderParams, splade_pool, splade_pool_backward, toy_encode
from .sparse import ContractError, SparseVector, VocabSpec, densify, dot, from_dense, nnz

__version__ = "0.1.0"

__all__ = [
    "ContractError",
    "SparseVector",
    "ToyEncoderParams",
    "VocabSpec",
    "densify",
    "dot",
    "from_dense",
    "nnz",
    "splade_pool",
    "splade_pool_backward",
    "toy_encode",
]
