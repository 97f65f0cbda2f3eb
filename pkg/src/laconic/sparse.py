"""Sparse vocabulary-space vectors and the scoring primitives built on them."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import IO, Iterable, Iterator

import numpy as np

TERM_DTYPE = np.uint32
WEIGHT_DTYPE = np.float32


class ContractError(ValueError):
    """Raised when an input violates a documented precondition."""


@dataclass(frozen=True)
class VocabSpec:
    size: int

    def __post_init__(self):
        if int(self.size) <= 0:
            raise ContractError(f"vocabulary size must be positive, got {self.size}")


class SparseVector:
    """Immutable vector over a vocabulary of ``vocab_size`` terms.

    Only strictly positive weights are stored, with term ids sorted and unique.
    """

    __slots__ = ("terms", "weights", "vocab_size")

    def __init__(self, terms, weights, vocab_size: int):
        terms = np.asarray(terms, dtype=np.int64)
        weights = np.asarray(weights, dtype=WEIGHT_DTYPE)
        if terms.ndim != 1 or terms.shape != weights.shape:
            raise ContractError("terms and weights must be 1-d arrays of equal length")
        if vocab_size <= 0:
            raise ContractError(f"vocabulary size must be positive, got {vocab_size}")
        if terms.size:
            if terms[0] < 0 or terms[-1] >= vocab_size:
                raise ContractError(f"term id out of range for vocabulary of size {vocab_size}")
            if np.any(np.diff(terms) <= 0):
                raise ContractError("term ids must be strictly increasing")
            if not np.all(np.isfinite(weights)) or np.any(weights <= 0):
                raise ContractError("weights must be finite and strictly positive")
        terms = terms.astype(TERM_DTYPE)
        terms.flags.writeable = False
        weights.flags.writeable = False
        object.__setattr__(self, "terms", terms)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "vocab_size", int(vocab_size))

    def __setattr__(self, name, value):
        raise AttributeError("SparseVector is immutable")

    @classmethod
    def empty(cls, vocab_size: int) -> "SparseVector":
        return cls(np.empty(0, np.int64), np.empty(0, WEIGHT_DTYPE), vocab_size)

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[int, float]], vocab_size: int) -> "SparseVector":
        """Build from (term, weight) pairs in any order; zero weights are dropped."""
        items = sorted((int(t), float(w)) for t, w in pairs if w != 0)
        if not items:
            return cls.empty(vocab_size)
        terms, weights = zip(*items)
        return cls(terms, weights, vocab_size)

    def items(self) -> list[tuple[int, float]]:
        return [(int(t), float(w)) for t, w in zip(self.terms, self.weights)]

    def __len__(self) -> int:
        return int(self.terms.size)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SparseVector):
            return NotImplemented
        return (
            self.vocab_size == other.vocab_size
            and np.array_equal(self.terms, other.terms)
            and np.array_equal(self.weights, other.weights)
        )

    def __hash__(self):
        return hash((self.vocab_size, self.terms.tobytes(), self.weights.tobytes()))

    def __repr__(self) -> str:
        body = ", ".join(f"({t}, {w:g})" for t, w in self.items()[:8])
        more = ", ..." if len(self) > 8 else ""
        return f"SparseVector(V={self.vocab_size}, {{{body}{more}}})"


def dot(a: SparseVector, b: SparseVector) -> float:
    """Inner product by sorted two-pointer merge, accumulated in float64."""
    if a.vocab_size != b.vocab_size:
        raise ContractError(f"vocabulary mismatch: {a.vocab_size} != {b.vocab_size}")
    at, aw = a.terms.tolist(), a.weights.tolist()
    bt, bw = b.terms.tolist(), b.weights.tolist()
    i = j = 0
    total = 0.0
    while i < len(at) and j < len(bt):
        if at[i] == bt[j]:
            total += aw[i] * bw[j]
            i += 1
            j += 1
        elif at[i] < bt[j]:
            i += 1
        else:
            j += 1
    return total


def from_dense(values) -> SparseVector:
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 1 or values.size == 0:
        raise ContractError("from_dense expects a non-empty 1-d array")
    if np.any(np.isnan(values)) or np.any(values < 0):
        raise ContractError("from_dense requires nonnegative values")
    values32 = values.astype(WEIGHT_DTYPE)
    (idx,) = np.nonzero(values32 > 0)
    return SparseVector(idx, values32[idx], values.size)


def densify(a: SparseVector, dtype=np.float64) -> np.ndarray:
    out = np.zeros(a.vocab_size, dtype=dtype)
    out[a.terms] = a.weights
    return out


def nnz(a: SparseVector) -> int:
    return len(a)


# JSONL exchange: {"id": "...", "vector": {"<term>": weight, ...}}


def vector_to_json(doc_id: str, vec: SparseVector) -> str:
    # float32 -> float repr round-trips exactly through float32 on load
    payload = {str(t): float(w) for t, w in zip(vec.terms.tolist(), vec.weights.tolist())}
    return json.dumps({"id": doc_id, "vector": payload})


def write_jsonl(fh: IO[str], records: Iterable[tuple[str, SparseVector]]) -> None:
    for doc_id, vec in records:
        fh.write(vector_to_json(doc_id, vec))
        fh.write("\n")


class JsonlError(ContractError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


def read_jsonl(fh: IO[str], vocab_size: int | None = None) -> Iterator[tuple[str, SparseVector]]:
    """Yield (id, vector) pairs; ``vocab_size=None`` only works via :func:`load_jsonl`."""
    for lineno, raw in enumerate(fh, start=1):
        if not raw.strip():
            continue
        try:
            obj = json.loads(raw)
            doc_id = obj["id"]
            vector = obj["vector"]
            if not isinstance(doc_id, str) or not isinstance(vector, dict):
                raise TypeError("expected string `id` and object `vector`")
            pairs = [(int(t), float(w)) for t, w in vector.items()]
        except (ValueError, KeyError, TypeError) as exc:
            raise JsonlError(lineno, f"malformed sparse-vector record ({exc})") from None
        size = vocab_size if vocab_size is not None else (max((t for t, _ in pairs), default=-1) + 1 or 1)
        try:
            yield doc_id, SparseVector.from_pairs(pairs, size)
        except ContractError as exc:
            raise JsonlError(lineno, str(exc)) from None


def load_jsonl(fh: IO[str], vocab_size: int | None = None) -> tuple[list[tuple[str, SparseVector]], int]:
    """Read a whole file; when ``vocab_size`` is None it is inferred as max term id + 1."""
    records = list(read_jsonl(fh, vocab_size))
    if vocab_size is None:
        vocab_size = max((v.vocab_size for _, v in records), default=1)
        records = [(i, SparseVector(v.terms, v.weights, vocab_size)) for i, v in records]
    return records, vocab_size
