"""``LCNX`` binary container for exact and approximate indexes.

Little-endian throughout::

    header      b"LCNX" | u16 version | u16 kind (1 exact, 2 approx) | u32 vocab | u32 docs
    doc ids     docs x (u32 byte length, UTF-8 bytes)

  exact:
    counts      u32[vocab]                    postings per term
    postings    (u32 doc_ordinal, f32 impact)[sum(counts)]

  approx:
    params      f64 alpha | u32 block_size | u32 summary_levels | f64 heap_factor
    forward     u32[docs] entry counts, then (u32 term, f32 weight)[...]
    kept        u32[vocab] kept counts, then (u32 doc_ordinal, f32 impact)[...]
    blocks      u32[vocab] block counts, then u32[blocks] block end offsets
    summaries   f32[blocks] scales | u32[blocks] entry counts | u32[...] terms | u8[...] level codes
"""

from __future__ import annotations

import os
import struct
from typing import Union

import numpy as np

from ..sparse import ContractError
from .approx import ApproxIndex, ApproxParams
from .exact import InvertedIndex

MAGIC = b"LCNX"
VERSION = 1
KIND_EXACT = 1
KIND_APPROX = 2
HEADER = struct.Struct("<4sHHII")
PARAMS = struct.Struct("<dIId")
POSTING = np.dtype([("doc", "<u4"), ("w", "<f4")])
ENTRY = np.dtype([("term", "<u4"), ("w", "<f4")])

Index = Union[InvertedIndex, ApproxIndex]


class IndexFormatError(ContractError):
    pass


def _doc_table(doc_ids: list[str]) -> bytes:
    out = bytearray()
    for doc_id in doc_ids:
        raw = doc_id.encode("utf-8")
        out += struct.pack("<I", len(raw)) + raw
    return bytes(out)


def _pairs(dtype, first, second) -> bytes:
    rec = np.empty(len(first), dtype=dtype)
    rec[dtype.names[0]] = first
    rec[dtype.names[1]] = second
    return rec.tobytes()


def _u32(values) -> bytes:
    return np.asarray(values, dtype="<u4").tobytes()


def posting_count(index: Index) -> int:
    """8-byte (id, weight) records in the file: postings, plus forward entries for approx."""
    if isinstance(index, InvertedIndex):
        return index.total_postings
    return index.total_postings + int(index.fwd_terms.size)


def overhead_bytes(index: Index) -> int:
    """File bytes that are not 8-byte posting records."""
    fixed = HEADER.size + len(_doc_table(index.doc_ids)) + 4 * index.vocab_size
    if isinstance(index, InvertedIndex):
        return fixed
    n_blocks = index.block_count
    return (
        fixed
        + PARAMS.size
        + 4 * index.doc_count
        + 4 * index.vocab_size
        + 12 * n_blocks
        + 5 * int(index.sum_terms.size)
    )


def dumps(index: Index) -> bytes:
    kind = KIND_EXACT if isinstance(index, InvertedIndex) else KIND_APPROX
    parts = [HEADER.pack(MAGIC, VERSION, kind, index.vocab_size, index.doc_count), _doc_table(index.doc_ids)]
    if kind == KIND_EXACT:
        parts += [
            _u32(np.diff(index.offsets)),
            _pairs(POSTING, index.post_docs, index.post_impacts),
        ]
    else:
        p = index.params
        parts += [
            PARAMS.pack(p.alpha, p.block_size, p.summary_levels, p.heap_factor),
            _u32(np.diff(index.fwd_indptr)),
            _pairs(ENTRY, index.fwd_terms, index.fwd_weights),
            _u32(np.diff(index.kept_offsets)),
            _pairs(POSTING, index.kept_docs, index.kept_impacts),
            _u32(np.diff(index.block_offsets)),
            _u32(index.block_ends),
            index.sum_scales.astype("<f4").tobytes(),
            _u32(np.diff(index.sum_indptr)),
            _u32(index.sum_terms),
            index.sum_codes.astype(np.uint8).tobytes(),
        ]
    return b"".join(parts)


def save(index: Index, path: Union[str, os.PathLike]) -> int:
    data = dumps(index)
    with open(path, "wb") as fh:
        fh.write(data)
    return len(data)


class _Reader:
    def __init__(self, data: bytes):
        self.buf = memoryview(data)
        self.pos = 0

    def take(self, n: int) -> memoryview:
        if n < 0 or self.pos + n > len(self.buf):
            raise IndexFormatError(f"truncated index file at byte {self.pos}")
        out = self.buf[self.pos : self.pos + n]
        self.pos += n
        return out

    def struct(self, st: struct.Struct):
        return st.unpack(self.take(st.size))

    def array(self, dtype, count: int) -> np.ndarray:
        dtype = np.dtype(dtype)
        return np.frombuffer(self.take(dtype.itemsize * count), dtype=dtype).copy()

    def counts(self, count: int) -> tuple[np.ndarray, int]:
        c = self.array("<u4", count).astype(np.int64)
        return np.concatenate([[0], np.cumsum(c)]).astype(np.int64), int(c.sum())


def loads(data: bytes) -> Index:
    if len(data) < HEADER.size or bytes(data[:4]) != MAGIC:
        raise IndexFormatError("not an LCNX index (bad magic bytes)")
    r = _Reader(data)
    _, version, kind, vocab, docs = r.struct(HEADER)
    if version != VERSION:
        raise IndexFormatError(f"unsupported LCNX version {version}")
    try:
        doc_ids = []
        for _ in range(docs):
            (n,) = struct.unpack("<I", r.take(4))
            doc_ids.append(bytes(r.take(n)).decode("utf-8"))
        if kind == KIND_EXACT:
            offsets, total = r.counts(vocab)
            post = r.array(POSTING, total)
            index: Index = InvertedIndex(vocab, doc_ids, offsets, post["doc"], post["w"])
        elif kind == KIND_APPROX:
            alpha, block_size, levels, heap_factor = r.struct(PARAMS)
            params = ApproxParams(alpha, block_size, levels, heap_factor)
            fwd_indptr, total = r.counts(docs)
            fwd = r.array(ENTRY, total)
            kept_offsets, total = r.counts(vocab)
            kept = r.array(POSTING, total)
            block_offsets, n_blocks = r.counts(vocab)
            block_ends = r.array("<u4", n_blocks)
            scales = r.array("<f4", n_blocks)
            sum_indptr, total = r.counts(n_blocks)
            sum_terms = r.array("<u4", total)
            codes = r.array(np.uint8, total)
            index = ApproxIndex(
                vocab, doc_ids, params,
                fwd_indptr, fwd["term"], fwd["w"],
                kept_offsets, kept["doc"], kept["w"],
                block_offsets, block_ends, sum_indptr, sum_terms, codes, scales,
            )  # fmt: skip
        else:
            raise IndexFormatError(f"unknown index kind {kind}")
    except IndexFormatError:
        raise
    except (ContractError, UnicodeDecodeError, struct.error) as exc:
        raise IndexFormatError(f"corrupt index: {exc}") from None
    if r.pos != len(data):
        raise IndexFormatError(f"{len(data) - r.pos} trailing bytes after index")
    return index


def load(path: Union[str, os.PathLike]) -> Index:
    with open(path, "rb") as fh:
        return loads(fh.read())
