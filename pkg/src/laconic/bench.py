"""Query-latency harness and closed-form index memory estimates."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .index import search
from .sparse import ContractError, SparseVector

MSMARCO_PASSAGES = 8_841_823


@dataclass
class BenchReport:
    queries_per_second: float
    p50_ms: float
    p95_ms: float
    p99_ms: float
    thread_count: int
    total_queries: int
    wall_time: float
    k: int
    index_kind: str

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)

    def csv_row(self, header: bool = False, **extra) -> str:
        row = {**asdict(self), **extra}
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=list(row))
        if header:
            writer.writeheader()
        writer.writerow(row)
        return buf.getvalue()


def percentile(sorted_values: Sequence[float], q: float) -> float:
    """Nearest-rank percentile of an ascending list."""
    if not sorted_values:
        raise ContractError("percentile of an empty list")
    rank = max(1, math.ceil(q / 100.0 * len(sorted_values)))
    return sorted_values[rank - 1]


def thread_cap(requested: int) -> int:
    cap = os.environ.get("LACONIC_THREADS")
    if cap:
        try:
            return max(1, min(requested, int(cap)))
        except ValueError:
            raise ContractError(f"LACONIC_THREADS must be an integer, got {cap!r}") from None
    return requested


def measure_qps(
    index,
    queries: Sequence[SparseVector],
    k: int = 10,
    threads: int = 1,
    warmup_iters: int = 1,
) -> BenchReport:
    """Time one pass over ``queries`` after ``warmup_iters`` untimed passes.

    Queries are split into contiguous shards, one per worker. Only search time
    is measured; results are discarded.
    """
    if not queries:
        raise ContractError("benchmark needs at least one query")
    if threads < 1:
        raise ContractError("threads must be >= 1")
    if k < 1:
        raise ContractError("k must be >= 1")
    threads = min(threads, len(queries))
    for _ in range(warmup_iters):
        for q in queries:
            search(index, q, k)

    latencies = np.zeros(len(queries))
    shards = np.array_split(np.arange(len(queries)), threads)
    barrier = threading.Barrier(threads + 1)

    def work(shard):
        barrier.wait()
        for i in shard.tolist():
            t0 = time.perf_counter()
            search(index, queries[i], k)
            latencies[i] = time.perf_counter() - t0

    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [pool.submit(work, s) for s in shards]
        barrier.wait()
        start = time.perf_counter()
        for f in futures:
            f.result()
        wall = time.perf_counter() - start

    lat_ms = sorted((latencies * 1e3).tolist())
    return BenchReport(
        queries_per_second=len(queries) / wall,
        p50_ms=percentile(lat_ms, 50),
        p95_ms=percentile(lat_ms, 95),
        p99_ms=percentile(lat_ms, 99),
        thread_count=threads,
        total_queries=len(queries),
        wall_time=wall,
        k=k,
        index_kind=getattr(index, "kind", type(index).__name__),
    )


@dataclass(frozen=True)
class MemoryEstimate:
    kind: str
    bytes: int
    doc_count: int | None = None
    dim: int | None = None
    total_postings: int | None = None
    bytes_per_unit: int = 0
    overhead_bytes: int = 0

    @property
    def gib(self) -> float:
        return self.bytes / 2**30


def _nonneg(**values):
    for name, v in values.items():
        if v < 0:
            raise ContractError(f"{name} must be >= 0, got {v}")


def estimate_memory_dense(doc_count: int, dim: int, bytes_per_value: int = 4) -> MemoryEstimate:
    _nonneg(doc_count=doc_count, dim=dim, bytes_per_value=bytes_per_value)
    return MemoryEstimate("dense", doc_count * dim * bytes_per_value, doc_count=doc_count, dim=dim,
                          bytes_per_unit=bytes_per_value)  # fmt: skip


def estimate_memory_sparse(total_postings: int, bytes_per_posting: int = 8, overhead_bytes: int = 0) -> MemoryEstimate:
    _nonneg(total_postings=total_postings, bytes_per_posting=bytes_per_posting, overhead_bytes=overhead_bytes)
    return MemoryEstimate("sparse", total_postings * bytes_per_posting + overhead_bytes,
                          total_postings=total_postings, bytes_per_unit=bytes_per_posting,
                          overhead_bytes=overhead_bytes)  # fmt: skip
