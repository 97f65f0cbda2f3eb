"""QPS versus recall@10 frontier on a seeded synthetic corpus.

Builds the exact index once, then an approximate index per parameter setting,
and appends one CSV row per setting: QPS, latency percentiles, recall@10
against exact search and the serialized index size. The CSV is plot-ready.
"""

import argparse
import csv
import itertools
import tempfile
from pathlib import Path

from laconic.bench import measure_qps
from laconic.index import ApproxParams, build_approx, build_exact, recall_vs_exact
from laconic.index.format import save
from laconic.synthetic import queries_from_corpus, topical_corpus


def best_report(index, queries, k, threads, repeats):
    reports = [measure_qps(index, queries, k=k, threads=threads) for _ in range(repeats)]
    return max(reports, key=lambda r: r.queries_per_second)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--docs", type=int, default=10_000)
    ap.add_argument("--vocab", type=int, default=5_000)
    ap.add_argument("--queries", type=int, default=500)
    ap.add_argument("--k", type=int, default=10)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--alphas", type=float, nargs="+", default=[0.05, 0.1, 0.2, 0.5, 1.0])
    ap.add_argument("--block-sizes", type=int, nargs="+", default=[8, 32])
    ap.add_argument("--heap-factors", type=float, nargs="+", default=[0.5, 0.7, 0.9, 1.0])
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="runs/frontier.csv")
    args = ap.parse_args()

    corpus = topical_corpus(args.docs, args.vocab, seed=args.seed)
    queries = queries_from_corpus(corpus, args.queries, seed=args.seed + 1)
    exact = build_exact(corpus)

    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    with open(args.out, "w", newline="") as fh, tempfile.TemporaryDirectory() as tmp:
        fields = ["kind", "alpha", "block_size", "heap_factor", "qps", "p50_ms", "p99_ms", "recall_at_10", "index_bytes"]
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()

        def emit(kind, index, params, recall):
            rep = best_report(index, queries, args.k, args.threads, args.repeats)
            size = save(index, Path(tmp) / "index.lcnx")
            row = {"kind": kind, "alpha": params and params.alpha, "block_size": params and params.block_size,
                   "heap_factor": params and params.heap_factor, "qps": round(rep.queries_per_second, 1),
                   "p50_ms": round(rep.p50_ms, 4), "p99_ms": round(rep.p99_ms, 4),
                   "recall_at_10": round(recall, 4), "index_bytes": size}  # fmt: skip
            writer.writerow(row)
            fh.flush()
            print(row)

        emit("exact", exact, None, 1.0)
        for alpha, bs in itertools.product(args.alphas, args.block_sizes):
            for hf in args.heap_factors:
                params = ApproxParams(alpha=alpha, block_size=bs, heap_factor=hf)
                index = build_approx(corpus, params)
                emit("approx", index, params, recall_vs_exact(index, exact, queries, args.k))


if __name__ == "__main__":
    main()
