"""``laconic`` command line: encode, index, search, eval, bench, train-toy.

Exit codes: 0 success, 1 usage/config, 2 data/parse, 3 I/O. Every failure
prints one ``error: ...`` line on stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import fields

from . import bench, eval as ireval
from .encoder import ToyEncoderParams, encode
from .index import ApproxParams, build_approx, build_exact, format as lcnx, search
from .sparse import ContractError, load_jsonl, write_jsonl
from .training import TrainConfig, make_separable_corpus, read_triplets, train_toy, write_metrics_csv

EXIT_USAGE, EXIT_DATA, EXIT_IO = 1, 2, 3
RUN_TAG = "laconic"


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def read_config(path: str) -> dict[str, str]:
    """``key = value`` lines; ``#`` starts a comment."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}: line {lineno}: expected key = value")
            key, value = (part.strip() for part in line.split("=", 1))
            out[key.replace("-", "_")] = value
    return out


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> argparse.Namespace:
    """Parse once to find --config, load it as defaults, parse again so flags win."""
    args = parser.parse_args(argv)
    if not getattr(args, "config", None):
        return args
    try:
        values = read_config(args.config)
    except OSError as exc:
        raise OSError(f"{args.config}: {exc.strerror}") from None
    sub = args._subparser
    actions = {a.dest: a for a in sub._actions}
    unknown = sorted(set(values) - set(actions) - {"config", "help"})
    if unknown:
        raise UsageError(f"unknown config key(s): {', '.join(unknown)}")
    defaults = {}
    for key, value in values.items():
        if isinstance(actions[key], argparse._StoreTrueAction):
            if value.lower() not in ("true", "false", "1", "0", "yes", "no"):
                raise UsageError(f"config key {key}: expected a boolean, got {value!r}")
            defaults[key] = value.lower() in ("true", "1", "yes")
        else:
            defaults[key] = value
    sub.set_defaults(**defaults)
    return parser.parse_args(argv)


def _require(args, *names):
    missing = [n for n in names if not getattr(args, n, None)]
    if missing:
        raise UsageError("missing required setting(s): " + ", ".join("--" + n.replace("_", "-") for n in missing))


def _open(path, mode="r"):
    try:
        return open(path, mode, encoding=None if "b" in mode else "utf-8")
    except OSError as exc:
        raise OSError(f"{path}: {exc.strerror}") from None


def _load_index(path):
    try:
        return lcnx.load(path)
    except OSError as exc:
        raise OSError(f"{path}: {exc.strerror}") from None


def _load_vectors(path, vocab_size=None):
    with _open(path) as fh:
        try:
            return load_jsonl(fh, vocab_size)
        except ContractError as exc:
            raise DataError(f"{path}: {exc}") from None


def _threads(n: int) -> int:
    return bench.thread_cap(max(1, n))


# commands


def cmd_encode(args) -> int:
    _require(args, "params", "input", "output")
    with _open(args.params) as fh:
        try:
            params = ToyEncoderParams.load(fh)
        except (ValueError, KeyError, TypeError) as exc:
            raise DataError(f"{args.params}: bad encoder parameters ({exc})") from None
    records = []
    with _open(args.input) as fh:
        for lineno, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            try:
                obj = json.loads(raw)
                records.append((str(obj["id"]), encode([int(t) for t in obj["tokens"]], params)))
            except (ValueError, KeyError, TypeError) as exc:
                raise DataError(f"{args.input}: line {lineno}: {exc}") from None
    with _open(args.output, "w") as fh:
        write_jsonl(fh, records)
    print(f"encoded {len(records)} sequences into {args.output}")
    return 0


def cmd_index(args) -> int:
    _require(args, "corpus", "index")
    records, vocab = _load_vectors(args.corpus, args.vocab_size)
    try:
        if args.kind == "approx":
            params = ApproxParams(args.alpha, args.block_size, args.summary_levels, args.heap_factor)
            index = build_approx(records, params, vocab_size=vocab)
        else:
            index = build_exact(records, vocab_size=vocab)
    except ContractError as exc:
        raise DataError(str(exc)) from None
    try:
        size = lcnx.save(index, args.index)
    except OSError as exc:
        raise OSError(f"{args.index}: {exc.strerror}") from None
    estimate = bench.estimate_memory_sparse(lcnx.posting_count(index), 8, lcnx.overhead_bytes(index))
    print(f"docs: {index.doc_count}")
    print(f"total postings: {index.total_postings}")
    print(f"posting records (incl. forward store): {lcnx.posting_count(index)}")
    print(f"estimated memory: {estimate.bytes} bytes ({estimate.gib:.4f} GiB)")
    print(f"index file: {args.index} ({size} bytes, kind {index.kind})")
    return 0


def _run_queries(index, queries, k, threads):
    def one(item):
        qid, q = item
        return qid, search(index, q, k)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return dict(pool.map(one, queries))
    return dict(map(one, queries))


def cmd_search(args) -> int:
    _require(args, "index", "queries", "run")
    index = _load_index(args.index)
    queries, _ = _load_vectors(args.queries, index.vocab_size)
    if len({qid for qid, _ in queries}) != len(queries):
        raise DataError(f"{args.queries}: duplicate query id")
    run = _run_queries(index, queries, args.k, _threads(args.threads))
    with _open(args.run, "w") as fh:
        fh.write(ireval.format_run(run, RUN_TAG))
    print(f"searched {len(queries)} queries, wrote {args.run}")
    return 0


def _read_trec(path, parser):
    with _open(path) as fh:
        text = fh.read()
    try:
        return parser(text)
    except ireval.TrecFormatError as exc:
        raise DataError(f"{path}: {exc}") from None


def cmd_eval(args) -> int:
    _require(args, "run", "qrels")
    run = _read_trec(args.run, ireval.parse_run)
    qrels = _read_trec(args.qrels, ireval.parse_qrels)
    ndcg = ireval.ndcg_at_k(run, qrels, args.k)
    recall = ireval.recall_at_k(run, qrels, args.k)
    if ndcg.missing_qrels:
        print(f"warning: {ndcg.missing_qrels} run queries have no qrels and were skipped")
    print(f"queries evaluated: {ndcg.evaluated}")
    print(f"nDCG@{args.k}: {ndcg.value:.4f}")
    print(f"recall@{args.k}: {recall.value:.4f}")
    return 0


def cmd_bench(args) -> int:
    _require(args, "index", "queries")
    index = _load_index(args.index)
    queries, _ = _load_vectors(args.queries, index.vocab_size)
    if not queries:
        raise DataError(f"{args.queries}: no queries to benchmark")
    report = bench.measure_qps(index, [q for _, q in queries], args.k, _threads(args.threads), args.warmup_iters)
    extra = {"label": args.label or index.kind}
    if args.qrels:
        run = _run_queries(index, queries, max(args.k, 10), 1)
        qrels = _read_trec(args.qrels, ireval.parse_qrels)
        extra["ndcg_at_10"] = round(ireval.ndcg_at_k(run, qrels, 10).value, 6)
    text = json.dumps({**json.loads(report.to_json()), **extra}, indent=2)
    if args.report:
        with _open(args.report, "w") as fh:
            fh.write(text + "\n")
    if args.csv:
        new = not os.path.exists(args.csv) or os.path.getsize(args.csv) == 0
        with _open(args.csv, "a") as fh:
            fh.write(report.csv_row(header=new, **extra))
    print(text)
    return 0


_TRAIN_FIELDS = {f.name: f.type for f in fields(TrainConfig)}


def cmd_train_toy(args) -> int:
    _require(args, "params_out")
    overrides = {}
    for name in _TRAIN_FIELDS:
        value = getattr(args, name, None)
        if value is not None:
            overrides[name] = value
    try:
        cfg = TrainConfig(**overrides)
    except ContractError as exc:
        raise UsageError(f"invalid training config: {exc}") from None
    if args.triplets:
        with _open(args.triplets) as fh:
            try:
                corpus = read_triplets(fh)
            except ContractError as exc:
                raise DataError(f"{args.triplets}: {exc}") from None
    else:
        corpus = make_separable_corpus(hard_negatives=cfg.hard_negatives_per_query, seed=args.seed)
    try:
        params, metrics = train_toy(corpus, cfg, seed=args.seed)
    except ContractError as exc:
        raise DataError(str(exc)) from None
    with _open(args.params_out, "w") as fh:
        params.save(fh)
    if args.metrics_out:
        with _open(args.metrics_out, "w") as fh:
            write_metrics_csv(fh, metrics)
    last = metrics[-1] if metrics else None
    print(f"trained {cfg.epochs} epochs on {len(corpus)} triplets; params -> {args.params_out}")
    if last:
        print(f"final loss {last.loss:.6f}, mean doc nnz {last.mean_d_nnz:.2f}")
    return 0


def _bool(text: str) -> bool:
    if text.lower() in ("true", "1", "yes"):
        return True
    if text.lower() in ("false", "0", "no"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="laconic", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    subs = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def sub(name, func, help):
        p = subs.add_parser(name, help=help)
        p.add_argument("--config", help="key = value file; flags override it")
        p.set_defaults(func=func, _subparser=p)
        return p

    p = sub("encode", cmd_encode, "token-id JSONL -> sparse-vector JSONL via the toy encoder")
    p.add_argument("--params")
    p.add_argument("--input")
    p.add_argument("--output")

    p = sub("index", cmd_index, "build an LCNX index from sparse-vector JSONL")
    p.add_argument("--corpus")
    p.add_argument("--index")
    p.add_argument("--kind", choices=("exact", "approx"), default="exact")
    p.add_argument("--vocab-size", type=int)
    p.add_argument("--alpha", type=float, default=ApproxParams.alpha)
    p.add_argument("--block-size", type=int, default=ApproxParams.block_size)
    p.add_argument("--summary-levels", type=int, default=ApproxParams.summary_levels)
    p.add_argument("--heap-factor", type=float, default=ApproxParams.heap_factor)

    p = sub("search", cmd_search, "run queries against an index and write a TREC run")
    p.add_argument("--index")
    p.add_argument("--queries")
    p.add_argument("--run")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--threads", type=int, default=1)

    p = sub("eval", cmd_eval, "nDCG@k and recall@k of a run against qrels")
    p.add_argument("--run")
    p.add_argument("--qrels")
    p.add_argument("--k", type=int, default=10)

    p = sub("bench", cmd_bench, "measure search QPS and latency percentiles")
    p.add_argument("--index")
    p.add_argument("--queries")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--warmup-iters", type=int, default=1)
    p.add_argument("--report", help="write the JSON report here")
    p.add_argument("--csv", help="append a CSV row here (header written when new)")
    p.add_argument("--qrels", help="also record nDCG@10 for the frontier plot")
    p.add_argument("--label")

    p = sub("train-toy", cmd_train_toy, "train the toy encoder")
    p.add_argument("--triplets", help="triplet JSONL; default is the built-in separable corpus")
    p.add_argument("--params-out")
    p.add_argument("--metrics-out")
    p.add_argument("--seed", type=int, default=0)
    for name, typ in _TRAIN_FIELDS.items():
        conv = {"float": float, "int": int, "bool": _bool, "str": str}[typ if isinstance(typ, str) else typ.__name__]
        p.add_argument("--" + name.replace("_", "-"), type=conv, default=None)
    return parser


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
        code = args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, ContractError, ireval.TrecFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    return code


if __name__ == "__main__":
    sys.exit(main())
