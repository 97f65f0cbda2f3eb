"""nDCG@k and recall@k over TREC-format qrels and runs."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import IO, Iterable

Qrels = dict[str, dict[str, int]]
Run = dict[str, list[tuple[str, float]]]


class TrecFormatError(ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


def parse_qrels(text: str) -> Qrels:
    """``query_id iter doc_id rel`` per line."""
    qrels: Qrels = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != 4:
            raise TrecFormatError(lineno, f"expected 4 fields in qrels, got {len(parts)}")
        qid, _, doc_id, rel = parts
        try:
            rel = int(rel)
        except ValueError:
            raise TrecFormatError(lineno, f"relevance {rel!r} is not an integer") from None
        if rel < 0:
            raise TrecFormatError(lineno, "relevance must be >= 0")
        judged = qrels.setdefault(qid, {})
        if doc_id in judged:
            raise TrecFormatError(lineno, f"duplicate judgment for ({qid}, {doc_id})")
        judged[doc_id] = rel
    return qrels


def parse_run(text: str) -> Run:
    """``query_id Q0 doc_id rank score tag`` per line; rank column is ignored."""
    run: Run = {}
    seen: dict[str, set[str]] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != 6:
            raise TrecFormatError(lineno, f"expected 6 fields in run, got {len(parts)}")
        qid, _, doc_id, rank, score, _ = parts
        try:
            int(rank)
            score = float(score)
        except ValueError:
            raise TrecFormatError(lineno, "rank must be an integer and score a number") from None
        if not math.isfinite(score):
            raise TrecFormatError(lineno, "score must be finite")
        if doc_id in seen.setdefault(qid, set()):
            raise TrecFormatError(lineno, f"duplicate document {doc_id} for query {qid}")
        seen[qid].add(doc_id)
        run.setdefault(qid, []).append((doc_id, score))
    return {qid: sorted(rows, key=lambda r: (-r[1], r[0])) for qid, rows in sorted(run.items())}


def format_qrels(qrels: Qrels) -> str:
    return "".join(
        f"{qid} 0 {doc_id} {rel}\n" for qid in sorted(qrels) for doc_id, rel in sorted(qrels[qid].items())
    )


def format_run(run: Run, tag: str = "laconic") -> str:
    lines = []
    for qid in sorted(run):
        rows = sorted(run[qid], key=lambda r: (-r[1], r[0]))
        for rank, (doc_id, score) in enumerate(rows, start=1):
            lines.append(f"{qid} Q0 {doc_id} {rank} {score!r} {tag}\n")
    return "".join(lines)


@dataclass
class EvalResult:
    value: float
    evaluated: int
    missing_qrels: int = 0


def _ranked(rows: list[tuple[str, float]], k: int) -> list[str]:
    return [d for d, _ in sorted(rows, key=lambda r: (-r[1], r[0]))[:k]]


def _per_query(run: Run, qrels: Qrels, k: int, metric) -> EvalResult:
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    values, missing = [], 0
    for qid in sorted(set(run) | set(qrels)):
        if qid not in qrels:
            missing += 1
            continue
        v = metric(_ranked(run.get(qid, []), k), qrels[qid], k)
        if v is not None:
            values.append(v)
    # no contributing query: vacuously perfect, reported with evaluated == 0
    mean = sum(values) / len(values) if values else 1.0
    return EvalResult(mean, len(values), missing)


def _ndcg(top: list[str], judged: dict[str, int], k: int):
    ideal = sorted((r for r in judged.values() if r > 0), reverse=True)[:k]
    idcg = sum((2**r - 1) / math.log2(i + 2) for i, r in enumerate(ideal))
    if idcg == 0:
        return None
    dcg = sum((2 ** judged.get(d, 0) - 1) / math.log2(i + 2) for i, d in enumerate(top))
    return dcg / idcg


def _recall(top: list[str], judged: dict[str, int], k: int):
    relevant = {d for d, r in judged.items() if r > 0}
    if not relevant:
        return None
    return len(relevant.intersection(top)) / len(relevant)


def ndcg_at_k(run: Run, qrels: Qrels, k: int = 10) -> EvalResult:
    """Mean nDCG@k with gain 2^rel - 1; queries without relevant docs are skipped."""
    return _per_query(run, qrels, k, _ndcg)


def recall_at_k(run: Run, qrels: Qrels, k: int = 10) -> EvalResult:
    return _per_query(run, qrels, k, _recall)


def read_qrels(fh: IO[str]) -> Qrels:
    return parse_qrels(fh.read())


def read_run(fh: IO[str]) -> Run:
    return parse_run(fh.read())


def run_from_results(results: Iterable[tuple[str, list[tuple[str, float]]]]) -> Run:
    return {qid: list(rows) for qid, rows in results}
