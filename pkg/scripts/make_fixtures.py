"""Regenerate the small CLI fixtures under tests/fixtures/.

The corpus and queries are seeded synthetic vectors. Qrels grade each query's
exact top-3 (2, 1, 1), so the exact pipeline scores a perfect nDCG@10.
"""

import argparse
import json
from pathlib import Path

from laconic.eval import format_qrels
from laconic.index import build_exact, search_exact
from laconic.sparse import SparseVector, write_jsonl
from laconic.synthetic import queries_from_corpus, random_corpus


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=str(Path(__file__).resolve().parents[1] / "tests" / "fixtures"))
    ap.add_argument("--seed", type=int, default=21)
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    tiny = [
        ("a", SparseVector.from_pairs([(0, 1.5), (3, 0.25)], 6)),
        ("b", SparseVector.from_pairs([(1, 2.0), (3, 1.0), (5, 0.5)], 6)),
        ("c", SparseVector.from_pairs([(5, 3.0)], 6)),
    ]
    with open(out / "tiny.jsonl", "w") as fh:
        write_jsonl(fh, tiny)

    corpus = random_corpus(60, 50, seed=args.seed, max_nnz=12)
    queries = [(f"q{i}", q) for i, q in enumerate(queries_from_corpus(corpus, 8, seed=args.seed + 1, terms_per_query=4))]
    with open(out / "corpus.jsonl", "w") as fh:
        write_jsonl(fh, corpus)
    with open(out / "queries.jsonl", "w") as fh:
        write_jsonl(fh, queries)

    exact = build_exact(corpus)
    qrels = {qid: {d: g for (d, _), g in zip(search_exact(exact, q, 3), (2, 1, 1))} for qid, q in queries}
    (out / "qrels.txt").write_text(format_qrels(qrels))

    (out / "two_doc_qrels.txt").write_text("q1 0 d1 3\nq1 0 d2 1\n")
    (out / "two_doc_run.txt").write_text("q1 Q0 d2 1 2.0 laconic\nq1 Q0 d1 2 1.0 laconic\n")

    with open(out / "tokens.jsonl", "w") as fh:
        for i, toks in enumerate([[1, 2, 3], [4, 4, 5, 6], [7], [0, 9, 10, 11, 2]]):
            fh.write(json.dumps({"id": f"s{i}", "tokens": toks}) + "\n")


if __name__ == "__main__":
    main()
