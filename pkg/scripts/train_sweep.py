"""Sweep the FLOPs weight on the separable toy corpus.

Writes one metrics CSV per lambda plus a summary CSV with the final loss and
mean query/document nnz, which shows how the regularizer trades loss for
sparsity.
"""

import argparse
import csv
from pathlib import Path

from laconic.training import TrainConfig, make_separable_corpus, train_toy, write_metrics_csv


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--lambdas", type=float, nargs="+", default=[0.0, 1e-3, 1e-2, 1e-1])
    ap.add_argument("--epochs", type=int, default=50)
    ap.add_argument("--warmup-steps", type=int, default=50)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="runs/train_sweep")
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    corpus = make_separable_corpus(seed=args.seed)
    summary = []
    for lam in args.lambdas:
        cfg = TrainConfig(lambda_q=lam, lambda_d=lam, epochs=args.epochs, warmup_steps=args.warmup_steps)
        _, metrics = train_toy(corpus, cfg, seed=args.seed)
        with open(out / f"metrics_lambda_{lam:g}.csv", "w") as fh:
            write_metrics_csv(fh, metrics)
        last = metrics[-1]
        summary.append({"lambda": lam, "first_loss": metrics[0].loss, "final_loss": last.loss,
                        "mean_q_nnz": last.mean_q_nnz, "mean_d_nnz": last.mean_d_nnz})  # fmt: skip
        print(f"lambda={lam:g}: loss {metrics[0].loss:.3f} -> {last.loss:.3f}, "
              f"q nnz {last.mean_q_nnz:.1f}, d nnz {last.mean_d_nnz:.1f}")  # fmt: skip

    with open(out / "summary.csv", "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(summary[0]))
        writer.writeheader()
        writer.writerows(summary)


if __name__ == "__main__":
    main()
