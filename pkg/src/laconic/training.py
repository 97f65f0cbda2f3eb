"""Contrastive ranking loss, FLOPs sparsity penalty and the toy training loop."""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import asdict, dataclass, field
from typing import IO, Iterable, Sequence

import numpy as np

from .encoder import (
    ToyEncoderParams,
    pool_dense,
    splade_pool_backward,
    toy_encode,
    toy_encode_backward,
)
from .sparse import ContractError, SparseVector, densify

log = logging.getLogger(__name__)

PHASES = ("pre_finetune", "finetune")


@dataclass
class ScoreMatrix:
    scores: np.ndarray  # (B_q, B_d)
    positive_index: np.ndarray  # (B_q,)

    def __post_init__(self):
        self.scores = np.atleast_2d(np.asarray(self.scores, dtype=np.float64))
        self.positive_index = np.asarray(self.positive_index, dtype=np.int64).reshape(-1)
        n_q, n_d = self.scores.shape
        if self.positive_index.shape != (n_q,):
            raise ContractError("need exactly one positive index per query row")
        if np.any(self.positive_index < 0) or np.any(self.positive_index >= n_d):
            raise ContractError("positive_index out of range")
        if n_d < 2:
            raise ContractError("each row needs at least one negative column")
        if not np.all(np.isfinite(self.scores)):
            raise ContractError("scores must be finite")


def _log_softmax(scores: np.ndarray) -> np.ndarray:
    top = scores.max(axis=1, keepdims=True)
    shifted = scores - top
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def infonce_loss(sm: ScoreMatrix, temperature: float = 1.0) -> float:
    s = sm.scores / temperature
    rows = np.arange(s.shape[0])
    nll = -_log_softmax(s)[rows, sm.positive_index]
    return float(np.maximum(nll, 0.0).mean())


def infonce_grad(sm: ScoreMatrix, temperature: float = 1.0) -> np.ndarray:
    """d(infonce_loss)/d(scores)."""
    s = sm.scores / temperature
    probs = np.exp(_log_softmax(s))
    probs[np.arange(s.shape[0]), sm.positive_index] -= 1.0
    return probs / (s.shape[0] * temperature)


def _stack(batch: Sequence[SparseVector]) -> np.ndarray:
    if len(batch) == 0:
        raise ContractError("FLOPs regularizer needs a non-empty batch")
    sizes = {v.vocab_size for v in batch}
    if len(sizes) != 1:
        raise ContractError(f"batch mixes vocabulary sizes {sorted(sizes)}")
    return np.stack([densify(v) for v in batch])


def flops_reg_dense(acts: np.ndarray) -> float:
    acts = np.asarray(acts, dtype=np.float64)
    if acts.ndim != 2 or acts.shape[0] == 0:
        raise ContractError("FLOPs regularizer needs a non-empty (B, V) batch")
    return float(np.square(acts.mean(axis=0)).sum())


def flops_reg_grad(acts: np.ndarray) -> np.ndarray:
    acts = np.asarray(acts, dtype=np.float64)
    return np.broadcast_to(2.0 * acts.mean(axis=0) / acts.shape[0], acts.shape).copy()


def flops_reg(batch: Sequence[SparseVector]) -> float:
    """Sum over terms of the squared mean activation across the batch."""
    return flops_reg_dense(_stack(batch))


def warmup(step: int, T: int, exponent: float = 2.0) -> float:
    if step < 0 or T < 0:
        raise ContractError("step and warmup horizon must be nonnegative")
    if T == 0:
        return 1.0
    return min(1.0, (step / T) ** exponent)


@dataclass
class TrainConfig:
    lambda_q: float = 1e-3
    lambda_d: float = 1e-3
    warmup_steps: int = 0
    warmup_exponent: float = 2.0
    phase: str = "pre_finetune"
    hard_negatives_per_query: int = 0
    batch_size: int = 8
    epochs: int = 1
    learning_rate: float = 0.05
    cosine_decay: bool = False
    temperature: float = 1.0
    # toy encoder dimensions
    num_tokens: int = 64
    width: int = 16
    vocab_size: int = 256
    init_scale: float = 0.5

    def __post_init__(self):
        problems = []
        if self.lambda_q < 0:
            problems.append("lambda_q must be >= 0")
        if self.lambda_d < 0:
            problems.append("lambda_d must be >= 0")
        if self.warmup_steps < 0:
            problems.append("warmup_steps must be >= 0")
        if self.phase not in PHASES:
            problems.append(f"phase must be one of {PHASES}")
        if self.hard_negatives_per_query < 0:
            problems.append("hard_negatives_per_query must be >= 0")
        if self.phase == "pre_finetune" and self.hard_negatives_per_query != 0:
            problems.append("hard_negatives_per_query must be 0 in pre_finetune (in-batch negatives only)")
        if self.batch_size < 1:
            problems.append("batch_size must be >= 1")
        if self.epochs < 0:
            problems.append("epochs must be >= 0")
        if self.learning_rate <= 0:
            problems.append("learning_rate must be > 0")
        if self.temperature <= 0:
            problems.append("temperature must be > 0")
        for name in ("num_tokens", "width", "vocab_size"):
            if getattr(self, name) < 1:
                problems.append(f"{name} must be >= 1")
        if problems:
            raise ContractError("; ".join(problems))


def total_loss(
    sm: ScoreMatrix,
    q_acts: Sequence[SparseVector],
    d_acts: Sequence[SparseVector],
    cfg: TrainConfig,
    step: int,
) -> float:
    if step < 0:
        raise ContractError("step must be >= 0")
    loss = infonce_loss(sm, cfg.temperature)
    if cfg.lambda_q == 0 and cfg.lambda_d == 0:
        return loss
    w = warmup(step, cfg.warmup_steps, cfg.warmup_exponent)
    return loss + w * (cfg.lambda_q * flops_reg(q_acts) + cfg.lambda_d * flops_reg(d_acts))


@dataclass
class Triplet:
    query: list[int]
    positive: list[int]
    negatives: list[list[int]] = field(default_factory=list)


def read_triplets(fh: IO[str]) -> list[Triplet]:
    out = []
    for lineno, raw in enumerate(fh, start=1):
        if not raw.strip():
            continue
        try:
            obj = json.loads(raw)
            out.append(
                Triplet(
                    [int(t) for t in obj["query"]],
                    [int(t) for t in obj["positive"]],
                    [[int(t) for t in neg] for neg in obj.get("negatives", [])],
                )
            )
        except (ValueError, KeyError, TypeError) as exc:
            raise ContractError(f"line {lineno}: malformed triplet ({exc})") from None
    return out


def write_triplets(fh: IO[str], triplets: Iterable[Triplet]) -> None:
    for t in triplets:
        fh.write(json.dumps(asdict(t)) + "\n")


def batch_documents(batch: Sequence[Triplet], cfg: TrainConfig) -> list[list[int]]:
    """Candidate documents shared by every query in the batch.

    Positives come first (so query i's positive sits at column i), then every
    hard negative of every query in the batch.
    """
    docs = [t.positive for t in batch]
    if cfg.phase == "finetune" and cfg.hard_negatives_per_query:
        for t in batch:
            docs.extend(t.negatives[: cfg.hard_negatives_per_query])
    return docs


def batch_loss_and_grad(
    params: ToyEncoderParams, batch: Sequence[Triplet], cfg: TrainConfig, step: int
) -> tuple[float, ToyEncoderParams, dict]:
    """Total loss of one batch and its gradient w.r.t. the encoder parameters."""
    docs = batch_documents(batch, cfg)
    if len(docs) < 2:
        raise ContractError("a batch needs at least two candidate documents")
    q_logits = [toy_encode(t.query, params) for t in batch]
    d_logits = [toy_encode(d, params) for d in docs]
    Q = np.stack([pool_dense(h) for h in q_logits])
    D = np.stack([pool_dense(h) for h in d_logits])

    sm = ScoreMatrix(Q @ D.T, np.arange(len(batch)))
    loss = infonce_loss(sm, cfg.temperature)
    g_s = infonce_grad(sm, cfg.temperature)
    g_Q = g_s @ D
    g_D = g_s.T @ Q

    w = warmup(step, cfg.warmup_steps, cfg.warmup_exponent)
    if cfg.lambda_q:
        loss += w * cfg.lambda_q * flops_reg_dense(Q)
        g_Q += w * cfg.lambda_q * flops_reg_grad(Q)
    if cfg.lambda_d:
        loss += w * cfg.lambda_d * flops_reg_dense(D)
        g_D += w * cfg.lambda_d * flops_reg_grad(D)

    g_emb = np.zeros_like(params.embedding)
    g_proj = np.zeros_like(params.projection)
    for seqs, logits, grads in ((batch, q_logits, g_Q), (docs, d_logits, g_D)):
        for item, h, g in zip(seqs, logits, grads):
            ids = item.query if isinstance(item, Triplet) else item
            ge, gp = toy_encode_backward(ids, params, splade_pool_backward(h, g))
            g_emb += ge
            g_proj += gp

    stats = {
        "q_nnz": float(np.count_nonzero(Q, axis=1).mean()),
        "d_nnz": float(np.count_nonzero(D, axis=1).mean()),
    }
    return loss, ToyEncoderParams(g_emb, g_proj), stats


def mean_nnz(params: ToyEncoderParams, sequences: Iterable[Sequence[int]]) -> float:
    counts = [np.count_nonzero(pool_dense(toy_encode(s, params))) for s in sequences]
    return float(np.mean(counts)) if counts else 0.0


@dataclass
class EpochMetrics:
    epoch: int
    loss: float
    mean_q_nnz: float
    mean_d_nnz: float


def train_toy(
    corpus: Sequence[Triplet],
    cfg: TrainConfig,
    seed: int,
    init: ToyEncoderParams | None = None,
) -> tuple[ToyEncoderParams, list[EpochMetrics]]:
    """Plain SGD on the total loss; deterministic for a fixed seed.

    ``loss`` in each epoch's metrics is the mean batch loss seen during that
    epoch; the nnz columns are measured on the whole corpus after the epoch.
    """
    if not corpus:
        raise ContractError("training corpus is empty")
    if cfg.phase == "finetune":
        short = [i for i, t in enumerate(corpus) if len(t.negatives) < cfg.hard_negatives_per_query]
        if short:
            raise ContractError(
                f"triplet {short[0]} has fewer than {cfg.hard_negatives_per_query} hard negatives"
            )
    rng = np.random.default_rng(seed)
    if init is None:
        params = ToyEncoderParams.init(cfg.num_tokens, cfg.width, cfg.vocab_size, seed, cfg.init_scale)
    else:
        params = init.copy()

    n = len(corpus)
    batches_per_epoch = math.ceil(n / cfg.batch_size)
    total_steps = batches_per_epoch * cfg.epochs
    # a lone leftover example has no in-batch negatives; fold it into the previous batch
    metrics: list[EpochMetrics] = []
    step = 0
    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(n)
        chunks = [order[i : i + cfg.batch_size] for i in range(0, n, cfg.batch_size)]
        if len(chunks) > 1 and len(chunks[-1]) == 1 and cfg.hard_negatives_per_query == 0:
            chunks[-2] = np.concatenate([chunks[-2], chunks.pop()])
        losses = []
        for idx in chunks:
            batch = [corpus[i] for i in idx]
            lr = cfg.learning_rate
            if cfg.cosine_decay and total_steps > 1:
                lr *= 0.5 * (1.0 + math.cos(math.pi * step / (total_steps - 1)))
            loss, grad, _ = batch_loss_and_grad(params, batch, cfg, step)
            params.embedding -= lr * grad.embedding
            params.projection -= lr * grad.projection
            losses.append(loss)
            step += 1
        m = EpochMetrics(
            epoch,
            float(np.mean(losses)),
            mean_nnz(params, (t.query for t in corpus)),
            mean_nnz(params, (t.positive for t in corpus)),
        )
        log.info("epoch %d loss %.5f q_nnz %.2f d_nnz %.2f", m.epoch, m.loss, m.mean_q_nnz, m.mean_d_nnz)
        metrics.append(m)
    return params, metrics


def write_metrics_csv(fh: IO[str], metrics: Iterable[EpochMetrics]) -> None:
    writer = csv.writer(fh)
    writer.writerow(["epoch", "loss", "mean_q_nnz", "mean_d_nnz"])
    for m in metrics:
        writer.writerow([m.epoch, f"{m.loss:.8g}", f"{m.mean_q_nnz:.4f}", f"{m.mean_d_nnz:.4f}"])


def make_separable_corpus(
    num_families: int = 8,
    tokens_per_family: int = 8,
    queries_per_family: int = 4,
    query_len: int = 3,
    doc_len: int = 5,
    hard_negatives: int = 0,
    seed: int = 0,
) -> list[Triplet]:
    """Synthetic triplets where a query and its positive draw tokens from one family.

    Token ids of family f are ``f*tokens_per_family .. (f+1)*tokens_per_family-1``.
    Hard negatives come from other families.
    """
    rng = np.random.default_rng(seed)

    def sample(fam: int, length: int) -> list[int]:
        base = fam * tokens_per_family
        return [int(base + t) for t in rng.choice(tokens_per_family, size=length, replace=True)]

    out = []
    for fam in range(num_families):
        for _ in range(queries_per_family):
            negs = []
            for _ in range(hard_negatives):
                other = int(rng.integers(num_families - 1))
                other += other >= fam
                negs.append(sample(other, doc_len))
            out.append(Triplet(sample(fam, query_len), sample(fam, doc_len), negs))
    return out
