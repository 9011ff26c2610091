"""Mini-batch SGD training loop with classical momentum.

The batch gradient is the *mean* over examples, so the learning rate
keeps its meaning regardless of batch size. The dropout rate decays
linearly per epoch between its configured endpoints. Within a batch,
per-example work can fan out to BOTLSTM_THREADS worker threads; every
example gets its own seeded generator and the reduction order is fixed,
so results are bit-identical at any worker count.
"""

from __future__ import annotations

import csv
import logging
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, InternalError
from .metrics import BOT, HUMAN, ConfusionCounts, MetricsReport, compute_metrics, tally
from .nn_core import ModelParams, backward, bilstm_forward

log = logging.getLogger(__name__)

#: Loss value substituted when the true class gets probability exactly 0.
LOSS_CLAMP = -math.log(1e-300)


@dataclass
class TrainingConfig:
    learning_rate: float = 0.01
    momentum: float = 0.9
    batch_size: int = 64
    epochs: int = 30
    dropout_start: float = 0.5
    dropout_end: float = 0.1
    seed: int = 0
    max_seq_len: int = 64

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError("momentum must be in [0, 1)")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if not 0.0 <= self.dropout_end <= self.dropout_start < 1.0:
            raise ValueError("need 0 <= dropout_end <= dropout_start < 1")
        if self.max_seq_len < 1:
            raise ValueError("max_seq_len must be >= 1")


@dataclass
class EpochStats:
    epoch: int
    loss: float
    accuracy: float
    dropout: float
    seconds: float
    clamped: int = 0


@dataclass
class TrainHistory:
    epochs: list[EpochStats] = field(default_factory=list)

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["epoch", "loss", "accuracy", "dropout", "seconds"])
            for e in self.epochs:
                writer.writerow(
                    [e.epoch, f"{e.loss:.10g}", f"{e.accuracy:.10g}",
                     f"{e.dropout:.10g}", f"{e.seconds:.6f}"]
                )


def nll_loss(probabilities, label: int) -> float:
    """-log p(label), clamped at -log(1e-300) when that probability is 0."""
    p = float(probabilities[label])
    if p <= 0.0:
        return LOSS_CLAMP
    return -math.log(p)


def dropout_schedule(epoch: int, cfg: TrainingConfig) -> float:
    """Linear decay from dropout_start (epoch 1) to dropout_end (last epoch)."""
    if not 1 <= epoch <= cfg.epochs:
        raise ValueError(f"epoch {epoch} outside 1..{cfg.epochs}")
    if cfg.epochs == 1:
        return cfg.dropout_start
    t = (epoch - 1) / (cfg.epochs - 1)
    return cfg.dropout_start * (1.0 - t) + cfg.dropout_end * t


def sgd_momentum_step(
    params: ModelParams,
    grads: dict[str, np.ndarray],
    velocity: dict[str, np.ndarray],
    lr: float,
    momentum: float,
):
    """Classical momentum update: v <- mu*v - lr*g; theta <- theta + v.

    Frozen embedding rows are never touched. Mutates `params` and
    `velocity` in place and returns them.
    """
    for name, tensor in params.named_tensors():
        g = grads[name]
        if not np.isfinite(g).all():
            raise InternalError(f"non-finite gradient for {name}", module="trainer")
        v = velocity.get(name)
        if v is None:
            v = np.zeros_like(tensor)
            velocity[name] = v
        v *= momentum
        v -= lr * g
        if name == "embedding.vectors":
            rows = params.embedding.trainable_mask
            tensor[rows] += v[rows]
        else:
            tensor += v
    return params, velocity


def worker_count() -> int:
    """Worker cap from BOTLSTM_THREADS (default 1; bad values fall back to 1)."""
    raw = os.environ.get("BOTLSTM_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        log.warning("ignoring non-integer BOTLSTM_THREADS=%r", raw)
        return 1
    return max(1, n)


def _example_pass(model, example, rate: float, seed: int):
    """Forward+backward for one example; returns (loss, clamped, correct, grads)."""
    rng = np.random.default_rng(seed) if rate > 0.0 else None
    trace = bilstm_forward(
        model, example.ids, dropout_rate=rate, rng=rng, train_mode=True
    )
    p = float(trace.probabilities[example.label])
    loss = nll_loss(trace.probabilities, example.label)
    pred = BOT if trace.probabilities[BOT] >= 0.5 else HUMAN
    grads = backward(model, trace, example.label)
    return loss, p <= 0.0, pred == example.label, grads


def _map_examples(fn, items, workers: int):
    if workers <= 1 or len(items) <= 1:
        return [fn(*args) for args in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda args: fn(*args), items))


def batch_indices(order, batch_size: int):
    """Split an index order into consecutive batches (last may be short)."""
    for start in range(0, len(order), batch_size):
        yield order[start : start + batch_size]


def train(model: ModelParams, dataset, cfg: TrainingConfig):
    """Train `model` on a list of LabeledSequence for cfg.epochs epochs.

    Each epoch reshuffles with the seeded generator, walks batches of
    cfg.batch_size (last batch may be short), and applies one momentum
    step per batch on the mean gradient. Returns (model, TrainHistory).
    """
    if not dataset:
        raise DataError("training dataset is empty", module="trainer")
    rng = np.random.default_rng(cfg.seed)
    velocity: dict[str, np.ndarray] = {}
    workers = worker_count()
    history = TrainHistory()

    for epoch in range(1, cfg.epochs + 1):
        tic = time.perf_counter()
        rate = dropout_schedule(epoch, cfg)
        order = rng.permutation(len(dataset))
        loss_sum = 0.0
        n_correct = 0
        n_clamped = 0
        for batch_ids in batch_indices(order, cfg.batch_size):
            batch = [dataset[i] for i in batch_ids]
            seeds = rng.integers(0, np.iinfo(np.int64).max, size=len(batch))
            results = _map_examples(
                _example_pass,
                [(model, ex, rate, int(s)) for ex, s in zip(batch, seeds)],
                workers,
            )
            grad_sum = None
            for loss, clamped, correct, grads in results:
                loss_sum += loss
                n_clamped += clamped
                n_correct += correct
                if grad_sum is None:
                    grad_sum = grads
                else:
                    for name, g in grads.items():
                        grad_sum[name] += g
            scale = 1.0 / len(batch)
            for g in grad_sum.values():
                g *= scale
            sgd_momentum_step(model, grad_sum, velocity, cfg.learning_rate, cfg.momentum)
        if n_clamped:
            log.warning("epoch %d: %d clamped zero-probability losses", epoch, n_clamped)
        history.epochs.append(
            EpochStats(
                epoch=epoch,
                loss=loss_sum / len(dataset),
                accuracy=n_correct / len(dataset),
                dropout=rate,
                seconds=time.perf_counter() - tic,
                clamped=n_clamped,
            )
        )
    return model, history


def account_probabilities(model: ModelParams, dataset) -> dict[str, tuple[int, float]]:
    """Mean bot probability per account, keyed by account id.

    Accounts keep their first-appearance order; the returned values are
    (label, mean p_bot) pairs.
    """
    if not dataset:
        raise DataError("evaluation dataset is empty", module="trainer")
    sums: dict[str, float] = {}
    counts: dict[str, int] = {}
    labels: dict[str, int] = {}
    for ex in dataset:
        trace = bilstm_forward(model, ex.ids)
        p_bot = float(trace.probabilities[BOT])
        sums[ex.account_id] = sums.get(ex.account_id, 0.0) + p_bot
        counts[ex.account_id] = counts.get(ex.account_id, 0) + 1
        labels[ex.account_id] = ex.label
    return {
        acct: (labels[acct], sums[acct] / counts[acct]) for acct in sums
    }


def evaluate(model: ModelParams, dataset) -> tuple[ConfusionCounts, MetricsReport]:
    """Score per account: mean bot probability, threshold 0.5 (ties -> bot)."""
    per_account = account_probabilities(model, dataset)
    predictions = []
    labels = []
    for acct, (label, p_bot) in per_account.items():
        if p_bot == 0.5:
            log.info("account %s scored exactly 0.5; predicting bot", acct)
        predictions.append(BOT if p_bot >= 0.5 else HUMAN)
        labels.append(label)
    counts = tally(predictions, labels)
    return counts, compute_metrics(counts)
