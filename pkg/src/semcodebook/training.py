"""Codebook training loop.

One epoch of the default ``gradient`` mode walks the data in (optionally
shuffled) mini-batches. Each batch is hard-assigned to its nearest
codewords and the codewords take one plain gradient step on the objective
in :mod:`semcodebook.losses`. After the last batch, any codeword whose
usage over the full data falls below ``dead_threshold`` is moved onto a
random data row.

``lloyd`` mode replaces the gradient step with the exact centroid update
of the k-means / Lloyd algorithm. It only accepts ``gamma = omega = 0``,
and it reseeds only codewords with no assigned rows, so the quantization
loss can never increase from one epoch to the next.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .channel import ChannelSpec
from .codebook import (
    Codebook,
    FeatureSet,
    UsageStats,
    empirical_entropy,
    quantize_batch,
    squared_distances,
    usage_frequencies,
)
from .losses import LossWeights, channel_loss, codeword_gradients, quantization_loss
from .rng import generator

INIT_METHODS = ("kmeans_pp", "random_sample")
UPDATE_MODES = ("gradient", "lloyd")


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 50
    step_size: float = 0.5
    batch_size: int = 0  # 0 = full batch
    temperature: float = 1.0
    seed: int = 0
    dead_threshold: float | None = None  # None = 1 / (4K)
    init: str = "kmeans_pp"
    update: str = "gradient"
    shuffle: bool = True

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if not self.step_size > 0:
            raise ValueError(f"step_size must be > 0, got {self.step_size}")
        if self.batch_size < 0:
            raise ValueError(f"batch_size must be >= 0, got {self.batch_size}")
        if not self.temperature > 0:
            raise ValueError(f"temperature must be > 0, got {self.temperature}")
        if self.dead_threshold is not None and not 0.0 <= self.dead_threshold < 1.0:
            raise ValueError(f"dead_threshold must lie in [0, 1), got {self.dead_threshold}")
        if self.init not in INIT_METHODS:
            raise ValueError(f"init must be one of {INIT_METHODS}, got {self.init!r}")
        if self.update not in UPDATE_MODES:
            raise ValueError(f"update must be one of {UPDATE_MODES}, got {self.update!r}")

    def threshold(self, K: int) -> float:
        return 1.0 / (4 * K) if self.dead_threshold is None else self.dead_threshold


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    quant_loss: float
    entropy_nats: float
    channel_loss: float
    total_loss: float
    resets: int


CSV_FIELDS = ("epoch", "quant_loss", "entropy_nats", "channel_loss", "total_loss", "resets")


@dataclass
class TrainReport:
    records: list[EpochRecord] = field(default_factory=list)

    def column(self, name: str) -> list:
        return [getattr(r, name) for r in self.records]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_FIELDS)
        for r in self.records:
            writer.writerow([_fmt(getattr(r, f)) for f in CSV_FIELDS])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {"epochs": [asdict(r) for r in self.records]}

    def to_json(self, **extra) -> str:
        payload = dict(extra)
        payload.update(self.to_dict())
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def _fmt(value) -> str:
    # repr is the shortest round-trip form of a float
    return repr(float(value)) if isinstance(value, float) else str(value)


def kmeans_plus_plus(X: np.ndarray, K: int, rng: np.random.Generator) -> np.ndarray:
    """D^2 seeding. Falls back to uniform picks once every row is covered."""
    M = X.shape[0]
    chosen = [int(rng.integers(M))]
    d2 = ((X - X[chosen[0]]) ** 2).sum(axis=1)
    for _ in range(1, K):
        total = d2.sum()
        if total > 0:
            nxt = int(rng.choice(M, p=d2 / total))
        else:
            free = np.setdiff1d(np.arange(M), chosen)
            nxt = int(rng.choice(free))
        chosen.append(nxt)
        d2 = np.minimum(d2, ((X - X[nxt]) ** 2).sum(axis=1))
    return X[chosen].copy()


def _lloyd_step(X: np.ndarray, cw: np.ndarray, assign: np.ndarray) -> np.ndarray:
    K = cw.shape[0]
    counts = np.bincount(assign, minlength=K)
    sums = np.zeros_like(cw)
    np.add.at(sums, assign, X)
    out = cw.copy()
    used = counts > 0
    out[used] = sums[used] / counts[used, None]
    return out


def _evaluate(Z: FeatureSet, C: Codebook, weights: LossWeights, ch: ChannelSpec,
              epoch: int, resets: int) -> EpochRecord:
    S = quantize_batch(Z, C)
    stats = usage_frequencies(S)
    q = quantization_loss(Z, C, S.indices)
    h = empirical_entropy(stats)
    c = channel_loss(C, stats, ch)
    total = q + weights.omega * c - weights.gamma * h
    return EpochRecord(epoch, q, h, c, total, resets)


def train_codebook(Z: FeatureSet, K: int, weights: LossWeights, ch: ChannelSpec,
                   config: TrainConfig = TrainConfig(),
                   init_codebook: Codebook | None = None) -> tuple[Codebook, TrainReport]:
    """Learn a ``K``-word codebook for ``Z``; deterministic given ``config.seed``."""
    if K < 2:
        raise ValueError(f"K must be >= 2, got {K}")
    if Z.M < K:
        raise ValueError(f"need at least K={K} feature vectors to seed the codebook, got M={Z.M}")
    lloyd = config.update == "lloyd"
    if lloyd and (weights.gamma or weights.omega):
        raise ValueError("lloyd updates require gamma = omega = 0")

    X = Z.vectors
    M = Z.M
    rng = generator(config.seed, "train")
    if init_codebook is not None:
        if init_codebook.K != K or init_codebook.dim != Z.dim:
            raise ValueError("initial codebook does not match K / feature dimension")
        cw = init_codebook.codewords.copy()
    elif config.init == "kmeans_pp":
        cw = kmeans_plus_plus(X, K, generator(config.seed, "init"))
    else:
        cw = X[generator(config.seed, "init").choice(M, size=K, replace=False)].copy()

    batch = M if config.batch_size == 0 else min(config.batch_size, M)
    threshold = config.threshold(K)
    report = TrainReport()

    for epoch in range(1, config.epochs + 1):
        if lloyd:
            assign = np.argmin(squared_distances(X, Codebook(cw)), axis=1)
            cw = _lloyd_step(X, cw, assign)
        else:
            order = rng.permutation(M) if (config.shuffle and batch < M) else np.arange(M)
            for lo in range(0, M, batch):
                Zb = FeatureSet(X[order[lo:lo + batch]])
                grad = codeword_gradients(Zb, Codebook(cw), weights, ch, config.temperature)
                cw = cw - config.step_size * grad
                if not np.all(np.isfinite(cw)):
                    raise FloatingPointError(f"codewords diverged at epoch {epoch}; lower step_size")

        C = Codebook(cw)
        stats = usage_frequencies(quantize_batch(Z, C))
        dead = np.flatnonzero(stats.counts == 0) if lloyd else np.flatnonzero(stats.frequencies < threshold)
        for k in dead:
            cw[k] = X[int(rng.integers(M))]
        report.records.append(_evaluate(Z, Codebook(cw), weights, ch, epoch, int(dead.size)))

    return Codebook(cw), report
