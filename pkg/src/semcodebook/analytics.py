"""Channel-induced distortion, bit-rate accounting and codebook-size sweeps."""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .channel import ChannelSpec, bits_per_index, index_error_probability
from .codebook import (
    Codebook,
    FeatureSet,
    UsageStats,
    pairwise_sq_distances,
    quantize_batch,
    usage_frequencies,
)
from .losses import LossWeights, quantization_loss
from .rng import derive_seed
from .training import TrainConfig, train_codebook


def mean_pairwise_sq(C: Codebook, k: int) -> float:
    """Mean squared distance from codeword ``k`` to the other K - 1 codewords."""
    if not 0 <= k < C.K:
        raise ValueError(f"index {k} out of range for K={C.K}")
    return float(pairwise_sq_distances(C)[k].sum() / (C.K - 1))


def channel_distortion(C: Codebook, stats: UsageStats, p: float) -> float:
    """P_e(p) * sum_k pi_k * mean_pairwise_sq(C, k) under random labeling."""
    freq = np.asarray(stats.frequencies, dtype=np.float64)
    if freq.size != C.K:
        raise ValueError(f"usage has {freq.size} entries, codebook has K={C.K}")
    pe = index_error_probability(bits_per_index(C.K), p)
    spread = pairwise_sq_distances(C).sum(axis=1) / (C.K - 1)
    return pe * float(freq @ spread)


def bit_rate(K: int, M: int) -> float:
    """Information rate M * log2 K in bits."""
    if K < 2 or M < 1:
        raise ValueError("bit_rate needs K >= 2 and M >= 1")
    return M * math.log2(K)


def payload_bits(K: int, M: int) -> int:
    """Bits actually sent: M * ceil(log2 K)."""
    return M * bits_per_index(K)


@dataclass(frozen=True)
class DistortionReport:
    d_quant: float
    d_channel: float
    d_total: float
    p: float
    K: int
    bit_rate: float
    payload_bits: int


def total_semantic_distortion(Z: FeatureSet, C: Codebook, p: float) -> DistortionReport:
    """Quantization MSE plus channel-induced distortion, with usage from ``Z``."""
    S = quantize_batch(Z, C)
    dq = quantization_loss(Z, C, S.indices)
    dch = channel_distortion(C, usage_frequencies(S), p)
    return DistortionReport(dq, dch, dq + dch, float(p), C.K, bit_rate(C.K, Z.M), payload_bits(C.K, Z.M))


SWEEP_FIELDS = ("K", "d_quant", "d_channel", "d_total", "rate_real", "rate_payload", "objective")


@dataclass(frozen=True)
class SweepRow:
    K: int
    d_quant: float
    d_channel: float
    d_total: float
    rate_real: float
    rate_payload: int
    objective: float


@dataclass
class SweepResult:
    rows: list[SweepRow]
    k_star: int
    lam: float
    p: float
    codebooks: dict[int, Codebook] = field(default_factory=dict, repr=False)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(SWEEP_FIELDS)
        for r in self.rows:
            w.writerow([_fmt(getattr(r, f)) for f in SWEEP_FIELDS])
        return buf.getvalue()

    def to_json(self) -> str:
        payload = {"K_star": self.k_star, "lambda": self.lam, "p": self.p,
                   "rows": [asdict(r) for r in self.rows]}
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def _fmt(v) -> str:
    return repr(float(v)) if isinstance(v, float) else str(v)


def sweep_row(Z: FeatureSet, C: Codebook, p: float, lam: float) -> SweepRow:
    rep = total_semantic_distortion(Z, C, p)
    return SweepRow(C.K, rep.d_quant, rep.d_channel, rep.d_total, rep.bit_rate,
                    rep.payload_bits, rep.d_total + lam * rep.bit_rate)


def select_k(rows: list[SweepRow]) -> int:
    """K with the smallest objective; the smallest K wins ties."""
    best = min(rows, key=lambda r: (r.objective, r.K))
    return best.K


def _train_leg(args):
    Z, K, weights, ch, config = args
    C, _ = train_codebook(Z, K, weights, ch, config)
    return K, C


def train_per_k(Z: FeatureSet, candidate_Ks, weights: LossWeights, ch: ChannelSpec,
                train_config: TrainConfig, workers: int = 1) -> dict[int, Codebook]:
    """One codebook per K, each on its own seed derived from (seed, K)."""
    legs = [(Z, K, weights, ch, replace(train_config, seed=derive_seed(train_config.seed, "K", K)))
            for K in candidate_Ks]
    if workers > 1 and len(legs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            done = list(pool.map(_train_leg, legs))
    else:
        done = [_train_leg(leg) for leg in legs]
    return dict(sorted(done))


def validate_candidates(candidate_Ks, M: int) -> list[int]:
    ks = [int(k) for k in candidate_Ks]
    if not ks:
        raise ValueError("candidate K list is empty")
    if len(set(ks)) != len(ks):
        raise ValueError(f"duplicate K candidates: {ks}")
    for k in ks:
        if not 2 <= k <= M:
            raise ValueError(f"candidate K={k} must satisfy 2 <= K <= M={M}")
    return sorted(ks)


def optimal_codebook_size(Z: FeatureSet, candidate_Ks, p: float, lam: float,
                          weights: LossWeights = LossWeights(),
                          train_config: TrainConfig = TrainConfig(),
                          ch: ChannelSpec | None = None, workers: int = 1) -> SweepResult:
    """Train a codebook per candidate K and pick argmin D_S(K, p) + lam * R(K)."""
    ks = validate_candidates(candidate_Ks, Z.M)
    if lam < 0:
        raise ValueError(f"lambda must be >= 0, got {lam}")
    ch = ChannelSpec(p) if ch is None else ch.with_p(p)
    books = train_per_k(Z, ks, weights, ch, train_config, workers)
    rows = [sweep_row(Z, books[k], p, lam) for k in ks]
    return SweepResult(rows, select_k(rows), float(lam), float(p), books)
