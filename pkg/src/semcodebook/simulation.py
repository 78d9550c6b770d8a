"""End-to-end link simulation: quantize -> bits -> BSC -> decode -> reconstruct."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .analytics import total_semantic_distortion
from .channel import (
    ChannelSpec,
    bits_per_index,
    confusion_matrix,
    index_error_probability,
    transmit_indices,
)
from .codebook import (
    Codebook,
    FeatureSet,
    IndexSequence,
    empirical_entropy,
    nats_to_bits,
    quantize_batch,
    squared_distances,
    usage_frequencies,
)

# symbols per transmit call
_SYMBOLS_PER_BLOCK = 1 << 20


@dataclass(frozen=True)
class LinkSimReport:
    mse_mean: float
    mse_stderr: float
    index_error_rate: float
    analytic_pe: float
    analytic_ds: float
    expected_mse: float
    entropy_nats: float
    entropy_bits: float
    trials: int
    symbols: int
    p: float
    confusion: str

    def ci95(self) -> tuple[float, float]:
        half = 1.96 * self.mse_stderr
        return self.mse_mean - half, self.mse_mean + half


def per_trial_mse(Z: FeatureSet, C: Codebook, ch: ChannelSpec, trials: int,
                  seed: int) -> tuple[np.ndarray, int]:
    """MSE of every trial and the total number of index errors.

    Trial ``t`` sends all ``M`` indices once; symbol ``m`` of trial ``t``
    occupies channel stream position ``t * M + m``.
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    if Z.dim != C.dim:
        raise ValueError(f"dimension mismatch: features N={Z.dim}, codebook N={C.dim}")
    S = quantize_batch(Z, C)
    D = squared_distances(Z, C)
    M = Z.M
    rows = np.arange(M)
    mse = np.empty(trials)
    errors = 0
    per_block = max(1, _SYMBOLS_PER_BLOCK // M)
    for t0 in range(0, trials, per_block):
        nt = min(per_block, trials - t0)
        sent = np.tile(S.indices, nt)
        got = transmit_indices(IndexSequence(sent, C.K), ch, seed, offset=t0 * M).indices
        errors += int(np.count_nonzero(got != sent))
        cost = D[np.tile(rows, nt), got].reshape(nt, M)
        mse[t0:t0 + nt] = cost.mean(axis=1)
    return mse, errors


def simulate_link(Z: FeatureSet, C: Codebook, ch: ChannelSpec, trials: int,
                  seed: int) -> LinkSimReport:
    mse, errors = per_trial_mse(Z, C, ch, trials, seed)
    stderr = float(mse.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    S = quantize_batch(Z, C)
    stats = usage_frequencies(S)
    h = empirical_entropy(stats)
    # exact expected MSE under this confusion model; equals D_S only for centroid codebooks
    conf = confusion_matrix(ch, C.K)
    D = squared_distances(Z, C)
    expected = float(np.einsum("ml,ml->m", conf[S.indices], D).mean())
    return LinkSimReport(
        mse_mean=float(mse.mean()),
        mse_stderr=stderr,
        index_error_rate=errors / (trials * Z.M),
        analytic_pe=index_error_probability(bits_per_index(C.K), ch.p),
        analytic_ds=total_semantic_distortion(Z, C, ch.p).d_total,
        expected_mse=expected,
        entropy_nats=h,
        entropy_bits=nats_to_bits(h),
        trials=trials,
        symbols=trials * Z.M,
        p=ch.p,
        confusion=ch.confusion,
    )
