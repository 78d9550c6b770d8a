"""Codebook training objectives and their codeword gradients.

All losses are per-vector means, so ``gamma`` and ``omega`` keep the same
meaning whatever the batch size. The total objective is

    L = quant + omega * channel - gamma * H

where ``quant`` is the mean squared quantization error, ``channel`` the
expected channel-induced distortion ``E_p[P_e(p) * sum_k pi_k D_k]`` with
``D_k`` the mean squared distance from codeword ``k`` to the others, and
``H`` the index entropy in nats.

Hard nearest-codeword assignments make ``H`` piecewise constant in the
codewords. Gradients of the entropy term are therefore taken through a
softmax relaxation of the assignments (temperature ``tau``), with
``dH/dpi_k = -(1 + ln pi_k)`` as the upstream gradient. The quantization
and channel terms are differentiated with the hard assignments and usage
frequencies held fixed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelSpec, bits_per_index, index_error_probability
from .codebook import (
    Codebook,
    FeatureSet,
    UsageStats,
    empirical_entropy,
    entropy_of,
    pairwise_sq_distances,
    quantize_batch,
    squared_distances,
    usage_frequencies,
)


@dataclass(frozen=True)
class LossWeights:
    gamma: float = 0.1
    omega: float = 0.1

    def __post_init__(self):
        if not self.gamma >= 0.0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")
        # omega = 0 switches the channel term off
        if not 0.0 <= self.omega < 1.0:
            raise ValueError(f"omega must lie in [0, 1), got {self.omega}")


def _check_dims(Z: FeatureSet, C: Codebook) -> None:
    if Z.dim != C.dim:
        raise ValueError(f"dimension mismatch: features N={Z.dim}, codebook N={C.dim}")


def quantization_loss(Z: FeatureSet, C: Codebook, assignments=None) -> float:
    """Mean squared distance from each vector to its assigned codeword.

    ``assignments`` defaults to the nearest-codeword indices; passing an
    explicit array evaluates the loss with those assignments frozen.
    """
    _check_dims(Z, C)
    if assignments is None:
        assignments = quantize_batch(Z, C).indices
    d = squared_distances(Z, C)
    return float(d[np.arange(Z.M), assignments].mean())


def regularized_loss(Z: FeatureSet, C: Codebook, gamma: float) -> float:
    if gamma < 0:
        raise ValueError(f"gamma must be >= 0, got {gamma}")
    S = quantize_batch(Z, C)
    return quantization_loss(Z, C, S.indices) - gamma * empirical_entropy(usage_frequencies(S))


def entropy_grad_wrt_pi(stats: UsageStats) -> np.ndarray:
    """Gradient of the negative entropy w.r.t. each frequency: 1 + ln pi_k.

    Unused codewords (pi_k = 0) get ``-inf``.
    """
    freq = np.asarray(stats.frequencies, dtype=np.float64)
    with np.errstate(divide="ignore"):
        return 1.0 + np.log(freq)


def expected_error_probability(ch: ChannelSpec, K: int) -> float:
    """E_p[P_e(p)] over the channel's p set (or its single p)."""
    L = bits_per_index(K)
    return sum(w * index_error_probability(L, p) for p, w in ch.expectation_points())


def _spread(C: Codebook) -> np.ndarray:
    return pairwise_sq_distances(C).sum(axis=1) / (C.K - 1)


def channel_loss(C: Codebook, stats: UsageStats, ch: ChannelSpec) -> float:
    freq = np.asarray(stats.frequencies, dtype=np.float64)
    if freq.size != C.K:
        raise ValueError(f"usage has {freq.size} entries, codebook has K={C.K}")
    return expected_error_probability(ch, C.K) * float(freq @ _spread(C))


def total_codebook_loss(Z: FeatureSet, C: Codebook, weights: LossWeights,
                        ch: ChannelSpec) -> float:
    S = quantize_batch(Z, C)
    stats = usage_frequencies(S)
    total = quantization_loss(Z, C, S.indices)
    if weights.omega:
        total += weights.omega * channel_loss(C, stats, ch)
    return total - weights.gamma * empirical_entropy(stats)


def soft_assignments(Z: FeatureSet, C: Codebook, temperature: float = 1.0) -> np.ndarray:
    """(M, K) softmax of negative squared distances over ``temperature``."""
    if not temperature > 0:
        raise ValueError(f"temperature must be > 0, got {temperature}")
    logits = -squared_distances(Z, C) / temperature
    logits -= logits.max(axis=1, keepdims=True)
    w = np.exp(logits)
    return w / w.sum(axis=1, keepdims=True)


def soft_entropy(Z: FeatureSet, C: Codebook, temperature: float = 1.0) -> float:
    return entropy_of(soft_assignments(Z, C, temperature).mean(axis=0))


def smoothed_total_loss(Z: FeatureSet, C: Codebook, weights: LossWeights,
                        ch: ChannelSpec, temperature: float,
                        assignments, frequencies) -> float:
    """The objective whose exact gradient ``codeword_gradients`` returns.

    Quantization and channel terms use the frozen ``assignments`` and
    ``frequencies``; the entropy term uses soft assignments.
    """
    stats = UsageStats(np.zeros(C.K, dtype=np.int64), np.asarray(frequencies, dtype=np.float64))
    total = quantization_loss(Z, C, assignments)
    if weights.omega:
        total += weights.omega * channel_loss(C, stats, ch)
    if weights.gamma:
        total -= weights.gamma * soft_entropy(Z, C, temperature)
    return total


def codeword_gradients(Z: FeatureSet, C: Codebook, weights: LossWeights,
                       ch: ChannelSpec, temperature: float = 1.0,
                       assignments=None) -> np.ndarray:
    """(K, N) gradient of the training objective w.r.t. the codewords."""
    _check_dims(Z, C)
    if assignments is None:
        assignments = quantize_batch(Z, C).indices
    M, K = Z.M, C.K
    X, cw = Z.vectors, C.codewords

    counts = np.bincount(assignments, minlength=K).astype(np.float64)
    sums = np.zeros_like(cw)
    np.add.at(sums, assignments, X)
    grad = (2.0 / M) * (counts[:, None] * cw - sums)

    if weights.omega:
        pi = counts / M
        scale = weights.omega * expected_error_probability(ch, K) * 2.0 / (K - 1)
        # sum_l (pi_k + pi_l)(c_k - c_l); the l = k term vanishes
        pull = (K * pi + pi.sum())[:, None] * cw - pi[:, None] * cw.sum(axis=0) - pi @ cw
        grad += scale * pull

    if weights.gamma:
        P = soft_assignments(Z, C, temperature)
        upstream = 1.0 + np.log(np.maximum(P.mean(axis=0), np.finfo(np.float64).tiny))
        coef = P * (upstream[None, :] - (P @ upstream)[:, None])
        # sum_m coef[m, k] * (c_k - z_m)
        moment = coef.sum(axis=0)[:, None] * cw - coef.T @ X
        grad += weights.gamma * (-2.0 / (M * temperature)) * moment

    if not np.all(np.isfinite(grad)):
        raise FloatingPointError("non-finite codeword gradient")
    return grad
