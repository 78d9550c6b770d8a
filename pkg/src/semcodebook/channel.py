"""Index transmission over a memoryless binary symmetric channel.

Each index is written as an ``L = ceil(log2 K)`` bit label, every bit is
flipped independently with probability ``p``, and the received pattern is
mapped back to an index. Two confusion models are supported:

``uniform``
    Random-labeling model: the index survives with probability
    ``1 - P_e`` and otherwise lands uniformly on one of the other
    ``K - 1`` indices. The simulator realizes it by flipping the bits and,
    when any bit flipped, drawing the received index uniformly among the
    others (what a fresh random labeling per symbol gives for K = 2^L).
``exact``
    A fixed labeling (natural binary or a seeded random permutation).
    When ``K < 2^L`` some received patterns are not labels; they decode to
    the valid label at minimum Hamming distance, smallest index on ties.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import erfc

from .codebook import IndexSequence
from .rng import derive_seed, generator, position_uniforms

CONFUSION_MODELS = ("uniform", "exact")
LABELINGS = ("natural", "random")
QAM_ORDERS = (4, 16, 64, 256)
FADING = ("awgn", "rayleigh")

_ALIASES = {"uniform_approx": "uniform", "exact_bsc": "exact",
            "natural_binary": "natural", "random_permutation": "random"}

_CHUNK = 1 << 18
_MAX_DECODE_BITS = 16


def bits_per_index(K: int) -> int:
    """Smallest ``L`` with ``2**L >= K``."""
    K = int(K)
    if K < 2:
        raise ValueError(f"K must be >= 2, got {K}")
    return (K - 1).bit_length()


def _check_p(p: float) -> float:
    p = float(p)
    if not 0.0 <= p <= 0.5:
        raise ValueError(f"flip probability must lie in [0, 0.5], got {p}")
    return p


def error_weight_pmf(L: int, p: float, w: int) -> float:
    """Probability that exactly ``w`` of ``L`` bits flip."""
    p = _check_p(p)
    if not 0 <= w <= L:
        raise ValueError(f"error weight must lie in [0, {L}], got {w}")
    return math.comb(L, w) * p**w * (1.0 - p) ** (L - w)


def index_error_probability(L: int, p: float) -> float:
    """P_e = 1 - (1 - p)^L, the chance that at least one bit flips."""
    p = _check_p(p)
    if L < 1:
        raise ValueError(f"L must be >= 1, got {L}")
    return 1.0 - (1.0 - p) ** L


@dataclass(frozen=True, eq=False)
class BitLabeling:
    """Injective map from indices ``0..K-1`` to ``L``-bit patterns."""

    K: int
    L: int
    labels: np.ndarray
    scheme: str = "natural"

    @classmethod
    def natural(cls, K: int) -> "BitLabeling":
        L = bits_per_index(K)
        return cls(K, L, np.arange(K, dtype=np.int64), "natural")

    @classmethod
    def random_permutation(cls, K: int, seed: int) -> "BitLabeling":
        L = bits_per_index(K)
        perm = generator(seed, "labeling", K).permutation(1 << L)[:K]
        return cls(K, L, perm.astype(np.int64), "random")

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int64)
        if not (1 << (self.L - 1)) < self.K <= (1 << self.L):
            raise ValueError(f"L={self.L} does not match K={self.K}")
        if labels.shape != (self.K,) or np.unique(labels).size != self.K:
            raise ValueError("labeling must be injective over [0, K)")
        if labels.min() < 0 or labels.max() >= (1 << self.L):
            raise ValueError("labels must be L-bit patterns")
        labels = labels.copy()
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)

    def bits(self, k: int) -> tuple[int, ...]:
        """Label of index ``k`` as a tuple of bits, most significant first."""
        lab = int(self.labels[k])
        return tuple((lab >> (self.L - 1 - b)) & 1 for b in range(self.L))

    def decode_table(self) -> np.ndarray:
        return _decode_table(self.L, self.labels.tobytes())


def _popcount(x: np.ndarray) -> np.ndarray:
    x = x.astype(np.int64)
    count = np.zeros_like(x)
    while np.any(x):
        count += x & 1
        x >>= 1
    return count


@lru_cache(maxsize=64)
def _decode_table(L: int, label_bytes: bytes) -> np.ndarray:
    labels = np.frombuffer(label_bytes, dtype=np.int64)
    K = labels.size
    table = np.full(1 << L, -1, dtype=np.int64)
    table[labels] = np.arange(K)
    invalid = np.flatnonzero(table < 0)
    if invalid.size:
        if L > _MAX_DECODE_BITS:
            raise ValueError(f"exact decoding supports L <= {_MAX_DECODE_BITS}")
        # (invalid, K) Hamming distances; argmin picks the smallest index on ties
        dist = _popcount(invalid[:, None] ^ labels[None, :])
        table[invalid] = np.argmin(dist, axis=1)
    table.setflags(write=False)
    return table


@dataclass(frozen=True)
class ChannelSpec:
    """BSC description.

    ``p_set`` optionally lists ``(p, weight)`` pairs; it defines the
    expectation over ``p`` used by the channel-aware training loss. The
    transmission simulator always uses ``p``.
    """

    p: float = 0.0
    confusion: str = "uniform"
    labeling: str = "natural"
    labeling_seed: int = 0
    p_set: tuple[tuple[float, float], ...] | None = None

    def __post_init__(self):
        _check_p(self.p)
        object.__setattr__(self, "confusion", _ALIASES.get(self.confusion, self.confusion))
        object.__setattr__(self, "labeling", _ALIASES.get(self.labeling, self.labeling))
        if self.confusion not in CONFUSION_MODELS:
            raise ValueError(f"confusion model must be one of {CONFUSION_MODELS}, got {self.confusion!r}")
        if self.labeling not in LABELINGS:
            raise ValueError(f"labeling must be one of {LABELINGS}, got {self.labeling!r}")
        if self.p_set is not None:
            pairs = tuple((float(p), float(w)) for p, w in self.p_set)
            if not pairs:
                raise ValueError("p_set must not be empty")
            for p, w in pairs:
                _check_p(p)
                if w < 0:
                    raise ValueError("p_set weights must be non-negative")
            if abs(sum(w for _, w in pairs) - 1.0) > 1e-9:
                raise ValueError("p_set weights must sum to 1")
            object.__setattr__(self, "p_set", pairs)

    def expectation_points(self) -> tuple[tuple[float, float], ...]:
        return self.p_set if self.p_set is not None else ((self.p, 1.0),)

    def bit_labeling(self, K: int) -> BitLabeling:
        if self.labeling == "random":
            return BitLabeling.random_permutation(K, self.labeling_seed)
        return BitLabeling.natural(K)

    def with_p(self, p: float) -> "ChannelSpec":
        return ChannelSpec(p, self.confusion, self.labeling, self.labeling_seed, self.p_set)


def confusion_matrix(ch: ChannelSpec, K: int) -> np.ndarray:
    """(K, K) matrix with entry [k, l] = Pr(received l | sent k)."""
    L = bits_per_index(K)
    if ch.confusion == "uniform":
        pe = index_error_probability(L, ch.p)
        mat = np.full((K, K), pe / (K - 1))
        np.fill_diagonal(mat, 1.0 - pe)
        return mat
    lab = ch.bit_labeling(K)
    table = lab.decode_table()
    patterns = np.arange(1 << L, dtype=np.int64)
    mat = np.zeros((K, K))
    for k in range(K):
        d = _popcount(patterns ^ lab.labels[k])
        prob = ch.p**d * (1.0 - ch.p) ** (L - d)
        mat[k] = np.bincount(table, weights=prob, minlength=K)
    return mat


def confusion_probability(k: int, l: int, ch: ChannelSpec, K: int) -> float:
    if not (0 <= k < K and 0 <= l < K):
        raise ValueError(f"indices ({k}, {l}) out of range for K={K}")
    if ch.confusion == "uniform":
        pe = index_error_probability(bits_per_index(K), ch.p)
        return 1.0 - pe if k == l else pe / (K - 1)
    return float(confusion_matrix(ch, K)[k, l])


def _transmit_chunk(s: np.ndarray, ch: ChannelSpec, K: int, L: int,
                    key: int, start: int, labels, table) -> np.ndarray:
    u = position_uniforms(key, start, s.size, L + 1)
    flips = u[:, :L] < ch.p
    pattern = np.zeros(s.size, dtype=np.int64)
    for b in range(L):
        pattern |= flips[:, b].astype(np.int64) << b
    if ch.confusion == "exact":
        return table[labels[s] ^ pattern]
    j = np.minimum((u[:, L] * (K - 1)).astype(np.int64), K - 2)
    other = j + (j >= s)
    return np.where(pattern != 0, other, s)


def transmit_indices(S: IndexSequence, ch: ChannelSpec, rng_seed: int,
                     offset: int = 0) -> IndexSequence:
    """Send ``S`` through the channel.

    Symbol ``m`` consumes the random draws at stream position
    ``offset + m`` of the stream keyed by ``rng_seed``, so splitting a long
    transmission into pieces with matching offsets reproduces it exactly.
    """
    K, L = S.K, bits_per_index(S.K)
    if ch.p == 0.0:
        return S
    key = derive_seed(rng_seed, "bsc")
    labels = table = None
    if ch.confusion == "exact":
        lab = ch.bit_labeling(K)
        labels, table = lab.labels, lab.decode_table()
    out = np.empty(S.M, dtype=np.int64)
    for lo in range(0, S.M, _CHUNK):
        s = S.indices[lo:lo + _CHUNK]
        out[lo:lo + s.size] = _transmit_chunk(s, ch, K, L, key, offset + lo, labels, table)
    return IndexSequence(out, K)


@dataclass(frozen=True)
class SnrSpec:
    """Average symbol SNR (Es/N0, dB) for square Gray-coded QAM."""

    snr_db: float
    modulation_order: int = 64
    fading: str = "awgn"

    def __post_init__(self):
        if int(self.modulation_order) not in QAM_ORDERS:
            raise ValueError(f"modulation order must be one of {QAM_ORDERS}, got {self.modulation_order}")
        if self.fading not in FADING:
            raise ValueError(f"fading must be one of {FADING}, got {self.fading!r}")
        if math.isnan(self.snr_db):
            raise ValueError("snr_db is NaN")


def qfunc(x):
    return 0.5 * erfc(np.asarray(x, dtype=np.float64) / math.sqrt(2.0))


def snr_to_flip_probability(s: SnrSpec) -> float:
    """Approximate bit-error probability of Gray-coded square M-QAM.

    Uses the standard sum over the sqrt(M)/2 odd-distance terms,

        Pb ~ 4/log2(M) * (1 - 1/sqrt(M)) * sum_i Q((2i-1) sqrt(3 g / (M-1)))

    with ``g`` the symbol SNR. Under Rayleigh fading each Q term is
    replaced by its closed-form average over an exponential SNR with mean
    ``g``. The result is clamped to [0, 0.5].
    """
    M = int(s.modulation_order)
    rootm = math.isqrt(M)
    g = 10.0 ** (s.snr_db / 10.0)
    if math.isinf(g):
        return 0.0
    a = (2 * np.arange(1, rootm // 2 + 1) - 1) ** 2 * 3.0 / (M - 1)
    if s.fading == "awgn":
        terms = qfunc(np.sqrt(a * g))
    else:
        x = a * g / 2.0
        terms = 0.5 * (1.0 - np.sqrt(x / (1.0 + x)))
    pb = 4.0 / math.log2(M) * (1.0 - 1.0 / rootm) * float(np.sum(terms))
    return min(max(pb, 0.0), 0.5)
