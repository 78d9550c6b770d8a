"""Codebook, feature sets and nearest-neighbour quantization.

Conventions
-----------
* Indices are 0-based: a codebook of size ``K`` emits indices ``0 .. K-1``.
* Squared distances are accumulated in float64, one feature dimension at a
  time in ascending order, so a distance is bit-identical however many rows
  are processed together.
* Ties in the nearest-codeword search go to the smallest index.
* Entropies are in nats. Divide by ``ln 2`` for bits (see ``nats_to_bits``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# rows per block in the distance scan; bounds the (rows, K) scratch array
_BLOCK = 4096


def _frozen_matrix(values, name: str) -> np.ndarray:
    arr = np.array(values, dtype=np.float64, copy=True)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be a 2-D array, got shape {arr.shape}")
    if arr.shape[1] < 1:
        raise ValueError(f"{name} must have dimension N >= 1")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class FeatureSet:
    """``M`` feature vectors of dimension ``N`` (row-major, float64)."""

    vectors: np.ndarray
    source_tag: str = ""

    def __post_init__(self):
        arr = _frozen_matrix(self.vectors, "feature set")
        if arr.shape[0] < 1:
            raise ValueError("feature set must contain at least one vector")
        object.__setattr__(self, "vectors", arr)

    @property
    def M(self) -> int:
        return self.vectors.shape[0]

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __len__(self) -> int:
        return self.M


@dataclass(frozen=True, eq=False)
class Codebook:
    """``K >= 2`` codewords of dimension ``N``."""

    codewords: np.ndarray

    def __post_init__(self):
        arr = _frozen_matrix(self.codewords, "codebook")
        if arr.shape[0] < 2:
            raise ValueError(f"codebook needs K >= 2 codewords, got {arr.shape[0]}")
        object.__setattr__(self, "codewords", arr)

    @property
    def K(self) -> int:
        return self.codewords.shape[0]

    @property
    def dim(self) -> int:
        return self.codewords.shape[1]

    def __len__(self) -> int:
        return self.K

    def as_float32(self) -> "Codebook":
        """Round codewords to float32 precision (the on-disk precision)."""
        return Codebook(self.codewords.astype(np.float32).astype(np.float64))


@dataclass(frozen=True, eq=False)
class IndexSequence:
    indices: np.ndarray
    K: int

    def __post_init__(self):
        idx = np.array(self.indices, dtype=np.int64, copy=True).reshape(-1)
        if self.K < 2:
            raise ValueError(f"K must be >= 2, got {self.K}")
        if idx.size and (idx.min() < 0 or idx.max() >= self.K):
            raise ValueError(f"indices must lie in [0, {self.K})")
        idx.setflags(write=False)
        object.__setattr__(self, "indices", idx)

    @property
    def M(self) -> int:
        return self.indices.size

    def __len__(self) -> int:
        return self.M


@dataclass(frozen=True, eq=False)
class UsageStats:
    counts: np.ndarray
    frequencies: np.ndarray

    @property
    def K(self) -> int:
        return self.counts.size

    @property
    def M(self) -> int:
        return int(self.counts.sum())

    @classmethod
    def from_frequencies(cls, frequencies) -> "UsageStats":
        """Stats from a probability vector (counts are left empty-valued)."""
        freq = np.asarray(frequencies, dtype=np.float64).reshape(-1)
        if freq.size < 2 or np.any(freq < 0) or not np.all(np.isfinite(freq)):
            raise ValueError("frequencies must be a finite non-negative vector of length >= 2")
        if abs(freq.sum() - 1.0) > 1e-9:
            raise ValueError(f"frequencies must sum to 1, got {freq.sum()!r}")
        return cls(counts=np.zeros(freq.size, dtype=np.int64), frequencies=freq)


def _as_matrix(z, dim: int) -> np.ndarray:
    arr = np.asarray(z, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2 or arr.shape[1] != dim:
        raise ValueError(f"dimension mismatch: expected N={dim}, got shape {np.shape(z)}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("input contains non-finite values")
    return arr


def squared_distances(Z, C: Codebook) -> np.ndarray:
    """(M, K) matrix of squared Euclidean distances, fixed summation order."""
    Zm = _as_matrix(Z.vectors if isinstance(Z, FeatureSet) else Z, C.dim)
    cw = C.codewords
    out = np.zeros((Zm.shape[0], C.K), dtype=np.float64)
    for n in range(C.dim):
        diff = Zm[:, n, None] - cw[None, :, n]
        out += diff * diff
    return out


def _nearest(Zm: np.ndarray, C: Codebook) -> np.ndarray:
    out = np.empty(Zm.shape[0], dtype=np.int64)
    for lo in range(0, Zm.shape[0], _BLOCK):
        d = squared_distances(Zm[lo:lo + _BLOCK], C)
        # argmin returns the first minimum: smallest index wins ties
        out[lo:lo + _BLOCK] = np.argmin(d, axis=1)
    return out


def quantize(z, C: Codebook) -> int:
    """Index of the codeword nearest to the single vector ``z``."""
    zm = np.asarray(z, dtype=np.float64)
    if zm.ndim != 1:
        raise ValueError("quantize expects a single vector; use quantize_batch")
    return int(_nearest(_as_matrix(zm, C.dim), C)[0])


def quantize_batch(Z: FeatureSet, C: Codebook) -> IndexSequence:
    if Z.dim != C.dim:
        raise ValueError(f"dimension mismatch: features N={Z.dim}, codebook N={C.dim}")
    return IndexSequence(_nearest(Z.vectors, C), C.K)


def is_in_cell(z, k: int, C: Codebook) -> bool:
    """True iff ``z`` lies in the closed Voronoi cell of codeword ``k``.

    Points on a cell boundary belong to every adjacent cell.
    """
    if not 0 <= k < C.K:
        raise ValueError(f"index {k} out of range for K={C.K}")
    d = squared_distances(_as_matrix(z, C.dim), C)[0]
    return bool(np.all(d[k] <= d))


def reconstruct(S: IndexSequence, C: Codebook) -> FeatureSet:
    if S.K != C.K:
        raise ValueError(f"index sequence refers to K={S.K}, codebook has K={C.K}")
    if S.M == 0:
        raise ValueError("cannot reconstruct an empty index sequence")
    return FeatureSet(C.codewords[S.indices], source_tag="reconstruct")


def usage_frequencies(S: IndexSequence, K: int | None = None) -> UsageStats:
    K = S.K if K is None else K
    if S.M and S.indices.max() >= K:
        raise ValueError(f"indices must lie in [0, {K})")
    if S.M == 0:
        raise ValueError("usage of an empty index sequence is undefined")
    counts = np.bincount(S.indices, minlength=K).astype(np.int64)
    return UsageStats(counts=counts, frequencies=counts / S.M)


def entropy_of(frequencies) -> float:
    """-sum(p ln p) with 0 ln 0 = 0, summed in index order."""
    freq = np.asarray(frequencies, dtype=np.float64)
    total = 0.0
    for f in freq:
        if f > 0.0:
            total -= f * math.log(f)
    return max(float(total), 0.0)


def empirical_entropy(stats: UsageStats) -> float:
    """Index entropy in nats, in ``[0, ln K]``."""
    return entropy_of(stats.frequencies)


def mutual_information_estimate(Z: FeatureSet, C: Codebook) -> float:
    """I(Z; S) in nats.

    The quantizer is deterministic, so H(S | Z) = 0 and the mutual
    information is the index entropy of the quantized batch.
    """
    return empirical_entropy(usage_frequencies(quantize_batch(Z, C)))


def nats_to_bits(h: float) -> float:
    return h / math.log(2.0)


def pairwise_sq_distances(C: Codebook) -> np.ndarray:
    """(K, K) squared distances between codewords, fixed summation order."""
    cw = C.codewords
    out = np.zeros((C.K, C.K), dtype=np.float64)
    for n in range(C.dim):
        diff = cw[:, n, None] - cw[None, :, n]
        out += diff * diff
    return out
