"""Seed derivation and position-addressed random streams.

Every random quantity in the package comes from a single top-level seed.
Sub-streams are keyed by hashing the seed together with descriptive
component strings (``derive_seed(seed, "train", "K=16")``), so adding a
new consumer never shifts the draws of an existing one.

For the channel simulator the draws must not depend on how the work is
chunked. ``position_uniforms`` uses numpy's Philox counter-based generator:
symbol ``i`` always reads the same counter blocks, whatever the chunk size
or the order in which chunks are produced.
"""

from __future__ import annotations

import hashlib

import numpy as np

_WORDS_PER_BLOCK = 4  # Philox4x64 emits four 64-bit words per counter step
_U53 = 1.0 / (1 << 53)


def derive_seed(seed: int, *parts: object) -> int:
    """Hash ``seed`` and ``parts`` into an independent 64-bit seed."""
    text = "|".join([str(int(seed))] + [str(p) for p in parts])
    digest = hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def generator(seed: int, *parts: object) -> np.random.Generator:
    """A fresh ``Generator`` on the sub-stream named by ``parts``."""
    return np.random.Generator(np.random.PCG64(derive_seed(seed, *parts)))


def blocks_per_position(width: int) -> int:
    return -(-width // _WORDS_PER_BLOCK)


def position_uniforms(key: int, start: int, count: int, width: int) -> np.ndarray:
    """Uniforms in [0, 1) for positions ``start .. start+count-1``.

    Returns an array of shape ``(count, width)``. Row ``i`` depends only on
    ``(key, start + i)``.
    """
    if count < 0 or start < 0 or width < 1:
        raise ValueError("start, count must be >= 0 and width >= 1")
    nblk = blocks_per_position(width)
    bg = np.random.Philox(key=key & 0xFFFFFFFFFFFFFFFF)
    if start:
        bg.advance(start * nblk)
    raw = bg.random_raw(count * nblk * _WORDS_PER_BLOCK)
    raw = raw.reshape(count, nblk * _WORDS_PER_BLOCK)[:, :width]
    return (raw >> np.uint64(11)).astype(np.float64) * _U53
