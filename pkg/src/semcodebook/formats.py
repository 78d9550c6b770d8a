"""Binary feature (SEMF) and codebook (SEMC) files.

Layout, all little-endian::

    magic    4 bytes   b"SEMF" or b"SEMC"
    version  u16       currently 1
    rows     u32       M (features) or K (codewords)
    dim      u32       N
    payload  rows*dim float32, row-major

Values are stored as float32, so writing a float64 array rounds it. A
file read back and written again is byte-identical.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .codebook import Codebook, FeatureSet

VERSION = 1
_HEADER = struct.Struct("<4sHII")


class FormatError(ValueError):
    """Malformed SEMF/SEMC file."""


def _write(path, magic: bytes, matrix: np.ndarray) -> None:
    rows, dim = matrix.shape
    payload = np.ascontiguousarray(matrix, dtype="<f4").tobytes()
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(magic, VERSION, rows, dim))
        fh.write(payload)


def _read(path, magic: bytes) -> np.ndarray:
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise FormatError(f"{path}: truncated header")
    got, version, rows, dim = _HEADER.unpack_from(data)
    if got != magic:
        raise FormatError(f"{path}: bad magic {got!r}, expected {magic!r}")
    if version != VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    expected = _HEADER.size + 4 * rows * dim
    if len(data) != expected:
        raise FormatError(f"{path}: expected {expected} bytes, found {len(data)}")
    values = np.frombuffer(data, dtype="<f4", offset=_HEADER.size, count=rows * dim)
    return values.astype(np.float64).reshape(rows, dim)


def write_features(path, Z: FeatureSet) -> None:
    _write(path, b"SEMF", Z.vectors)


def read_features(path) -> FeatureSet:
    return FeatureSet(_read(path, b"SEMF"), source_tag=f"file:{Path(path).name}")


def write_codebook(path, C: Codebook) -> None:
    _write(path, b"SEMC", C.codewords)


def read_codebook(path) -> Codebook:
    return Codebook(_read(path, b"SEMC"))
