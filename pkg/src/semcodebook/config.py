"""Plain ``key = value`` run configuration files.

Blank lines and ``#`` comments are ignored. Keys are case-insensitive and
dashes are read as underscores, so ``snr-db = 10`` and ``snr_db = 10`` are
the same setting. Several settings may share a line when separated by
commas that are followed by another ``key =``::

    snr_db = 10, modulation = 64qam, fading = rayleigh
"""

from __future__ import annotations

import re
from pathlib import Path

_SPLIT = re.compile(r",\s*(?=[A-Za-z_][\w-]*\s*=)")


def normalize_key(key: str) -> str:
    return key.strip().lower().replace("-", "_")


def parse_config(text: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        for item in _SPLIT.split(line):
            if "=" not in item:
                raise ValueError(f"config line {lineno}: expected 'key = value', got {raw.strip()!r}")
            key, value = item.split("=", 1)
            key = normalize_key(key)
            if not key:
                raise ValueError(f"config line {lineno}: empty key")
            out[key] = value.strip()
    return out


def load_config(path) -> dict[str, str]:
    return parse_config(Path(path).read_text())


def parse_float_list(text: str) -> list[float]:
    return [float(x) for x in text.replace(";", ",").split(",") if x.strip()]


def parse_int_list(text: str) -> list[int]:
    return [int(x) for x in text.replace(";", ",").split(",") if x.strip()]


def parse_modulation(text: str) -> int:
    """``64``, ``64qam`` and ``64-QAM`` all mean 64."""
    m = re.fullmatch(r"\s*(\d+)\s*-?\s*(qam)?\s*", text, flags=re.IGNORECASE)
    if not m:
        raise ValueError(f"cannot parse modulation {text!r}")
    return int(m.group(1))


def parse_p_set(text: str) -> tuple[tuple[float, float], ...]:
    """``0.01:0.5, 0.1:0.5`` -> ((0.01, 0.5), (0.1, 0.5)). Bare values get equal weight."""
    items = [x.strip() for x in text.replace(";", ",").split(",") if x.strip()]
    if not items:
        raise ValueError("p_set is empty")
    pairs = []
    for item in items:
        if ":" in item:
            p, w = item.split(":", 1)
            pairs.append((float(p), float(w)))
        else:
            pairs.append((float(item), 1.0 / len(items)))
    return tuple(pairs)


def parse_variants(text: str) -> list[tuple[str, float, float]]:
    """``baseline:0:0, channel:0:0.1`` -> [(name, gamma, omega), ...]."""
    out = []
    for item in text.replace(";", ",").split(","):
        item = item.strip()
        if not item:
            continue
        parts = item.split(":")
        if len(parts) != 3:
            raise ValueError(f"variant {item!r} must be name:gamma:omega")
        out.append((parts[0], float(parts[1]), float(parts[2])))
    if not out:
        raise ValueError("variant list is empty")
    names = [v[0] for v in out]
    if len(set(names)) != len(names):
        raise ValueError(f"duplicate variant names: {names}")
    return out
