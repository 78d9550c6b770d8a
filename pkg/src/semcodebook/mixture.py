"""Synthetic Gaussian-mixture feature sources.

A mixture spec is a JSON object::

    {
      "dim": 2,
      "samples": 4000,
      "seed": 7,                      # optional
      "components": [
        {"weight": 0.7, "mean": [0, 0], "var": 0.25},
        {"weight": 0.3, "mean": [4, 0], "var": [0.5, 0.1]}
      ]
    }

``var`` is a per-dimension diagonal variance or a scalar shared by all
dimensions. Zero variance is allowed and yields rows equal to the mean.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .codebook import FeatureSet
from .rng import generator


@dataclass(frozen=True, eq=False)
class MixtureSpec:
    weights: np.ndarray
    means: np.ndarray
    variances: np.ndarray
    samples: int
    seed: int | None = None
    name: str = "mixture"

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64).reshape(-1)
        mu = np.atleast_2d(np.asarray(self.means, dtype=np.float64))
        var = np.asarray(self.variances, dtype=np.float64)
        if var.ndim < 2:
            var = np.broadcast_to(var.reshape(-1, 1), mu.shape)
        var = np.array(var, dtype=np.float64)
        if w.size < 1 or mu.shape[0] != w.size or var.shape != mu.shape:
            raise ValueError("mixture weights, means and variances disagree in shape")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
            raise ValueError(f"mixture weights must be non-negative and sum to 1, got {w.sum()!r}")
        if np.any(var < 0) or not (np.all(np.isfinite(var)) and np.all(np.isfinite(mu))):
            raise ValueError("mixture variances must be finite and >= 0")
        if int(self.samples) < 1:
            raise ValueError(f"samples must be >= 1, got {self.samples}")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "means", mu)
        object.__setattr__(self, "variances", var)
        object.__setattr__(self, "samples", int(self.samples))

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    @classmethod
    def from_dict(cls, payload: dict, name: str = "mixture") -> "MixtureSpec":
        try:
            comps = payload["components"]
            spec = cls(
                weights=[c["weight"] for c in comps],
                means=[c["mean"] for c in comps],
                variances=[np.broadcast_to(np.asarray(c.get("var", 1.0), dtype=float),
                                           (len(c["mean"]),)) for c in comps],
                samples=payload["samples"],
                seed=payload.get("seed"),
                name=name,
            )
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed mixture spec: {exc}") from exc
        if "dim" in payload and int(payload["dim"]) != spec.dim:
            raise ValueError(f"mixture dim {payload['dim']} does not match means of length {spec.dim}")
        return spec

    @classmethod
    def load(cls, path) -> "MixtureSpec":
        path = Path(path)
        return cls.from_dict(json.loads(path.read_text()), name=path.stem)

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "samples": self.samples,
            "seed": self.seed,
            "components": [
                {"weight": float(w), "mean": m.tolist(), "var": v.tolist()}
                for w, m, v in zip(self.weights, self.means, self.variances)
            ],
        }


def generate_mixture(spec: MixtureSpec, seed: int | None = None) -> tuple[FeatureSet, np.ndarray]:
    """Draw ``spec.samples`` rows: component label first, then the Gaussian.

    Returns the features and the generating component label of every row.
    ``seed`` overrides ``spec.seed``; one of them must be set.
    """
    seed = spec.seed if seed is None else seed
    if seed is None:
        raise ValueError("mixture needs a seed")
    rng = generator(seed, "mixture")
    labels = rng.choice(spec.weights.size, size=spec.samples, p=spec.weights)
    noise = rng.standard_normal((spec.samples, spec.dim))
    X = spec.means[labels] + np.sqrt(spec.variances[labels]) * noise
    return FeatureSet(X, source_tag=f"mixture:{spec.name}"), labels
