"""Noisy, possibly spoofed range samples and their per-anchor median."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .scenario import Scenario


@dataclass
class RangeObservations:
    samples: np.ndarray  # (N, K) metres
    medians: np.ndarray  # (N,)
    sigma: float | np.ndarray

    @property
    def k(self) -> int:
        return self.samples.shape[1]

    def to_dict(self) -> dict:
        sigma = self.sigma.tolist() if isinstance(self.sigma, np.ndarray) else float(self.sigma)
        return {
            "k": self.k,
            "sigma": sigma,
            "samples": self.samples.ravel().tolist(),  # row-major
            "medians": self.medians.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict, n: int) -> "RangeObservations":
        samples = np.array(d["samples"], dtype=float).reshape(n, d["k"])
        sigma = d["sigma"]
        sigma = np.array(sigma, dtype=float) if isinstance(sigma, list) else float(sigma)
        return cls(samples=samples, medians=median_rows(samples), sigma=sigma)


def median_rows(samples: np.ndarray) -> np.ndarray:
    # numpy averages the two central order statistics for even K
    return np.median(np.asarray(samples, dtype=float), axis=1)


def sample_ranges(
    s: Scenario, sigma: float | np.ndarray, k: int, rng: np.random.Generator
) -> RangeObservations:
    """``d_ik = ||x - a_i|| + delta_i + n_ik`` with ``n_ik ~ N(0, sigma_i^2)``.

    ``sigma`` may be a scalar or one value per anchor. Negative samples are
    kept.
    """
    if k < 1:
        raise ValueError(f"need at least one sample per anchor, got K={k}")
    sig = np.asarray(sigma, dtype=float)
    if np.any(sig < 0):
        raise ValueError("noise standard deviation must be non-negative")
    sig_col = sig.reshape(-1, 1) if sig.ndim else sig
    noise = rng.standard_normal((s.n, k)) * sig_col
    samples = (s.distances() + s.deltas)[:, None] + noise
    return RangeObservations(samples=samples, medians=median_rows(samples), sigma=sigma)


def aggregate_median(obs: RangeObservations) -> np.ndarray:
    return median_rows(obs.samples)


def dump_instance(s: Scenario, obs: RangeObservations | None = None) -> str:
    """Scenario plus (optionally) observations as one JSON document."""
    d = s.to_dict()
    if obs is not None:
        d.update(obs.to_dict())
    return json.dumps(d, indent=1)


def load_instance(text: str) -> tuple[Scenario, RangeObservations | None]:
    d = json.loads(text)
    s = Scenario.from_dict(d)
    obs = RangeObservations.from_dict(d, s.n) if "samples" in d else None
    return s, obs
