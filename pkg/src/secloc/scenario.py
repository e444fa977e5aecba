"""Random anchor/target deployments with spoofing attackers.

RNG: every draw goes through ``numpy.random.Generator(PCG64(...))``. Draw
order inside :func:`generate_deployment` is: target (q uniforms), then
anchors (N*q uniforms, row-major); the whole block is redrawn if the target
lands within ``1e-3 * B`` of an anchor. :func:`assign_attackers` then draws
the attacker count, the attacked indices, the signs, the exponential scales
and finally the exponential variates, in that order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any

import numpy as np

MIN_SEPARATION = 1e-3  # fraction of B


class ConfigError(ValueError):
    """Invalid scenario or experiment configuration."""


def make_rng(*keys: int) -> np.random.Generator:
    """PCG64 stream keyed by a tuple of non-negative integers."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(k) for k in keys])))


@dataclass(frozen=True)
class ScenarioConfig:
    n: int = 10
    q: int = 2
    b: float = 100.0
    delta_cap: float = 20.0
    seed: int = 0

    def validate(self) -> None:
        if self.q not in (2, 3):
            raise ConfigError(f"dimension q must be 2 or 3, got {self.q}")
        if self.n < self.q + 1:
            raise ConfigError(f"need at least q+1={self.q + 1} anchors, got {self.n}")
        if not self.b > 0:
            raise ConfigError(f"area side B must be positive, got {self.b}")
        if not self.delta_cap >= 0:
            raise ConfigError(f"attack cap must be non-negative, got {self.delta_cap}")


@dataclass
class Scenario:
    anchors: np.ndarray  # (N, q)
    target: np.ndarray  # (q,)
    attackers: tuple[int, ...] = ()
    deltas: np.ndarray = field(default=None)  # (N,)
    b: float = 100.0
    seed: int | None = None

    def __post_init__(self) -> None:
        self.anchors = np.asarray(self.anchors, dtype=float)
        self.target = np.asarray(self.target, dtype=float)
        if self.deltas is None:
            self.deltas = np.zeros(len(self.anchors))
        self.deltas = np.asarray(self.deltas, dtype=float)
        self.attackers = tuple(sorted(int(i) for i in self.attackers))

    @property
    def n(self) -> int:
        return self.anchors.shape[0]

    @property
    def q(self) -> int:
        return self.anchors.shape[1]

    def distances(self) -> np.ndarray:
        return np.linalg.norm(self.target - self.anchors, axis=1)

    def to_dict(self) -> dict[str, Any]:
        return {
            "n": self.n,
            "q": self.q,
            "b": self.b,
            "anchors": self.anchors.tolist(),
            "target": self.target.tolist(),
            "attackers": list(self.attackers),
            "deltas": self.deltas.tolist(),
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "Scenario":
        s = cls(
            anchors=np.array(d["anchors"], dtype=float).reshape(d["n"], d["q"]),
            target=np.array(d["target"], dtype=float),
            attackers=tuple(d.get("attackers", ())),
            deltas=np.array(d.get("deltas", [0.0] * d["n"]), dtype=float),
            b=float(d["b"]),
            seed=d.get("seed"),
        )
        return s

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "Scenario":
        return cls.from_dict(json.loads(text))


def generate_deployment(config: ScenarioConfig, rng: np.random.Generator) -> Scenario:
    """Uniform target and anchors on ``[0, B]^q``, no attackers yet."""
    config.validate()
    n, q, b = config.n, config.q, config.b
    while True:
        target = rng.uniform(0.0, b, size=q)
        anchors = rng.uniform(0.0, b, size=(n, q))
        if np.min(np.linalg.norm(anchors - target, axis=1)) >= MIN_SEPARATION * b:
            break
    return Scenario(anchors=anchors, target=target, b=b, seed=config.seed)


def assign_attackers(s: Scenario, delta_cap: float, rng: np.random.Generator) -> Scenario:
    """Pick between 1 and floor(N/2) attackers and draw their biases.

    Each bias is ``sign * Exp(scale)`` with the exponential *mean* ``scale``
    drawn from ``U[0, delta_cap]`` metres, so ``E|delta| = delta_cap / 2``.
    """
    if not delta_cap >= 0:
        raise ConfigError(f"attack cap must be non-negative, got {delta_cap}")
    n = s.n
    count = int(rng.integers(1, n // 2 + 1))
    idx = np.sort(rng.choice(n, size=count, replace=False))
    signs = rng.choice(np.array([-1.0, 1.0]), size=count)
    scales = rng.uniform(0.0, delta_cap, size=count)
    mags = rng.exponential(1.0, size=count) * scales
    deltas = np.zeros(n)
    deltas[idx] = signs * mags
    return Scenario(
        anchors=s.anchors.copy(),
        target=s.target.copy(),
        attackers=tuple(int(i) for i in idx),
        deltas=deltas,
        b=s.b,
        seed=s.seed,
    )
