"""Fisher information and position CRLB for the two range models.

Parameters are ``theta = [x, nu_1..nu_N]`` where ``nu_i`` is the attack
bias ``delta_i`` (additive model) or the dilation factor ``rho_i``
(variance-dilation model). The FIM is kept in its partitioned form
``[[A, B], [B^T, C]]``; the position bound marginalizes the unknown
``nu_i`` through the Schur complement ``A - B C^-1 B^T``.

In the additive model a genuine anchor's bias is known to be zero, so only
the biases listed in ``free`` are nuisance parameters. Marginalizing all N
biases would leave no information about ``x`` at all.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np


@dataclass
class FisherPartition:
    A: np.ndarray  # (q, q)
    B: np.ndarray  # (q, N)
    C: np.ndarray  # (N, N)
    model: str  # "attack" or "dilation"
    free: tuple[int, ...] = field(default=())  # nuisance entries treated as unknown

    def full(self) -> np.ndarray:
        return np.block([[self.A, self.B], [self.B.T, self.C]])

    def position_information(self) -> np.ndarray:
        """Schur complement of the free nuisance block."""
        idx = list(self.free)
        if not idx:
            return self.A.copy()
        Bf = self.B[:, idx]
        Cf = self.C[np.ix_(idx, idx)]
        return self.A - Bf @ np.linalg.solve(Cf, Bf.T)


def _unit_vectors(x: np.ndarray, anchors: np.ndarray) -> np.ndarray:
    diff = np.asarray(x, dtype=float) - np.asarray(anchors, dtype=float)
    r = np.linalg.norm(diff, axis=1)
    if np.any(r <= 0):
        raise ValueError("target coincides with an anchor; range gradient undefined")
    return diff / r[:, None]


def fim_attack_model(
    x: np.ndarray, anchors: np.ndarray, sigma: float, attacked: Iterable[int] = ()
) -> FisherPartition:
    """FIM of ``d_i = ||x - a_i|| + delta_i + n_i``, ``n_i ~ N(0, sigma^2)``.

    ``attacked`` lists the anchors whose bias is an unknown parameter.
    """
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    u = _unit_vectors(x, anchors)
    w = 1.0 / sigma**2
    n = u.shape[0]
    free = tuple(sorted(int(i) for i in attacked))
    A = w * u.T @ u
    return FisherPartition(0.5 * (A + A.T), w * u.T, w * np.eye(n), "attack", free)


def fim_dilation_model(
    x: np.ndarray, anchors: np.ndarray, sigma: float, rho: np.ndarray
) -> FisherPartition:
    """FIM of ``d_i = ||x - a_i|| + eps_i``, ``eps_i ~ N(0, rho_i sigma^2)``.

    Position and dilation parameters decouple (``B = 0``); the dilation
    block is ``diag(1 / (2 rho_i^2))``.
    """
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    rho = np.asarray(rho, dtype=float)
    if np.any(rho < 1):
        raise ValueError("dilation factors must be >= 1")
    u = _unit_vectors(x, anchors)
    n, q = u.shape
    A = (u.T * (1.0 / rho)) @ u / sigma**2
    A = 0.5 * (A + A.T)
    return FisherPartition(A, np.zeros((q, n)), np.diag(1.0 / (2.0 * rho**2)), "dilation", tuple(range(n)))


def crlb_position(fp: FisherPartition, rcond: float = 1e-12) -> float:
    """``trace(F_x^-1)`` in m^2; ``inf`` when ``F_x`` is singular."""
    fx = fp.position_information()
    fx = 0.5 * (fx + fx.T)
    lam = np.linalg.eigvalsh(fx)
    if lam[-1] <= 0 or lam[0] <= rcond * lam[-1]:
        return math.inf
    return float(np.sum(1.0 / lam))
