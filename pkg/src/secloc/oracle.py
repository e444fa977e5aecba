"""Brute-force and baseline references for the estimator.

``profile_objective`` is the relaxed negative log-likelihood with each
dilation factor minimized out in closed form: for a residual ``y`` the
minimum of ``y^2 / rho + ln(rho)`` over ``rho >= 1`` is ``y^2`` when
``|y| <= 1`` and ``1 + ln(y^2)`` otherwise (attained at ``rho = max(1, y^2)``).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class GridSpec:
    lower: float
    upper: float
    resolution: int = 401

    def validate(self) -> None:
        if self.resolution < 2:
            raise ValueError("grid resolution must be >= 2")
        if not self.upper > self.lower:
            raise ValueError("grid upper bound must exceed lower bound")

    def axis(self) -> np.ndarray:
        return np.linspace(self.lower, self.upper, self.resolution)

    @property
    def cell(self) -> float:
        return (self.upper - self.lower) / (self.resolution - 1)


def profile_terms(y: np.ndarray) -> np.ndarray:
    y2 = np.square(y)
    return np.where(y2 <= 1.0, y2, 1.0 + np.log(np.maximum(y2, 1.0)))


def profile_objective(x: np.ndarray, anchors: np.ndarray, d: np.ndarray) -> float:
    """Sum of per-link profiled costs at ``x`` (normalized units)."""
    y = np.asarray(d, dtype=float) - np.linalg.norm(np.asarray(x, dtype=float) - anchors, axis=1)
    return float(np.sum(profile_terms(y)))


def profile_dilation(x: np.ndarray, anchors: np.ndarray, d: np.ndarray) -> np.ndarray:
    """Minimizing ``rho`` per link at fixed ``x``."""
    y = np.asarray(d, dtype=float) - np.linalg.norm(np.asarray(x, dtype=float) - anchors, axis=1)
    return np.maximum(1.0, y**2)


def grid_search(
    anchors: np.ndarray, d: np.ndarray, spec: GridSpec, chunk: int = 65536
) -> tuple[np.ndarray, float]:
    """Exhaustive minimization of :func:`profile_objective` over a box grid.

    Ties go to the lexicographically smallest grid index.
    """
    spec.validate()
    anchors = np.asarray(anchors, dtype=float)
    d = np.asarray(d, dtype=float)
    q = anchors.shape[1]
    axis = spec.axis()
    total = spec.resolution**q
    best_val, best_flat = np.inf, -1
    for start in range(0, total, chunk):
        flat = np.arange(start, min(start + chunk, total))
        pts = axis[np.stack(np.unravel_index(flat, (spec.resolution,) * q), axis=1)]
        dist = np.linalg.norm(pts[:, None, :] - anchors[None, :, :], axis=2)
        vals = profile_terms(d[None, :] - dist).sum(axis=1)
        k = int(np.argmin(vals))
        if vals[k] < best_val:
            best_val, best_flat = float(vals[k]), int(flat[k])
    idx = np.unravel_index(best_flat, (spec.resolution,) * q)
    return axis[list(idx)], best_val


def linear_ls(anchors: np.ndarray, d: np.ndarray) -> np.ndarray:
    """Closed-form fix from differencing the squared ranges against anchor 0."""
    anchors = np.asarray(anchors, dtype=float)
    d = np.asarray(d, dtype=float)
    a0 = anchors[0]
    M = 2.0 * (anchors[1:] - a0)
    rhs = d[0] ** 2 - d[1:] ** 2 + np.sum(anchors[1:] ** 2, axis=1) - a0 @ a0
    return np.linalg.lstsq(M, rhs, rcond=None)[0]


@dataclass
class LsResult:
    x: np.ndarray
    iterations: int
    converged: bool
    regularized: bool = False


def gauss_newton_ls(
    anchors: np.ndarray,
    d: np.ndarray,
    x0: np.ndarray | None = None,
    max_iter: int = 100,
    tol: float = 1e-10,
) -> LsResult:
    """Damped Gauss-Newton on ``sum (d_i - ||x - a_i||)^2``.

    Starts from the anchor centroid unless ``x0`` is given. Steps are halved
    until the cost decreases; iteration stops when the accepted step is
    shorter than ``tol`` (relative to the anchor spread).
    """
    anchors = np.asarray(anchors, dtype=float)
    d = np.asarray(d, dtype=float)
    n, q = anchors.shape
    if n < q + 1:
        raise ValueError(f"need at least q+1={q + 1} anchors, got {n}")
    x = anchors.mean(axis=0) if x0 is None else np.asarray(x0, dtype=float).copy()
    spread = max(1.0, float(np.max(np.abs(anchors - anchors.mean(axis=0)))))
    regularized = False

    def cost(p: np.ndarray) -> float:
        return float(np.sum((d - np.linalg.norm(p - anchors, axis=1)) ** 2))

    f = cost(x)
    for it in range(1, max_iter + 1):
        diff = x - anchors
        r = np.linalg.norm(diff, axis=1)
        r = np.maximum(r, 1e-12 * spread)
        J = diff / r[:, None]  # d r_i / d x
        res = d - r
        H = J.T @ J
        g = J.T @ res
        try:
            if np.linalg.cond(H) > 1e12:
                raise np.linalg.LinAlgError
            step = np.linalg.solve(H, g)
        except np.linalg.LinAlgError:
            regularized = True
            step = np.linalg.solve(H + 1e-8 * np.eye(q), g)
        t = 1.0
        while t > 1e-12:
            cand = x + t * step
            fc = cost(cand)
            if fc <= f:
                break
            t *= 0.5
        else:
            return LsResult(x, it, True, regularized)
        moved = float(np.linalg.norm(cand - x))
        x, f = cand, fc
        if moved <= tol * spread:
            return LsResult(x, it, True, regularized)
    return LsResult(x, max_iter, False, regularized)
