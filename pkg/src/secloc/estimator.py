"""Variance-dilation SDP estimator with convex-concave iterations.

Each link is modelled as genuine noise with an inflated variance
``rho_i * sigma^2`` (``rho_i >= 1``). Writing ``y_i = d_i - ||x - a_i||``,
``Y = y y^T``, ``X = x x^T`` and the epigraph ``e_i = Y_ii / rho_i`` turns

    sum_i y_i^2 / rho_i + ln(rho_i)  =  sum_i e_i - ln(e_i) + ln(Y_ii)

into a convex part plus the concave ``ln(Y_ii)``. Every iteration replaces
``ln(Y_ii)`` by its tangent at the previous ``Y_ii`` and solves the SDP

    minimize    sum e_i - sum ln(e_i) + sum Y_ii / Yprev_ii
    subject to  e_i >= 0,  Y_ii >= e_i,
                Y_ii = tr(X) - 2 a_i^T x + ||a_i||^2 + 2 d_i y_i - d_i^2,
                Y_ij >= |tr(X) - (a_i + a_j)^T x + a_i^T a_j| + d_j y_i + d_i y_j - d_i d_j,
                [[Y, y], [y^T, 1]] >= 0,  [[X, x], [x^T, 1]] >= 0.

A link is flagged as spoofed when ``y_i^2 / e_i > 1``.

Work is done in noise-normalized coordinates (anchors and ranges divided
by sigma) so that the objective above is the exact negative log-likelihood
and the detector threshold means "one noise standard deviation". Each
program is also translated so that a reference point (a least-squares fit
for the first solve, the previous iterate afterwards) sits at the origin.
The relaxation is exactly invariant under translations, and the solver
sees small numbers even when B / sigma is large.

Per iteration the SDP has PSD blocks of order N+1 and q+1 and N equality
constraints, i.e. a worst-case interior-point cost of order N^4.5, so the
whole estimator costs O(T * N^4.5).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import conic
from .conic import CONST, ConicProgram, ExpCone, LinearRow, PsdBlock, SolverSettings, Status
from .oracle import gauss_newton_ls, linear_ls

E_FLOOR = 1e-12
RATIO_RTOL = 8 * np.finfo(float).eps
Y_DIAG_FLOOR = 1e-10


@dataclass(frozen=True)
class CcpSettings:
    t_max: int = 3
    tau: float = 0.5  # metres; B / 200 for B = 100
    y_init_diag: float = 0.1
    x_prev_init: float = 1e6  # sentinel, every coordinate
    detection_threshold: float = 1.0
    normalize: bool = True

    @classmethod
    def for_area(cls, b: float, **kw) -> "CcpSettings":
        return cls(tau=b / 200.0, **kw)

    def validate(self) -> None:
        if self.t_max < 1:
            raise ValueError("t_max must be >= 1")
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        if not self.y_init_diag > 0:
            raise ValueError("y_init_diag must be positive")
        if not self.detection_threshold > 0:
            raise ValueError("detection_threshold must be positive")


@dataclass
class Layout:
    """Variable offsets: x (q), y (N), X (upper tri), Y (upper tri), e (N), u (N)."""

    n: int
    q: int

    def __post_init__(self) -> None:
        n, q = self.n, self.q
        self.x0 = 0
        self.y0 = q
        self.bx0 = self.y0 + n
        self.by0 = self.bx0 + q * (q + 1) // 2
        self.e0 = self.by0 + n * (n + 1) // 2
        self.u0 = self.e0 + n
        self.num_vars = self.u0 + n
        self._bx = _tri_index(q, self.bx0)
        self._by = _tri_index(n, self.by0)

    def x(self, k: int) -> int:
        return self.x0 + k

    def y(self, i: int) -> int:
        return self.y0 + i

    def X(self, i: int, j: int) -> int:
        return int(self._bx[i, j])

    def Y(self, i: int, j: int) -> int:
        return int(self._by[i, j])

    def e(self, i: int) -> int:
        return self.e0 + i

    def u(self, i: int) -> int:
        return self.u0 + i

    def unpack(self, z: np.ndarray) -> dict[str, np.ndarray]:
        n, q = self.n, self.q
        return {
            "x": z[self.x0 : self.x0 + q].copy(),
            "y": z[self.y0 : self.y0 + n].copy(),
            "X": z[self._bx],
            "Y": z[self._by],
            "e": z[self.e0 : self.e0 + n].copy(),
            "u": z[self.u0 : self.u0 + n].copy(),
        }


def _tri_index(n: int, start: int) -> np.ndarray:
    """Symmetric map (i, j) -> variable index; upper triangle stored row by row."""
    idx = np.zeros((n, n), dtype=int)
    k = start
    for i in range(n):
        for j in range(i, n):
            idx[i, j] = idx[j, i] = k
            k += 1
    return idx


def _scaled(row: dict[int, float], w: float) -> dict[int, float]:
    return {k: w * v for k, v in row.items()}


def normalize_instance(anchors: np.ndarray, d: np.ndarray, sigma: float):
    """Divide anchors and ranges by ``sigma``; returns ``(anchors', d', sigma)``."""
    if not sigma > 0:
        raise ValueError("sigma must be positive to normalize the likelihood")
    return np.asarray(anchors, dtype=float) / sigma, np.asarray(d, dtype=float) / sigma, float(sigma)


def build_ccp_subproblem(
    anchors: np.ndarray, d: np.ndarray, y_diag_prev: np.ndarray
) -> tuple[ConicProgram, Layout]:
    """Assemble one convexified subproblem around the previous ``diag(Y)``.

    The objective carries the constant ``sum ln(Yprev_ii) - 1`` so that its
    value is the tangent majorizer of ``sum e - ln e + ln Y_ii``.
    """
    anchors = np.asarray(anchors, dtype=float)
    d = np.asarray(d, dtype=float)
    yp = np.asarray(y_diag_prev, dtype=float)
    n, q = anchors.shape
    if d.shape != (n,) or yp.shape != (n,):
        raise ValueError("ranges and previous diag(Y) must have one entry per anchor")
    if np.any(yp <= 0):
        raise ValueError("previous diag(Y) entries must be positive")
    L = Layout(n, q)
    p = ConicProgram(num_vars=L.num_vars)

    for i in range(n):
        p.objective[L.e(i)] = 1.0
        p.objective[L.u(i)] = -1.0
        p.objective[L.Y(i, i)] = 1.0 / yp[i]
    p.objective_offset = float(np.sum(np.log(yp) - 1.0))

    trX = {L.X(k, k): 1.0 for k in range(q)}
    sq = np.einsum("ij,ij->i", anchors, anchors)
    gram = anchors @ anchors.T

    for i in range(n):
        p.inequalities.append(LinearRow({L.e(i): 1.0}, 0.0, "epigraph_nonneg"))
    for i in range(n):
        p.inequalities.append(LinearRow({L.Y(i, i): 1.0, L.e(i): -1.0}, 0.0, "dilation"))
    for i in range(n):
        # Y_ii - tr X + 2 a_i^T x - 2 d_i y_i = ||a_i||^2 - d_i^2
        row = {L.Y(i, i): 1.0, L.y(i): -2.0 * d[i]}
        for k in range(q):
            row[L.x(k)] = 2.0 * anchors[i, k]
        for j, c in trX.items():
            row[j] = row.get(j, 0.0) - c
        w = 1.0 / max(2.0 * abs(d[i]), 1.0)
        p.equalities.append(LinearRow(_scaled(row, w), w * float(sq[i] - d[i] ** 2), "range"))
    for i in range(n):
        for j in range(i, n):
            # lifted (x - a_i)^T (x - a_j) = tr X - (a_i + a_j)^T x + a_i^T a_j
            for sign in (1.0, -1.0):
                row: dict[int, float] = {L.Y(i, j): 1.0}
                row[L.y(i)] = row.get(L.y(i), 0.0) - d[j]
                row[L.y(j)] = row.get(L.y(j), 0.0) - d[i]
                for k in range(q):
                    row[L.x(k)] = sign * (anchors[i, k] + anchors[j, k])
                for v, c in trX.items():
                    row[v] = -sign * c
                rhs = sign * gram[i, j] - d[i] * d[j]
                w = 1.0 / max(abs(d[i] * d[j]), 1.0)
                p.inequalities.append(LinearRow(_scaled(row, w), w * float(rhs), "cross"))

    idx = np.full((n + 1, n + 1), CONST, dtype=int)
    const = np.zeros((n + 1, n + 1))
    for i in range(n):
        for j in range(n):
            idx[i, j] = L.Y(i, j)
        idx[i, n] = idx[n, i] = L.y(i)
    const[n, n] = 1.0
    p.psd_blocks.append(PsdBlock(idx, const, "lift_y"))

    idx = np.full((q + 1, q + 1), CONST, dtype=int)
    const = np.zeros((q + 1, q + 1))
    for i in range(q):
        for j in range(q):
            idx[i, j] = L.X(i, j)
        idx[i, q] = idx[q, i] = L.x(i)
    const[q, q] = 1.0
    p.psd_blocks.append(PsdBlock(idx, const, "lift_x"))

    for i in range(n):
        # u_i <= ln(e_i)
        p.exp_cones.append(ExpCone((L.u(i), CONST, L.e(i)), (0.0, 1.0, 0.0), "log"))
    return p, L


def reference_point(anchors: np.ndarray, d: np.ndarray) -> np.ndarray:
    """Least-squares fix used as the first frame origin.

    Gauss-Newton is run from the centroid and from the linearized fix; the
    lower-cost end point wins, which avoids the mirror minimum a target
    outside the anchor hull can produce.
    """
    best, best_cost = None, np.inf
    for x0 in (anchors.mean(axis=0), linear_ls(anchors, d)):
        x = gauss_newton_ls(anchors, d, x0).x
        c = float(np.sum((d - np.linalg.norm(x - anchors, axis=1)) ** 2))
        if c < best_cost:
            best, best_cost = x, c
    return best


def relaxed_objective(e: np.ndarray, y_diag: np.ndarray) -> float:
    """``sum e - ln e + ln Y_ii``: the lifted objective before linearization."""
    e = np.maximum(np.asarray(e, dtype=float), E_FLOOR)
    yd = np.maximum(np.asarray(y_diag, dtype=float), E_FLOOR)
    return float(np.sum(e - np.log(e) + np.log(yd)))


def detect(y_hat: np.ndarray, e_hat: np.ndarray, threshold: float = 1.0) -> tuple[int, ...]:
    """Indices whose ``y_i^2 / e_i`` strictly exceeds ``threshold``.

    A ratio within a few ulps of the threshold counts as equal, so that
    e.g. ``0.1**2 / 0.01`` is not flagged on rounding alone.
    """
    rho = dilation_ratios(y_hat, e_hat)
    return tuple(int(i) for i in np.flatnonzero(rho > threshold * (1.0 + RATIO_RTOL)))


def dilation_ratios(y_hat: np.ndarray, e_hat: np.ndarray) -> np.ndarray:
    y = np.asarray(y_hat, dtype=float)
    e = np.maximum(np.asarray(e_hat, dtype=float), E_FLOOR)
    return y**2 / e


@dataclass
class IterationRecord:
    x_hat: np.ndarray  # metres
    objective: float  # relaxed objective at the solved point
    surrogate: float  # optimal value of the convexified subproblem
    status: Status
    step: float  # distance to previous iterate, metres


@dataclass
class EstimateReport:
    """Result of :func:`run_ccp`.

    ``y_hat`` is in metres and ``e_hat`` in square metres (normalized values
    times sigma and sigma^2), so ``rho_hat = y_hat^2 / e_hat`` is unit-free.
    """

    x_hat: np.ndarray
    y_hat: np.ndarray
    e_hat: np.ndarray
    rho_hat: np.ndarray
    detected: tuple[int, ...]
    iterations_used: int
    trace: list[IterationRecord] = field(default_factory=list)
    solver_statuses: list[Status] = field(default_factory=list)
    failed: bool = False
    scale: float = 1.0
    programs: list[tuple[ConicProgram, np.ndarray]] = field(default_factory=list, repr=False)

    @property
    def objectives(self) -> list[float]:
        return [r.objective for r in self.trace]

    @property
    def surrogates(self) -> list[float]:
        return [r.surrogate for r in self.trace]

    def to_dict(self) -> dict:
        return {
            "x_hat": self.x_hat.tolist(),
            "y_hat": self.y_hat.tolist(),
            "e_hat": self.e_hat.tolist(),
            "rho_hat": self.rho_hat.tolist(),
            "detected": list(self.detected),
            "iterations": self.iterations_used,
            "statuses": [s.value for s in self.solver_statuses],
            "objectives": self.objectives,
            "failed": self.failed,
        }


@dataclass
class _Solved:
    x: np.ndarray
    y: np.ndarray
    e: np.ndarray
    y_diag: np.ndarray
    program: ConicProgram
    primal: np.ndarray


def solve_subproblem(
    anchors: np.ndarray,
    d: np.ndarray,
    y_diag_prev: np.ndarray,
    center: np.ndarray | None = None,
    solver: SolverSettings | None = None,
):
    """Build and solve one subproblem with the origin moved to ``center``.

    Inputs are already normalized. ``center`` defaults to the anchor
    centroid; the solution is mapped back to the input frame.
    """
    center = anchors.mean(axis=0) if center is None else np.asarray(center, dtype=float)
    p, L = build_ccp_subproblem(anchors - center, d, y_diag_prev)
    res = conic.solve(p, solver)
    if not res.ok:
        return res, None
    v = L.unpack(res.primal)
    return res, _Solved(v["x"] + center, v["y"], v["e"], np.diag(v["Y"]).copy(), p, res.primal)


def run_ccp(
    anchors: np.ndarray,
    d: np.ndarray,
    sigma: float,
    settings: CcpSettings | None = None,
    solver: SolverSettings | None = None,
    keep_programs: bool = False,
) -> EstimateReport:
    """Estimate the target position and the spoofed anchors.

    ``d`` are the per-anchor observed ranges (medians), ``sigma`` the
    nominal per-sample noise standard deviation in metres. With
    ``settings.normalize`` false, the objective is used with unit variance
    regardless of ``sigma``.
    """
    settings = settings or CcpSettings()
    settings.validate()
    anchors = np.asarray(anchors, dtype=float)
    d = np.asarray(d, dtype=float)
    n, q = anchors.shape
    if n < q + 1:
        raise ValueError(f"need at least q+1={q + 1} anchors, got {n}")
    scale = sigma if settings.normalize else 1.0
    a_n, d_n, _ = normalize_instance(anchors, d, scale)

    # any frame gives the same relaxation; one near the answer keeps the
    # solver's numbers small when B / sigma is large
    center = reference_point(a_n, d_n)
    y_prev = np.full(n, settings.y_init_diag)
    x_prev = np.full(q, settings.x_prev_init)
    trace: list[IterationRecord] = []
    statuses: list[Status] = []
    last: _Solved | None = None
    failed = False
    programs = []
    for _ in range(settings.t_max):
        res, sol = solve_subproblem(a_n, d_n, y_prev, center, solver)
        statuses.append(res.status)
        if sol is None:
            failed = True
            break
        last = sol
        if keep_programs:
            programs.append((sol.program, sol.primal))
        x_m = sol.x * scale
        step = float(np.linalg.norm(x_m - x_prev))
        trace.append(
            IterationRecord(x_m, relaxed_objective(sol.e, sol.y_diag), res.objective_value, res.status, step)
        )
        y_prev = np.maximum(sol.y_diag, Y_DIAG_FLOOR)
        x_prev = x_m
        center = sol.x
        if step <= settings.tau:
            break

    if last is None:
        nan = np.full(n, math.nan)
        return EstimateReport(
            np.full(q, math.nan), nan, nan.copy(), nan.copy(), (), 0, trace, statuses, True, scale
        )
    rho = dilation_ratios(last.y, last.e)
    report = EstimateReport(
        x_hat=last.x * scale,
        y_hat=last.y * scale,
        e_hat=last.e * scale**2,
        rho_hat=rho,
        detected=detect(last.y, last.e, settings.detection_threshold),
        iterations_used=len(trace),
        trace=trace,
        solver_statuses=statuses,
        failed=failed,
        scale=scale,
    )
    report.programs = programs
    return report
