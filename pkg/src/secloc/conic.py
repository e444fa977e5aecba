"""Small conic-program representation and an interior-point backend.

A program is a linear objective over a flat variable vector ``z`` subject to

* linear equalities ``row . z == rhs``
* linear inequalities ``row . z >= rhs``
* PSD blocks: symmetric matrices whose entries are variables or constants
* exponential cones ``(a, b, c)`` with ``c >= b * exp(a / b)``, ``b > 0``

Symmetric matrix variables are stored as their upper-triangle entries, one
variable per entry, holding the *actual* matrix value (no sqrt(2) scaling).
The sqrt(2) scaling of off-diagonal entries required by the solver's
triangular PSD cone is applied only when the program is compiled.

Cone slots that hold a constant (the ``1`` corner of a Schur block, the
``b = 1`` slot of a log epigraph) use variable index ``-1`` together with
the constant value.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import TextIO

import clarabel
import numpy as np
import scipy.sparse as sp

CONST = -1


class Status(str, Enum):
    OPTIMAL = "optimal"
    NEAR_OPTIMAL = "near_optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    NUMERICAL_FAILURE = "numerical_failure"


class ProgramError(ValueError):
    """Raised for malformed conic programs."""


@dataclass
class LinearRow:
    coeffs: dict[int, float]
    rhs: float
    label: str = ""

    def value(self, z: np.ndarray) -> float:
        return math.fsum(c * z[i] for i, c in self.coeffs.items())

    def scale(self, z: np.ndarray) -> float:
        """Magnitude used to make residuals relative."""
        terms = [abs(c * z[i]) for i, c in self.coeffs.items()]
        return max(1.0, abs(self.rhs), max(terms, default=0.0))


@dataclass
class PsdBlock:
    """Symmetric matrix ``M`` with ``M[i, j] = z[index[i, j]]`` or ``constant[i, j]``."""

    index: np.ndarray
    constant: np.ndarray
    label: str = ""

    @property
    def order(self) -> int:
        return self.index.shape[0]

    def matrix(self, z: np.ndarray) -> np.ndarray:
        idx = self.index
        m = np.where(idx >= 0, z[np.maximum(idx, 0)], self.constant)
        return 0.5 * (m + m.T)


@dataclass
class ExpCone:
    index: tuple[int, int, int]
    constant: tuple[float, float, float] = (0.0, 0.0, 0.0)
    label: str = ""

    def values(self, z: np.ndarray) -> tuple[float, float, float]:
        return tuple(
            float(z[i]) if i >= 0 else float(c) for i, c in zip(self.index, self.constant)
        )


@dataclass
class ConicProgram:
    num_vars: int
    objective: dict[int, float] = field(default_factory=dict)
    objective_offset: float = 0.0
    equalities: list[LinearRow] = field(default_factory=list)
    inequalities: list[LinearRow] = field(default_factory=list)
    psd_blocks: list[PsdBlock] = field(default_factory=list)
    exp_cones: list[ExpCone] = field(default_factory=list)

    def objective_value(self, z: np.ndarray) -> float:
        return self.objective_offset + math.fsum(c * z[i] for i, c in self.objective.items())

    def validate(self) -> None:
        n = self.num_vars

        def check_idx(i: int, where: str, allow_const: bool = False) -> None:
            lo = CONST if allow_const else 0
            if not (lo <= i < n):
                raise ProgramError(f"{where}: variable index {i} out of range [0, {n})")

        for i, c in self.objective.items():
            check_idx(i, "objective")
            if not math.isfinite(c):
                raise ProgramError("objective coefficient is not finite")
        if not math.isfinite(self.objective_offset):
            raise ProgramError("objective offset is not finite")
        for kind, rows in (("equality", self.equalities), ("inequality", self.inequalities)):
            for row in rows:
                for i in row.coeffs:
                    check_idx(i, kind)
        for blk in self.psd_blocks:
            idx = blk.index
            if idx.ndim != 2 or idx.shape[0] != idx.shape[1] or blk.constant.shape != idx.shape:
                raise ProgramError("PSD block index map must be square and match its constants")
            if not np.array_equal(idx, idx.T) or not np.array_equal(blk.constant, blk.constant.T):
                raise ProgramError("PSD block index map must be symmetric")
            for i in idx[np.triu_indices(blk.order)]:
                check_idx(int(i), "psd block", allow_const=True)
        for cone in self.exp_cones:
            for i in cone.index:
                check_idx(i, "exp cone", allow_const=True)


@dataclass
class SolverSettings:
    tol_feas: float = 1e-8
    tol_gap_abs: float = 1e-8
    tol_gap_rel: float = 1e-8
    max_iter: int = 200
    verbose: bool = False


@dataclass
class SolverResult:
    status: Status
    primal: np.ndarray | None
    objective_value: float
    iterations: int = 0
    runtime: float = 0.0

    @property
    def ok(self) -> bool:
        return self.status in (Status.OPTIMAL, Status.NEAR_OPTIMAL)


_STATUS_MAP = {
    "Solved": Status.OPTIMAL,
    "AlmostSolved": Status.NEAR_OPTIMAL,
    "PrimalInfeasible": Status.INFEASIBLE,
    "AlmostPrimalInfeasible": Status.INFEASIBLE,
    "DualInfeasible": Status.UNBOUNDED,
    "AlmostDualInfeasible": Status.UNBOUNDED,
}


def _compile(p: ConicProgram):
    """Translate to the solver's form ``A z + s = b, s in K``."""
    rows, cols, vals = [], [], []
    b: list[float] = []
    cones = []
    r = 0

    def add(coeffs: dict[int, float], rhs: float, sign: float) -> None:
        nonlocal r
        for i, c in coeffs.items():
            rows.append(r)
            cols.append(i)
            vals.append(sign * c)
        b.append(sign * rhs)
        r += 1

    if p.equalities:
        for row in p.equalities:
            add(row.coeffs, row.rhs, 1.0)
        cones.append(clarabel.ZeroConeT(len(p.equalities)))
    if p.inequalities:
        # s = row.z - rhs >= 0
        for row in p.inequalities:
            add(row.coeffs, row.rhs, -1.0)
        cones.append(clarabel.NonnegativeConeT(len(p.inequalities)))

    def add_slot(i: int, const: float, weight: float = 1.0) -> None:
        # s = weight * slot
        if i >= 0:
            add({i: -weight}, 0.0, 1.0)
        else:
            add({}, weight * const, 1.0)

    for cone in p.exp_cones:
        for i, c in zip(cone.index, cone.constant):
            add_slot(i, c)
        cones.append(clarabel.ExponentialConeT())
    root2 = math.sqrt(2.0)
    for blk in p.psd_blocks:
        n = blk.order
        for j in range(n):
            for i in range(j + 1):
                add_slot(int(blk.index[i, j]), float(blk.constant[i, j]), 1.0 if i == j else root2)
        cones.append(clarabel.PSDTriangleConeT(n))

    A = sp.csc_matrix((vals, (rows, cols)), shape=(r, p.num_vars))
    q = np.zeros(p.num_vars)
    for i, c in p.objective.items():
        q[i] += c
    return A, np.asarray(b, dtype=float), q, cones


def solve(p: ConicProgram, settings: SolverSettings | None = None) -> SolverResult:
    """Solve ``p`` with Clarabel. ``primal`` is None unless the status is (near) optimal."""
    settings = settings or SolverSettings()
    p.validate()
    A, b, q, cones = _compile(p)
    s = clarabel.DefaultSettings()
    s.verbose = settings.verbose
    s.tol_feas = settings.tol_feas
    s.tol_gap_abs = settings.tol_gap_abs
    s.tol_gap_rel = settings.tol_gap_rel
    s.max_iter = settings.max_iter
    s.presolve_enable = False
    P = sp.csc_matrix((p.num_vars, p.num_vars))
    t0 = time.perf_counter()
    try:
        sol = clarabel.DefaultSolver(P, q, A, b, cones, s).solve()
    except Exception:  # the backend raises on factorization breakdowns
        return SolverResult(Status.NUMERICAL_FAILURE, None, math.nan, 0, time.perf_counter() - t0)
    runtime = time.perf_counter() - t0
    status = _STATUS_MAP.get(str(sol.status), Status.NUMERICAL_FAILURE)
    if status in (Status.OPTIMAL, Status.NEAR_OPTIMAL):
        z = np.array(sol.x, dtype=float)
        if not np.all(np.isfinite(z)):
            return SolverResult(Status.NUMERICAL_FAILURE, None, math.nan, sol.iterations, runtime)
        return SolverResult(status, z, p.objective_value(z), sol.iterations, runtime)
    return SolverResult(status, None, math.nan, sol.iterations, runtime)


@dataclass
class FeasibilityReport:
    max_equality_residual: float
    max_inequality_violation: float
    min_psd_eigenvalue: float
    max_exp_cone_violation: float
    tol: float

    @property
    def passed(self) -> bool:
        return (
            self.max_equality_residual <= self.tol
            and self.max_inequality_violation <= self.tol
            and self.min_psd_eigenvalue >= -self.tol
            and self.max_exp_cone_violation <= self.tol
        )


def check_feasibility(p: ConicProgram, z: np.ndarray, tol: float = 1e-6) -> FeasibilityReport:
    """Audit ``z`` against every constraint of ``p``.

    Linear residuals are relative to ``max(1, |rhs|, max_k |row_k z_k|)`` and
    PSD eigenvalues to ``max(1, max |M_ij|)``, so a unit-scale problem is
    audited in absolute terms while a large-coordinate one is not penalized
    for floating-point cancellation.
    """
    z = np.asarray(z, dtype=float)
    if z.shape != (p.num_vars,):
        raise ProgramError(f"point has shape {z.shape}, expected ({p.num_vars},)")
    eq = max((abs(r.value(z) - r.rhs) / r.scale(z) for r in p.equalities), default=0.0)
    ineq = max((max(0.0, r.rhs - r.value(z)) / r.scale(z) for r in p.inequalities), default=0.0)
    eig = math.inf
    for blk in p.psd_blocks:
        m = blk.matrix(z)
        lam = float(np.linalg.eigvalsh(m)[0])
        eig = min(eig, lam / max(1.0, float(np.max(np.abs(m)))))
    expv = 0.0
    for cone in p.exp_cones:
        a, bb, c = cone.values(z)
        if bb <= 0.0:
            # closure of the cone at b = 0 is {a <= 0, c >= 0}
            v = max(-bb, max(0.0, a) if bb == 0.0 else math.inf, -c)
        else:
            ratio = a / bb
            bound = bb * math.exp(ratio) if ratio < 700 else math.inf
            v = max(0.0, bound - c) / max(1.0, abs(c))
        expv = max(expv, v)
    return FeasibilityReport(eq, ineq, eig if p.psd_blocks else 0.0, expv, tol)


# -- text serialization -------------------------------------------------------
#
# One record per line, whitespace separated, floats written with repr():
#
#   conic-program 1
#   vars <n>
#   offset <float>
#   obj <idx> <coef>
#   eq <row> <rhs> <label>          then   eqc <row> <idx> <coef>
#   ineq <row> <rhs> <label>        then   ineqc <row> <idx> <coef>
#   psd <blk> <order> <label>       then   psde <blk> <i> <j> <idx> <const>   (i <= j)
#   exp <k> <i0> <i1> <i2> <c0> <c1> <c2> <label>
#
# Labels are single tokens ("-" when empty).


def _label(s: str) -> str:
    return s.replace(" ", "_") if s else "-"


def _unlabel(s: str) -> str:
    return "" if s == "-" else s


def dump(p: ConicProgram, fh: TextIO) -> None:
    w = fh.write
    w("conic-program 1\n")
    w(f"vars {p.num_vars}\n")
    w(f"offset {p.objective_offset!r}\n")
    for i, c in p.objective.items():
        w(f"obj {i} {c!r}\n")
    for kind, rows in (("eq", p.equalities), ("ineq", p.inequalities)):
        for k, row in enumerate(rows):
            w(f"{kind} {k} {row.rhs!r} {_label(row.label)}\n")
            for i, c in row.coeffs.items():
                w(f"{kind}c {k} {i} {c!r}\n")
    for k, blk in enumerate(p.psd_blocks):
        w(f"psd {k} {blk.order} {_label(blk.label)}\n")
        for i in range(blk.order):
            for j in range(i, blk.order):
                w(f"psde {k} {i} {j} {int(blk.index[i, j])} {float(blk.constant[i, j])!r}\n")
    for k, cone in enumerate(p.exp_cones):
        i0, i1, i2 = cone.index
        c0, c1, c2 = (float(c) for c in cone.constant)
        w(f"exp {k} {i0} {i1} {i2} {c0!r} {c1!r} {c2!r} {_label(cone.label)}\n")


def dumps(p: ConicProgram) -> str:
    import io

    buf = io.StringIO()
    dump(p, buf)
    return buf.getvalue()


def loads(text: str) -> ConicProgram:
    lines = [ln.split() for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0][:2] != ["conic-program", "1"]:
        raise ProgramError("not a conic-program v1 document")
    p = ConicProgram(num_vars=0)
    blocks: dict[int, PsdBlock] = {}
    for tok in lines[1:]:
        tag = tok[0]
        if tag == "vars":
            p.num_vars = int(tok[1])
        elif tag == "offset":
            p.objective_offset = float(tok[1])
        elif tag == "obj":
            p.objective[int(tok[1])] = float(tok[2])
        elif tag in ("eq", "ineq"):
            rows = p.equalities if tag == "eq" else p.inequalities
            rows.append(LinearRow({}, float(tok[2]), _unlabel(tok[3])))
        elif tag in ("eqc", "ineqc"):
            rows = p.equalities if tag == "eqc" else p.inequalities
            rows[int(tok[1])].coeffs[int(tok[2])] = float(tok[3])
        elif tag == "psd":
            n = int(tok[2])
            blk = PsdBlock(np.full((n, n), CONST, dtype=int), np.zeros((n, n)), _unlabel(tok[3]))
            blocks[int(tok[1])] = blk
            p.psd_blocks.append(blk)
        elif tag == "psde":
            blk = blocks[int(tok[1])]
            i, j = int(tok[2]), int(tok[3])
            blk.index[i, j] = blk.index[j, i] = int(tok[4])
            blk.constant[i, j] = blk.constant[j, i] = float(tok[5])
        elif tag == "exp":
            p.exp_cones.append(
                ExpCone(
                    (int(tok[2]), int(tok[3]), int(tok[4])),
                    (float(tok[5]), float(tok[6]), float(tok[7])),
                    _unlabel(tok[8]),
                )
            )
        else:
            raise ProgramError(f"unknown record {tag!r}")
    p.validate()
    return p
