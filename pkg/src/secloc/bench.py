"""Monte Carlo harness: sweeps, RMSE, detection rates, CSV output.

Random streams per trial (all PCG64, see :func:`secloc.scenario.make_rng`):

* deployment ``d``:             ``make_rng(seed, 0, d)``
* attacker choice ``c`` of it:  ``make_rng(seed, 1, d, c)``
* range noise of that trial:    ``make_rng(seed, 2, d, c)``

The streams do not depend on the sweep value, so neighbouring points of a
sigma or Delta sweep share deployments, attackers and standard-normal noise.
Every enabled estimator consumes the very same observations.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np
from scipy import stats

from .crlb import crlb_position, fim_attack_model
from .estimator import CcpSettings, normalize_instance, run_ccp
from .measurement import RangeObservations, sample_ranges
from .oracle import GridSpec, gauss_newton_ls, grid_search, profile_dilation
from .scenario import ConfigError, Scenario, ScenarioConfig, assign_attackers, generate_deployment, make_rng

ESTIMATORS = ("sdp", "grid_oracle", "ls_baseline")
SWEEPS = {"N": "n", "Delta": "delta", "sigma": "sigma"}
CSV_HEADER = [
    "sweep_var", "value", "estimator", "rmse_m", "p_cd", "fa_rate", "crlb_m2", "n_trials", "n_failures",
]


@dataclass(frozen=True)
class ExperimentConfig:
    sweep: str = "sigma"
    values: tuple[float, ...] = (15.0,)
    n: int = 10
    delta: float = 20.0
    sigma: float = 15.0
    k: int = 10
    b: float = 100.0
    q: int = 2
    n_deployments: int = 100
    n_choices: int = 5
    seed: int = 0
    estimators: tuple[str, ...] = ("sdp", "ls_baseline")
    t_max: int = 3
    tau: float | None = None  # defaults to B / 200
    normalize: bool = True
    grid_res: int = 401
    jobs: int = 1

    def validate(self) -> None:
        if self.sweep not in SWEEPS:
            raise ConfigError(f"sweep must be one of {sorted(SWEEPS)}, got {self.sweep!r}")
        if not self.values:
            raise ConfigError("sweep values must be non-empty")
        if self.n_deployments < 1 or self.n_choices < 1:
            raise ConfigError("deployment and attacker-choice counts must be >= 1")
        if self.k < 1:
            raise ConfigError("K must be >= 1")
        bad = set(self.estimators) - set(ESTIMATORS)
        if bad or not self.estimators:
            raise ConfigError(f"unknown estimators {sorted(bad)}; choose from {ESTIMATORS}")
        for v in self.values:
            self.point(v).validate()
            if self.sigma_at(v) <= 0:
                raise ConfigError("sigma must be positive")

    def at(self, value: float) -> "ExperimentConfig":
        """Fixed parameters with the swept one set to ``value``."""
        attr = SWEEPS[self.sweep]
        return replace(self, **{attr: int(value) if attr == "n" else float(value)})

    def point(self, value: float) -> ScenarioConfig:
        c = self.at(value)
        return ScenarioConfig(n=c.n, q=c.q, b=c.b, delta_cap=c.delta, seed=c.seed)

    def sigma_at(self, value: float) -> float:
        return self.at(value).sigma

    def ccp_settings(self) -> CcpSettings:
        tau = self.b / 200.0 if self.tau is None else self.tau
        return CcpSettings(t_max=self.t_max, tau=tau, normalize=self.normalize)


@dataclass
class TrialRecord:
    value: float
    deployment: int
    choice: int
    estimator: str
    x_hat: tuple[float, ...]
    sq_error: float
    detected: tuple[int, ...] | None
    truth: tuple[int, ...]
    n_anchors: int
    crlb: float
    failed: bool = False
    iterations: int = 0
    objectives: tuple[float, ...] = ()
    surrogates: tuple[float, ...] = ()


@dataclass
class Summary:
    sweep_var: str
    value: float
    estimator: str
    rmse_m: float
    p_cd: float
    fa_rate: float
    crlb_m2: float
    n_trials: int
    n_failures: int


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    summaries: list[Summary] = field(default_factory=list)
    records: list[TrialRecord] = field(default_factory=list)

    def failure_rate(self) -> float:
        if not self.records:
            return 0.0
        return sum(r.failed for r in self.records) / len(self.records)

    def records_for(self, estimator: str, value: float | None = None) -> list[TrialRecord]:
        return [
            r for r in self.records if r.estimator == estimator and (value is None or r.value == value)
        ]


def realize(cfg: ExperimentConfig, value: float, d: int, c: int) -> tuple[Scenario, RangeObservations]:
    """The scenario and observations of one trial."""
    pc = cfg.point(value)
    s = generate_deployment(pc, make_rng(cfg.seed, 0, d))
    s = assign_attackers(s, pc.delta_cap, make_rng(cfg.seed, 1, d, c))
    obs = sample_ranges(s, cfg.sigma_at(value), cfg.k, make_rng(cfg.seed, 2, d, c))
    return s, obs


def _estimate(cfg: ExperimentConfig, est: str, s: Scenario, obs: RangeObservations, sigma: float):
    d = obs.medians
    if est == "sdp":
        rep = run_ccp(s.anchors, d, sigma, cfg.ccp_settings())
        ok = bool(np.all(np.isfinite(rep.x_hat)))
        return rep.x_hat, rep.detected, not ok, rep.iterations_used, (tuple(rep.objectives), tuple(rep.surrogates))
    if est == "grid_oracle":
        scale = sigma if cfg.normalize else 1.0
        a_n, d_n, _ = normalize_instance(s.anchors, d, scale)
        xg, _ = grid_search(a_n, d_n, GridSpec(0.0, cfg.b / scale, cfg.grid_res))
        rho = profile_dilation(xg, a_n, d_n)
        detected = tuple(int(i) for i in np.flatnonzero(rho > 1.0))
        return xg * scale, detected, False, 0, ((), ())
    ls = gauss_newton_ls(s.anchors, d)
    return ls.x, None, not np.all(np.isfinite(ls.x)), ls.iterations, ((), ())


def run_trials(cfg: ExperimentConfig, vi: int, d: int) -> list[TrialRecord]:
    """All attacker choices and estimators for deployment ``d`` at sweep index ``vi``."""
    value = cfg.values[vi]
    sigma = cfg.sigma_at(value)
    out = []
    for c in range(cfg.n_choices):
        s, obs = realize(cfg, value, d, c)
        bound = crlb_position(fim_attack_model(s.target, s.anchors, sigma, s.attackers))
        for est in cfg.estimators:
            try:
                x, det, failed, its, objs = _estimate(cfg, est, s, obs, sigma)
            except (ValueError, np.linalg.LinAlgError):
                x, det, failed, its, objs = np.full(s.q, math.nan), None, True, 0, ((), ())
            err = float(np.sum((np.asarray(x) - s.target) ** 2)) if not failed else math.nan
            out.append(
                TrialRecord(
                    value=float(value),
                    deployment=d,
                    choice=c,
                    estimator=est,
                    x_hat=tuple(float(v) for v in x),
                    sq_error=err,
                    detected=det,
                    truth=s.attackers,
                    n_anchors=s.n,
                    crlb=bound,
                    failed=failed,
                    iterations=its,
                    objectives=objs[0],
                    surrogates=objs[1],
                )
            )
    return out


def _run_trials_star(args):
    return run_trials(*args)


def compute_detection_stats(
    detected: Sequence[Iterable[int]], truth: Sequence[Iterable[int]], n_anchors: Sequence[int]
) -> tuple[float, float]:
    """Pooled anchor-level (true-positive rate, false-alarm rate)."""
    tp = pos = fp = neg = 0
    for det, tru, n in zip(detected, truth, n_anchors):
        det, tru = set(det), set(tru)
        tp += len(det & tru)
        pos += len(tru)
        fp += len(det - tru)
        neg += n - len(tru)
    p_cd = tp / pos if pos else math.nan
    fa = fp / neg if neg else math.nan
    return p_cd, fa


def rmse(sq_errors: Iterable[float]) -> float:
    e = [v for v in sq_errors if not math.isnan(v)]
    return math.sqrt(math.fsum(e) / len(e)) if e else math.nan


def summarize(cfg: ExperimentConfig, records: list[TrialRecord]) -> list[Summary]:
    out = []
    for value in cfg.values:
        for est in cfg.estimators:
            recs = [r for r in records if r.value == float(value) and r.estimator == est]
            ok = [r for r in recs if not r.failed]
            if ok and ok[0].detected is not None:
                p_cd, fa = compute_detection_stats(
                    [r.detected for r in ok], [r.truth for r in ok], [r.n_anchors for r in ok]
                )
            else:
                p_cd = fa = math.nan
            bounds = [r.crlb for r in recs]
            out.append(
                Summary(
                    sweep_var=cfg.sweep,
                    value=float(value),
                    estimator=est,
                    rmse_m=rmse(r.sq_error for r in ok),
                    p_cd=p_cd,
                    fa_rate=fa,
                    crlb_m2=math.fsum(bounds) / len(bounds) if bounds else math.nan,
                    n_trials=len(recs),
                    n_failures=len(recs) - len(ok),
                )
            )
    return out


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    cfg.validate()
    jobs = [(cfg, vi, d) for vi in range(len(cfg.values)) for d in range(cfg.n_deployments)]
    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            chunks = list(pool.map(_run_trials_star, jobs, chunksize=4))
    else:
        chunks = [run_trials(*j) for j in jobs]
    records = [r for ch in chunks for r in ch]
    return ExperimentResult(cfg, summarize(cfg, records), records)


def bootstrap_gain(
    sq_err_a: Sequence[float],
    sq_err_b: Sequence[float],
    confidence: float = 0.95,
    n_resamples: int = 2000,
    seed: int = 0,
):
    """Paired bootstrap of ``1 - RMSE_a / RMSE_b``; returns (estimate, lower, upper).

    The interval is one-sided: ``lower`` is the ``1 - confidence`` percentile.
    """
    a = np.asarray(sq_err_a, dtype=float)
    b = np.asarray(sq_err_b, dtype=float)

    def gain(x, y, axis=-1):
        return 1.0 - np.sqrt(np.mean(x, axis=axis) / np.mean(y, axis=axis))

    res = stats.bootstrap(
        (a, b),
        gain,
        paired=True,
        vectorized=True,
        n_resamples=n_resamples,
        confidence_level=confidence,
        alternative="greater",
        method="percentile",
        random_state=np.random.default_rng(seed),
    )
    return float(gain(a, b)), float(res.confidence_interval.low), float(res.confidence_interval.high)


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def emit_csv(res: ExperimentResult | list[Summary], path) -> None:
    """Write the summary table (UTF-8, LF line endings, '.' decimals)."""
    rows = res.summaries if isinstance(res, ExperimentResult) else res
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(csv_text(rows))


def csv_text(rows: list[Summary]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for s in rows:
        w.writerow([_fmt(v) for v in asdict(s).values()])
    return buf.getvalue()


def read_csv(path) -> list[Summary]:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != CSV_HEADER:
            raise ValueError(f"unexpected CSV header {reader.fieldnames}")
        return [
            Summary(
                sweep_var=row["sweep_var"],
                value=float(row["value"]),
                estimator=row["estimator"],
                rmse_m=float(row["rmse_m"]),
                p_cd=float(row["p_cd"]),
                fa_rate=float(row["fa_rate"]),
                crlb_m2=float(row["crlb_m2"]),
                n_trials=int(row["n_trials"]),
                n_failures=int(row["n_failures"]),
            )
            for row in reader
        ]
