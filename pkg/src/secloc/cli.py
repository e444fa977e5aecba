"""Command-line entry point: ``secloc {simulate,estimate,crlb,bench}``.

Exit codes: 0 success, 1 configuration error, 2 I/O error, 3 more than
half of the estimator runs failed.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

import numpy as np

from .bench import ESTIMATORS, SWEEPS, ExperimentConfig, csv_text, emit_csv, run_experiment
from .crlb import crlb_position, fim_attack_model, fim_dilation_model
from .estimator import CcpSettings, run_ccp
from .measurement import dump_instance, load_instance, sample_ranges
from .scenario import ConfigError, ScenarioConfig, assign_attackers, generate_deployment, make_rng

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_SOLVER = 0, 1, 2, 3

log = logging.getLogger("secloc")


def _scenario_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n", type=int, default=10, help="number of anchors")
    p.add_argument("--q", type=int, default=2, choices=(2, 3), help="dimension")
    p.add_argument("--delta", type=float, default=20.0, help="attack cap Delta (m)")
    p.add_argument("--sigma", type=float, default=15.0, help="noise std per sample (m)")
    p.add_argument("--k", type=int, default=10, help="range samples per anchor")
    p.add_argument("--b", type=float, default=100.0, help="area side (m)")
    p.add_argument("--seed", type=int, default=0)


def _ccp_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--t-max", type=int, default=3, help="maximum CCP iterations")
    p.add_argument("--tau", type=float, default=None, help="stopping threshold (m), default B/200")
    p.add_argument(
        "--no-sigma-normalization",
        action="store_true",
        help="solve the objective in metres with unit variance instead of sigma units",
    )


def _write(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    else:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def cmd_simulate(args) -> int:
    cfg = ScenarioConfig(n=args.n, q=args.q, b=args.b, delta_cap=args.delta, seed=args.seed)
    s = generate_deployment(cfg, make_rng(args.seed, 0, 0))
    s = assign_attackers(s, args.delta, make_rng(args.seed, 1, 0, 0))
    if args.sigma < 0:
        raise ConfigError("sigma must be non-negative")
    obs = sample_ranges(s, args.sigma, args.k, make_rng(args.seed, 2, 0, 0))
    _write(dump_instance(s, obs), args.out)
    return EXIT_OK


def cmd_estimate(args) -> int:
    s, obs = load_instance(_read(args.input))
    if obs is None:
        raise ConfigError("instance has no range samples; run `simulate` first")
    sigma = args.sigma if args.sigma is not None else float(np.max(obs.sigma))
    if not sigma > 0:
        raise ConfigError("sigma must be positive (pass --sigma)")
    tau = s.b / 200.0 if args.tau is None else args.tau
    settings = CcpSettings(t_max=args.t_max, tau=tau, normalize=not args.no_sigma_normalization)
    rep = run_ccp(s.anchors, obs.medians, sigma, settings)
    doc = rep.to_dict()
    doc["error_m"] = float(np.linalg.norm(rep.x_hat - s.target))
    doc["true_attackers"] = list(s.attackers)
    _write(json.dumps(doc, indent=1), args.out)
    return EXIT_SOLVER if rep.failed and rep.iterations_used == 0 else EXIT_OK


def cmd_crlb(args) -> int:
    if args.input:
        s, obs = load_instance(_read(args.input))
        sigma = args.sigma if args.sigma is not None else float(np.max(obs.sigma)) if obs else None
    else:
        cfg = ScenarioConfig(n=args.n, q=args.q, b=args.b, delta_cap=args.delta, seed=args.seed)
        s = generate_deployment(cfg, make_rng(args.seed, 0, 0))
        s = assign_attackers(s, args.delta, make_rng(args.seed, 1, 0, 0))
        sigma = 15.0 if args.sigma is None else args.sigma
    if sigma is None or not sigma > 0:
        raise ConfigError("sigma must be positive (pass --sigma)")
    rho = 1.0 + (s.deltas / sigma) ** 2
    doc = {
        "sigma": sigma,
        "attackers": list(s.attackers),
        "crlb_no_attack_m2": crlb_position(fim_attack_model(s.target, s.anchors, sigma)),
        "crlb_attack_model_m2": crlb_position(fim_attack_model(s.target, s.anchors, sigma, s.attackers)),
        "crlb_dilation_model_m2": crlb_position(fim_dilation_model(s.target, s.anchors, sigma, rho)),
        "rho": rho.tolist(),
    }
    _write(json.dumps(doc, indent=1), args.out)
    return EXIT_OK


def cmd_bench(args) -> int:
    values = tuple(float(v) for v in args.values.split(",") if v.strip())
    cfg = ExperimentConfig(
        sweep=args.sweep,
        values=values,
        n=args.n,
        delta=args.delta,
        sigma=args.sigma,
        k=args.k,
        b=args.b,
        q=args.q,
        n_deployments=args.nd,
        n_choices=args.nc,
        seed=args.seed,
        estimators=tuple(e.strip() for e in args.estimators.split(",") if e.strip()),
        t_max=args.t_max,
        tau=args.tau,
        normalize=not args.no_sigma_normalization,
        grid_res=args.grid_res,
        jobs=args.jobs,
    )
    cfg.validate()
    res = run_experiment(cfg)
    if args.out in (None, "-"):
        sys.stdout.write(csv_text(res.summaries))
    else:
        emit_csv(res, args.out)
    for est in cfg.estimators:
        recs = res.records_for(est)
        if recs and sum(r.failed for r in recs) / len(recs) > 0.5:
            log.error("estimator %s failed on more than half of the trials", est)
            return EXIT_SOLVER
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="secloc", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("simulate", help="draw one scenario and its range samples (JSON)")
    _scenario_flags(sp)
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("estimate", help="run the SDP estimator on one instance")
    sp.add_argument("--in", dest="input", required=True, help="instance JSON from `simulate` ('-' for stdin)")
    sp.add_argument("--sigma", type=float, default=None, help="override the instance's sigma (m)")
    _ccp_flags(sp)
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_estimate)

    sp = sub.add_parser("crlb", help="position CRLBs for an instance or a fresh draw")
    sp.add_argument("--in", dest="input", default=None)
    _scenario_flags(sp)
    sp.set_defaults(sigma=None)
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_crlb)

    sp = sub.add_parser("bench", help="Monte Carlo sweep to CSV")
    sp.add_argument("--sweep", choices=sorted(SWEEPS), default="sigma")
    sp.add_argument("--values", default="5,10,15", help="comma-separated sweep values")
    _scenario_flags(sp)
    sp.add_argument("--nd", type=int, default=100, help="node deployments per sweep value")
    sp.add_argument("--nc", type=int, default=5, help="attacker selections per deployment")
    sp.add_argument("--estimators", default="sdp,ls_baseline", help=f"subset of {','.join(ESTIMATORS)}")
    _ccp_flags(sp)
    sp.add_argument("--grid-res", type=int, default=401, help="grid oracle points per axis")
    sp.add_argument("--jobs", type=int, default=1, help="worker processes")
    sp.add_argument("--out", default=None, help="CSV path (stdout if omitted)")
    sp.set_defaults(func=cmd_bench)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except (ConfigError, ValueError) as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG
    except OSError as exc:
        log.error("I/O error: %s", exc)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
