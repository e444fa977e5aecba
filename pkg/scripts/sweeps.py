"""Run the three standard sweeps (N, Delta, sigma) and write one CSV each.

    python scripts/sweeps.py --outdir results --nd 100 --nc 5 --jobs 4
"""

import argparse
import logging
from pathlib import Path

from secloc.bench import ExperimentConfig, emit_csv, run_experiment

SWEEPS = {
    "N": (6, 8, 10, 12, 14),
    "Delta": (0, 10, 20, 30, 40),
    "sigma": (5, 10, 15),
}

log = logging.getLogger("sweeps")


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--outdir", type=Path, default=Path("results"))
    ap.add_argument("--nd", type=int, default=100)
    ap.add_argument("--nc", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--estimators", default="sdp,grid_oracle,ls_baseline")
    ap.add_argument("--only", choices=sorted(SWEEPS), default=None)
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    args.outdir.mkdir(parents=True, exist_ok=True)
    for name, values in SWEEPS.items():
        if args.only and name != args.only:
            continue
        cfg = ExperimentConfig(
            sweep=name,
            values=tuple(float(v) for v in values),
            n_deployments=args.nd,
            n_choices=args.nc,
            seed=args.seed,
            estimators=tuple(args.estimators.split(",")),
            jobs=args.jobs,
        )
        res = run_experiment(cfg)
        path = args.outdir / f"sweep_{name}.csv"
        emit_csv(res, path)
        for s in res.summaries:
            log.info("%s=%g %-12s rmse %.2f m  p_cd %.3f  fa %.3f", name, s.value, s.estimator, s.rmse_m, s.p_cd, s.fa_rate)
        log.info("wrote %s", path)


if __name__ == "__main__":
    main()
