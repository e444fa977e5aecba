import hashlib
import math

import numpy as np
import pytest

from secloc import bench
from secloc.bench import (
    CSV_HEADER,
    ExperimentConfig,
    ExperimentResult,
    bootstrap_gain,
    compute_detection_stats,
    csv_text,
    emit_csv,
    read_csv,
    realize,
    rmse,
    run_experiment,
)
from secloc.scenario import ConfigError

SMALL = dict(n=6, n_deployments=2, n_choices=3, seed=5)


def test_trial_count():
    res = run_experiment(ExperimentConfig(values=(10.0,), estimators=("sdp", "ls_baseline"), **SMALL))
    for est in ("sdp", "ls_baseline"):
        assert len(res.records_for(est)) == 6
    assert [s.n_trials for s in res.summaries] == [6, 6]


def test_detection_stats_examples():
    truth = [(0, 1), (2,), ()]
    assert compute_detection_stats(truth, truth, [4, 4, 4]) == (1.0, 0.0)
    assert compute_detection_stats([(), (), ()], truth, [4, 4, 4]) == (0.0, 0.0)
    # one-based {1,2} / {2,3} in zero-based indices
    assert compute_detection_stats([(1, 2)], [(0, 1)], [4]) == (0.5, 0.5)


def test_detection_stats_no_attackers_is_nan():
    p, fa = compute_detection_stats([(1,)], [()], [4])
    assert math.isnan(p) and fa == 0.25


def test_detection_stats_relabeling_invariant():
    rng = np.random.default_rng(0)
    det = [tuple(np.flatnonzero(rng.random(8) < 0.3)) for _ in range(20)]
    tru = [tuple(np.flatnonzero(rng.random(8) < 0.3)) for _ in range(20)]
    perm = rng.permutation(8)
    relabel = lambda sets: [tuple(int(perm[i]) for i in s) for s in sets]  # noqa: E731
    assert compute_detection_stats(det, tru, [8] * 20) == compute_detection_stats(relabel(det), relabel(tru), [8] * 20)


def test_rmse_excludes_nan():
    assert rmse([1.0, 3.0, math.nan]) == pytest.approx(math.sqrt(2.0))
    assert math.isnan(rmse([math.nan]))


def test_header_only_csv(tmp_path):
    cfg = ExperimentConfig()
    path = tmp_path / "e.csv"
    emit_csv(ExperimentResult(cfg, [], []), path)
    assert path.read_bytes() == (",".join(CSV_HEADER) + "\n").encode()
    assert read_csv(path) == []


def test_csv_rows_and_round_trip(tmp_path):
    cfg = ExperimentConfig(sweep="Delta", values=(0.0, 10.0, 20.0), estimators=("sdp", "ls_baseline"), **SMALL)
    res = run_experiment(cfg)
    path = tmp_path / "r.csv"
    emit_csv(res, path)
    text = path.read_text(encoding="utf-8")
    assert len(text.splitlines()) == 1 + 6
    assert "\r" not in text
    back = read_csv(path)
    for a, b in zip(back, res.summaries):
        for k in CSV_HEADER:
            va, vb = getattr(a, k), getattr(b, k)
            assert (isinstance(va, float) and math.isnan(va) and math.isnan(vb)) or va == vb


def test_csv_bytes_deterministic(tmp_path):
    cfg = ExperimentConfig(values=(5.0, 15.0), estimators=("sdp", "grid_oracle", "ls_baseline"), grid_res=51, **SMALL)
    a = csv_text(run_experiment(cfg).summaries)
    b = csv_text(run_experiment(cfg).summaries)
    assert a == b


def test_parallel_matches_serial():
    cfg = ExperimentConfig(values=(10.0,), **SMALL)
    a = run_experiment(cfg)
    b = run_experiment(ExperimentConfig(values=(10.0,), jobs=2, **SMALL))
    assert csv_text(a.summaries) == csv_text(b.summaries)


def _digest(s, obs):
    h = hashlib.sha256(s.to_json().encode())
    h.update(np.ascontiguousarray(obs.samples).tobytes())
    h.update(np.ascontiguousarray(obs.medians).tobytes())
    return h.hexdigest()


def test_shared_realization(monkeypatch):
    seen = {}
    real = bench._estimate

    def spy(cfg, est, s, obs, sigma):
        seen.setdefault(id(s), set()).add((est, _digest(s, obs), id(obs)))
        return real(cfg, est, s, obs, sigma)

    monkeypatch.setattr(bench, "_estimate", spy)
    run_experiment(ExperimentConfig(values=(10.0,), estimators=("sdp", "grid_oracle", "ls_baseline"), grid_res=21, **SMALL))
    assert len(seen) == 6
    for calls in seen.values():
        assert {e for e, _, _ in calls} == {"sdp", "grid_oracle", "ls_baseline"}
        assert len({(h, o) for _, h, o in calls}) == 1


def test_sweep_shares_streams():
    cfg = ExperimentConfig(values=(5.0, 15.0), **SMALL)
    s5, o5 = realize(cfg, 5.0, 1, 2)
    s15, o15 = realize(cfg, 15.0, 1, 2)
    assert s5.to_json() == s15.to_json()
    np.testing.assert_allclose((o5.samples - s5.distances()[:, None] - s5.deltas[:, None]) * 3, o15.samples - s15.distances()[:, None] - s15.deltas[:, None], atol=1e-9)


def test_failures_flagged_and_excluded(monkeypatch):
    calls = {"n": 0}
    real = bench.run_ccp

    def sometimes(*a, **k):
        calls["n"] += 1
        if calls["n"] % 2:
            raise ValueError("forced")
        return real(*a, **k)

    monkeypatch.setattr(bench, "run_ccp", sometimes)
    res = run_experiment(ExperimentConfig(values=(10.0,), estimators=("sdp",), **SMALL))
    (s,) = res.summaries
    assert s.n_trials == 6 and s.n_failures == 3
    ok = [r for r in res.records if not r.failed]
    assert s.rmse_m == pytest.approx(rmse(r.sq_error for r in ok))
    assert res.failure_rate() == 0.5


@pytest.mark.parametrize(
    "kw",
    [
        dict(values=()),
        dict(sweep="K"),
        dict(n_deployments=0),
        dict(n_choices=0),
        dict(estimators=("bogus",)),
        dict(sweep="sigma", values=(0.0,)),
        dict(sweep="N", values=(2,)),
    ],
)
def test_invalid_config(kw):
    with pytest.raises(ConfigError):
        ExperimentConfig(**kw).validate()


def test_bootstrap_gain_detects_clear_improvement():
    rng = np.random.default_rng(1)
    b = rng.exponential(4.0, 400)
    a = 0.5 * b
    est, lo, hi = bootstrap_gain(a, b)
    assert est == pytest.approx(1 - math.sqrt(0.5))
    assert lo == pytest.approx(est) and hi == math.inf


def _rmse_se(sq):
    sq = np.asarray([v for v in sq if not math.isnan(v)])
    r = math.sqrt(sq.mean())
    return r, sq.std(ddof=1) / (2 * r * math.sqrt(sq.size))


@pytest.mark.slow
def test_sdp_rmse_grows_with_sigma():
    cfg = ExperimentConfig(sweep="sigma", values=(5.0, 10.0, 15.0), estimators=("sdp",), seed=31)
    res = run_experiment(cfg)
    pts = [_rmse_se(r.sq_error for r in res.records_for("sdp", v)) for v in cfg.values]
    drops = [(a, b) for a, b in zip(pts, pts[1:]) if b[0] < a[0]]
    assert len(drops) <= 1
    for (ra, sa), (rb, sb) in drops:
        assert ra - rb <= 2 * math.hypot(sa, sb)


@pytest.mark.slow
def test_grid_oracle_beats_ls_under_attack():
    cfg = ExperimentConfig(values=(15.0,), delta=20.0, estimators=("grid_oracle", "ls_baseline"), seed=32)
    res = run_experiment(cfg)
    g = [r.sq_error for r in res.records_for("grid_oracle")]
    ls = [r.sq_error for r in res.records_for("ls_baseline")]
    _, lo, _ = bootstrap_gain(g, ls, confidence=0.95, seed=32)
    assert lo > 0.0
