import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from secloc.measurement import (
    RangeObservations,
    aggregate_median,
    dump_instance,
    load_instance,
    median_rows,
    sample_ranges,
)
from secloc.scenario import Scenario, ScenarioConfig, assign_attackers, generate_deployment, make_rng

finite = st.floats(-1e6, 1e6, allow_nan=False)


def test_noiseless_is_exact_distance(square6):
    obs = sample_ranges(square6, 0.0, 5, make_rng(0))
    np.testing.assert_array_equal(obs.samples, np.repeat(square6.distances()[:, None], 5, axis=1))


def test_single_anchor_with_bias():
    s = Scenario(anchors=np.array([[0.0, 0.0]]), target=np.array([3.0, 4.0]), deltas=np.array([2.0]))
    obs = sample_ranges(s, 0.0, 4, make_rng(0))
    np.testing.assert_array_equal(obs.samples, 7.0)
    np.testing.assert_array_equal(obs.medians, [7.0])


def test_sample_std_matches_sigma():
    s = generate_deployment(ScenarioConfig(n=10), make_rng(1))
    rng = make_rng(2)
    stds = [sample_ranges(s, 15.0, 10, rng).samples.std(axis=1, ddof=1) for _ in range(10_000)]
    assert np.sqrt(np.mean(np.square(stds))) == pytest.approx(15.0, rel=0.03)


def test_per_link_sigma():
    s = generate_deployment(ScenarioConfig(n=4), make_rng(1))
    obs = sample_ranges(s, np.array([0.0, 0.0, 1.0, 0.0]), 50, make_rng(2))
    assert np.all(np.ptp(obs.samples[[0, 1, 3]], axis=1) == 0)
    assert obs.samples[2].std() > 0


def test_negative_samples_kept():
    s = Scenario(anchors=np.array([[0.0, 0.0]]), target=np.array([0.1, 0.0]))
    obs = sample_ranges(s, 5.0, 200, make_rng(0))
    assert np.any(obs.samples < 0)


def test_median_conventions():
    assert median_rows(np.array([[1.0, 2.0, 3.0]]))[0] == 2.0
    assert median_rows(np.array([[1.0, 2.0, 3.0, 10.0]]))[0] == 2.5


def _sort_and_pick(row):
    r = sorted(row)
    k = len(r)
    return r[k // 2] if k % 2 else 0.5 * (r[k // 2 - 1] + r[k // 2])


def test_median_matches_sort_oracle():
    rng = make_rng(3)
    rows = rng.normal(size=(50, 10))
    obs = RangeObservations(rows, median_rows(rows), 1.0)
    np.testing.assert_array_equal(aggregate_median(obs), [_sort_and_pick(r) for r in rows])


@given(hnp.arrays(float, st.tuples(st.integers(1, 5), st.integers(1, 12)), elements=finite), st.randoms())
def test_median_permutation_invariant_and_bounded(rows, rnd):
    m = median_rows(rows)
    perm = rows.copy()
    for r in perm:
        rnd.shuffle(r)
    np.testing.assert_array_equal(median_rows(perm), m)
    assert np.all(m >= rows.min(axis=1)) and np.all(m <= rows.max(axis=1))


def test_median_unbiased_without_attack():
    s = generate_deployment(ScenarioConfig(n=6), make_rng(1))
    rng = make_rng(9)
    trials, sigma, k = 10_000, 15.0, 10
    err = np.array([sample_ranges(s, sigma, k, rng).medians - s.distances() for _ in range(trials)])
    tol = 3 * sigma / np.sqrt(trials * 2 * k / np.pi)
    assert np.all(np.abs(err.mean(axis=0)) < tol)


def test_instance_round_trip():
    s = assign_attackers(generate_deployment(ScenarioConfig(n=5, seed=2), make_rng(2)), 20.0, make_rng(3))
    obs = sample_ranges(s, 1.5, 3, make_rng(4))
    s2, obs2 = load_instance(dump_instance(s, obs))
    np.testing.assert_array_equal(obs2.samples, obs.samples)
    np.testing.assert_array_equal(obs2.medians, obs.medians)
    assert obs2.sigma == 1.5
    assert s2.attackers == s.attackers
