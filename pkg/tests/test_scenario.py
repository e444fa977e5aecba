import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from secloc.scenario import (
    ConfigError,
    Scenario,
    ScenarioConfig,
    assign_attackers,
    generate_deployment,
    make_rng,
)


def test_deployment_inside_area():
    s = generate_deployment(ScenarioConfig(n=10, q=2, b=100.0, seed=7), make_rng(7))
    assert s.anchors.shape == (10, 2)
    assert s.target.shape == (2,)
    assert np.all((s.anchors >= 0) & (s.anchors <= 100))
    assert np.all((s.target >= 0) & (s.target <= 100))
    assert s.attackers == ()
    assert np.all(s.deltas == 0)


def test_tiny_area_bounds_pairwise_distance():
    s = generate_deployment(ScenarioConfig(n=3, q=2, b=0.001), make_rng(1))
    pts = np.vstack([s.anchors, s.target])
    dist = np.linalg.norm(pts[:, None] - pts[None], axis=2)
    assert dist.max() <= np.sqrt(2) * 0.001


def test_same_seed_is_bit_identical():
    cfg = ScenarioConfig(n=8, q=3, b=50.0, delta_cap=20.0)
    a = assign_attackers(generate_deployment(cfg, make_rng(5)), 20.0, make_rng(5, 1))
    b = assign_attackers(generate_deployment(cfg, make_rng(5)), 20.0, make_rng(5, 1))
    assert a.to_json() == b.to_json()


def test_target_not_on_top_of_anchor():
    for seed in range(50):
        s = generate_deployment(ScenarioConfig(n=12, b=100.0), make_rng(seed))
        assert np.min(s.distances()) >= 1e-3 * 100.0


@pytest.mark.parametrize(
    "cfg",
    [
        ScenarioConfig(n=2, q=2),
        ScenarioConfig(n=3, q=3),
        ScenarioConfig(n=5, b=0.0),
        ScenarioConfig(n=5, b=-1.0),
        ScenarioConfig(n=5, q=4),
        ScenarioConfig(n=5, delta_cap=-1.0),
    ],
)
def test_invalid_config_rejected(cfg):
    with pytest.raises(ConfigError):
        generate_deployment(cfg, make_rng(0))


def test_zero_cap_gives_harmless_attackers():
    s = generate_deployment(ScenarioConfig(n=10), make_rng(3))
    for k in range(20):
        a = assign_attackers(s, 0.0, make_rng(3, k))
        assert len(a.attackers) >= 1
        assert np.all(a.deltas == 0)


def test_attacker_count_range_n10():
    s = generate_deployment(ScenarioConfig(n=10), make_rng(0))
    counts = {len(assign_attackers(s, 20.0, make_rng(0, k)).attackers) for k in range(500)}
    assert counts == {1, 2, 3, 4, 5}


def test_attacker_count_uniform_chi_square():
    s = generate_deployment(ScenarioConfig(n=10), make_rng(0))
    counts = np.bincount(
        [len(assign_attackers(s, 20.0, make_rng(1, k)).attackers) for k in range(5000)], minlength=6
    )[1:]
    assert stats.chisquare(counts).pvalue > 1e-3


def test_mean_attack_magnitude_is_half_cap():
    # E|delta| = E[scale] * 1 with scale ~ U[0, Delta]
    s = generate_deployment(ScenarioConfig(n=10), make_rng(0))
    rng = make_rng(99)
    mags = []
    while len(mags) < 100_000:
        a = assign_attackers(s, 20.0, rng)
        mags.extend(np.abs(a.deltas[list(a.attackers)]))
    assert np.mean(mags) == pytest.approx(10.0, rel=0.05)


def test_signs_balanced():
    s = generate_deployment(ScenarioConfig(n=10), make_rng(0))
    rng = make_rng(4)
    signs = []
    for _ in range(2000):
        a = assign_attackers(s, 20.0, rng)
        signs.extend(np.sign(a.deltas[list(a.attackers)]))
    assert abs(np.mean(signs)) < 0.05


@settings(max_examples=60, deadline=None)
@given(
    n=st.integers(3, 16),
    q=st.sampled_from([2, 3]),
    cap=st.floats(0.0, 100.0),
    seed=st.integers(0, 2**32),
)
def test_attacker_invariants(n, q, cap, seed):
    if n < q + 1:
        n = q + 1
    s = generate_deployment(ScenarioConfig(n=n, q=q), make_rng(seed))
    a = assign_attackers(s, cap, make_rng(seed, 1))
    assert 1 <= len(a.attackers) <= n // 2
    assert set(np.flatnonzero(a.deltas)) <= set(a.attackers)
    np.testing.assert_array_equal(a.anchors, s.anchors)


def test_json_round_trip_keys():
    s = assign_attackers(generate_deployment(ScenarioConfig(n=6, seed=3), make_rng(3)), 20.0, make_rng(4))
    doc = json.loads(s.to_json())
    assert set(doc) == {"n", "q", "b", "anchors", "target", "attackers", "deltas", "seed"}
    back = Scenario.from_json(s.to_json())
    np.testing.assert_array_equal(back.anchors, s.anchors)
    np.testing.assert_array_equal(back.deltas, s.deltas)
    assert back.attackers == s.attackers
    assert back.seed == 3
