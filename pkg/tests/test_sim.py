import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from offload_rl import presets
from offload_rl.cost import LinkSpec
from offload_rl.errors import ScenarioError
from offload_rl.sim import (
    Scenario, baseline_times, constant_trace, lognormal_params, make_bandwidth_schedule,
    noise_factors, step,
)


def scen(noise=0.0, rounds=10, iters=5, seed=0, **kw):
    return presets.heterogeneity_scenario(iterations=iters, rounds=rounds, noise=noise, seed=seed).replace(**kw)


def test_round_time_is_slowest_device():
    s = scen()
    obs = step(s, 0, s.native_strategy())
    assert obs.round_seconds == max(d.round_seconds for d in obs.devices)
    assert obs.round_seconds == pytest.approx(5 * 5.14)


def test_noiseless_native_equals_baseline():
    s = scen()
    obs = step(s, 3, s.native_strategy())
    base = baseline_times(s)
    for d in obs.devices:
        assert d.round_seconds == pytest.approx(base[d.device_id])


def test_overhead_added_once():
    s = scen(overhead_seconds=1.6)
    obs = step(s, 0, s.native_strategy())
    assert obs.round_seconds == pytest.approx(5 * 5.14 + 1.6)


def test_invalid_strategies():
    s = scen()
    with pytest.raises(ScenarioError):
        step(s, 0, (1, 1))
    with pytest.raises(ScenarioError):
        step(s, 0, (1, 1, 1, 1, 9))
    with pytest.raises(ScenarioError):
        step(s, 10, s.native_strategy())


def test_scenario_validation():
    s = scen()
    with pytest.raises(ScenarioError):
        s.replace(iterations_per_round=0)
    with pytest.raises(ScenarioError):
        s.replace(noise=-0.1)
    short = dict(s.bandwidth_trace)
    short["jetson"] = short["jetson"][:3]
    with pytest.raises(ScenarioError):
        s.replace(bandwidth_trace=short)
    with pytest.raises(ScenarioError):
        s.replace(devices=s.devices + s.devices[:1])


def test_noise_paired_across_strategies():
    s = scen(noise=0.05)
    quiet = s.replace(noise=0.0)
    for strategy in (s.native_strategy(), (4, 1, 2, 3, 1)):
        noisy, clean = step(s, 4, strategy), step(quiet, 4, strategy)
        factors = [n.round_seconds / c.round_seconds for n, c in zip(noisy.devices, clean.devices)]
        np.testing.assert_allclose(factors, noise_factors(s, 4), rtol=1e-12)
    assert not np.array_equal(noise_factors(s, 4), noise_factors(s, 5))


def test_noise_statistics():
    s = scen(noise=0.1, rounds=4000)
    f = np.concatenate([noise_factors(s, r) for r in range(4000)])
    n = len(f)
    assert abs(f.mean() - 1.0) < 3 * 0.1 / math.sqrt(n) * 1.5
    assert f.std() == pytest.approx(0.1, rel=0.05)
    assert np.all(f > 0)


def test_lognormal_params_mean_one():
    mu, sigma = lognormal_params(0.2)
    assert math.exp(mu + sigma**2 / 2) == pytest.approx(1.0)
    assert math.sqrt(math.exp(sigma**2) - 1) == pytest.approx(0.2)


def test_replay_is_bit_exact():
    s = scen(noise=0.05)
    a = [step(s, r, (4, 1, 1, 1, 1)) for r in range(10)]
    b = [step(s, r, (4, 1, 1, 1, 1)) for r in range(10)]
    assert a == b


def test_bandwidth_schedule():
    ids = ["a", "b"]
    tr = make_bandwidth_schedule(ids, 75e6, 10e6, [("a", 2, 3)], 6)
    ups = [l.uplink_bps for l in tr["a"]]
    assert ups == [75e6, 75e6, 10e6, 10e6, 75e6, 75e6]
    assert all(l.downlink_bps == 75e6 for l in tr["a"])
    assert all(l.uplink_bps == 75e6 for l in tr["b"])
    with pytest.raises(ScenarioError):
        make_bandwidth_schedule(ids, 75e6, 10e6, [("a", 0, 3), ("a", 3, 4)], 6)
    with pytest.raises(ScenarioError):
        make_bandwidth_schedule(ids, 75e6, 10e6, [("z", 0, 1)], 6)


def test_comparison_schedule_matches_slots():
    s = presets.comparison_scenario()
    for dev, start, end in presets.DROP_SLOTS:
        ups = [s.link(dev, r).uplink_bps for r in range(100)]
        assert all(u == 10e6 for u in ups[start:end + 1])
        assert all(u == 75e6 for i, u in enumerate(ups) if not start <= i <= end)


@settings(max_examples=30)
@given(st.lists(st.integers(1, 4), min_size=5, max_size=5), st.integers(0, 9))
def test_any_valid_strategy_positive_times(strategy, r):
    s = scen(noise=0.05)
    obs = step(s, r, strategy)
    assert obs.strategy == tuple(strategy)
    assert all(d.round_seconds > 0 for d in obs.devices)
