import math

import numpy as np
import pytest

from nashlab.model import get_model
from nashlab.montecarlo import (
    Exterior,
    Interval,
    SimulationConfig,
    StationarySampler,
    clopper_pearson,
    deviation_experiment,
    loglog_slope,
    power_law_mle,
    sample_hitting_moments,
    simulate_path,
)


def test_config_validation():
    with pytest.raises(ValueError):
        SimulationConfig(get_model("BM2"), dt=0.0, n_paths=10)
    with pytest.raises(ValueError):
        SimulationConfig(get_model("BM2"), dt=0.1, n_paths=0)


def test_deterministic_flow_without_noise():
    cfg = SimulationConfig(get_model("OU"), dt=1e-3, n_paths=4, noise_scale=0.0)
    out = simulate_path(cfg, 1.0, 1.0)
    assert np.allclose(out.final, math.exp(-1.0), rtol=1e-3)


def test_reflection_keeps_paths_inside():
    cfg = SimulationConfig(get_model("BM2"), dt=1e-2, n_paths=500, truncation=1.0, seed=3)
    out = simulate_path(cfg, 0.0, 5.0)
    assert out.minimum.min() >= -1 and out.maximum.max() <= 1


def test_hitting_moments_bm2_small():
    cfg = SimulationConfig(get_model("BM2"), dt=1e-3, n_paths=20000, seed=11)
    est, se = sample_hitting_moments(cfg, Interval(0, 1), 0.5).moments[1]
    assert abs(est - 1 / 8) < 4 * se


def test_bridge_reduces_bias():
    base = dict(model=get_model("BM2"), dt=1e-2, n_paths=20000, seed=5)
    naive = sample_hitting_moments(SimulationConfig(bridge=False, **base), Interval(0, 1), 0.5).moments[1][0]
    bridged = sample_hitting_moments(SimulationConfig(bridge=True, **base), Interval(0, 1), 0.5).moments[1][0]
    assert abs(bridged - 1 / 8) < abs(naive - 1 / 8)


def test_bridge_probability_regions():
    x, y = np.array([0.1]), np.array([0.1])
    assert Interval(0, 1).bridge_probability(x, y, 1e-4)[0] == pytest.approx(math.exp(-2 * 0.01 / 1e-4))
    assert Exterior(-1, 1).bridge_probability(np.array([1.1]), np.array([1.1]), 0.01)[0] == pytest.approx(math.exp(-2))


def test_censoring():
    cfg = SimulationConfig(get_model("BM2"), dt=1e-3, n_paths=100, max_time=1e-3)
    assert sample_hitting_moments(cfg, Interval(0, 1), 0.5).censored_fraction == 1.0


def test_workers_do_not_change_results():
    base = dict(model=get_model("BM2"), dt=1e-3, n_paths=3000, seed=9, block_size=256)
    one = sample_hitting_moments(SimulationConfig(workers=1, **base), Interval(0, 1), 0.3).tau
    four = sample_hitting_moments(SimulationConfig(workers=4, **base), Interval(0, 1), 0.3).tau
    assert np.array_equal(one, four)


def test_stationary_sampler_law():
    sampler = StationarySampler(get_model("OU"), (-8, 8), cells=20000)
    x = sampler.sample(np.random.default_rng(0).random(50000))
    assert np.mean(x) == pytest.approx(0, abs=0.02)
    assert np.var(x) == pytest.approx(1.0, rel=0.03)
    assert sampler.probability(Interval(-1, 1)) == pytest.approx(0.6827, abs=1e-3)


def test_deviation_empty_cells():
    m = get_model("HT(4)")
    cfg = SimulationConfig(m, dt=0.05, n_paths=200, seed=1, truncation=20.0)
    exp = deviation_experiment(cfg, (-1, 1), 1, (0.1, 0.3), (1.0, 2.0), StationarySampler(m, (-20, 20), 2000, (-1, 1)))
    assert all(c.count == 0 for c in exp.cells(0.3))


def test_clopper_pearson_edges():
    assert clopper_pearson(0, 100)[0] == 0.0
    assert clopper_pearson(100, 100)[1] == 1.0
    lo, hi = clopper_pearson(5, 100)
    assert lo < 0.05 < hi


def test_slope_fits():
    t = np.array([10.0, 30.0, 100.0])
    assert loglog_slope(t, t**-2.0)[0] == pytest.approx(-2.0)
    assert math.isnan(loglog_slope(t, [1e-3, 0, 0])[0])
    mle, upper = power_law_mle(t, [5000, 555, 50], [10**6] * 3)
    assert mle == pytest.approx(-2.0, abs=0.1) and upper >= mle
