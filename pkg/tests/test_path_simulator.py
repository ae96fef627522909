import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import norm

from reflectlab.errors import ConfigError, UnsupportedModelError
from reflectlab.levy_models import BM1, CL1, KOU1, ExpJumps, LevyModel
from reflectlab.path_simulator import (
    SimConfig,
    importance_sample_exit,
    jump_events,
    monte_carlo,
    rate_scale,
    sample_functionals,
    sample_running_sup,
    simulate_batch,
    straddle_probability,
)
from reflectlab.stats_verify import EmpiricalDistribution, dkw_two_sample_radius, ks_distance, ks_two_sample

from strategies import cramer_models

# two-sided model with positive drift: passages creep and jumps go both ways
CREEP = LevyModel(drift=0.5, up=ExpJumps(0.5, 2.0), down=ExpJumps(1.0, 1.0))


def brute_force(model, t, x, level, seed, index, step=1e-4):
    """Rebuild Y on a fixed grid joined with the jump epochs and read off the functionals."""
    times, sizes = jump_events(model, t, seed, index)
    grid = np.arange(0.0, t, step)
    # each jump contributes a pre-jump and a post-jump point
    pts = np.concatenate([grid, times, times, [t]])
    post = np.concatenate([np.zeros(grid.size), np.zeros(times.size), np.ones(times.size), [1.0]])
    order = np.lexsort((post, pts))
    pts, post = pts[order], post[order]
    cum = np.concatenate([[0.0], np.cumsum(sizes)])
    k = np.searchsorted(times, pts, side="left") + (post > 0) * (np.isin(pts, times))
    k = np.where(pts >= t, times.size, k)
    X = model.drift * pts + cum[k]
    Y = X - np.minimum(0.0, np.minimum.accumulate(X))
    above = np.nonzero(Y > level)[0]
    tau = z = math.nan
    if above.size:
        j = above[0]
        if pts[j] == pts[j - 1]:
            tau, z = pts[j], Y[j] - level
        else:
            tau = pts[j - 1] + (level - Y[j - 1]) / model.drift
            z = 0.0
    return Y[-1], Y.max() - x, tau, z


@pytest.mark.parametrize("model", [CL1, CREEP], ids=["CL-1", "creeping"])
def test_reflection_matches_brute_force(model):
    t, x, off, seed = 20.0, 1.5, 0.5, 11
    cfg = SimConfig(t=t, x=x, y_offset=off, n=100, seed=seed)
    b = simulate_batch(model, cfg)
    for i in range(100):
        y_t, m, tau, z = brute_force(model, t, x, x + off, seed, i)
        assert b.y_t[i] == pytest.approx(y_t, abs=1e-9)
        assert b.m[i] == pytest.approx(m, abs=1e-9)
        if math.isnan(tau):
            assert math.isnan(b.tau[i]) and math.isnan(b.z[i])
        else:
            assert b.tau[i] == pytest.approx(tau, abs=1e-9)
            assert b.z[i] == pytest.approx(z, abs=1e-9)


def test_no_jump_path_reflects_to_zero():
    t = 0.5
    idx = next(i for i in range(1000) if jump_events(CL1, t, 0, i)[0].size == 0)
    s = sample_functionals(CL1, SimConfig(t=t, x=3.0, n=1000), idx)
    assert s.y_t == 0.0
    assert s.m == -3.0
    assert s.straddle is False


def test_determinism():
    cfg = SimConfig(t=50.0, x=4.0, y_offset=1.0, n=200, seed=9, horizon=500.0)
    a = simulate_batch(CL1, cfg)
    b = simulate_batch(CL1, cfg)
    for f in ("y_t", "z", "m", "tau", "straddle"):
        np.testing.assert_array_equal(getattr(a, f), getattr(b, f))
    assert sample_functionals(CL1, cfg, 17) == a.sample(17)


@pytest.mark.parametrize("regen", [False, True])
def test_worker_count_and_ranges_do_not_matter(regen):
    cfg = SimConfig(t=30.0, x=3.0, y_offset=1.0, n=5000, seed=2, horizon=60.0, regenerate=regen)
    one = simulate_batch(CL1, cfg, workers=1)
    many = simulate_batch(CL1, cfg, workers=4)
    for f in ("y_t", "z", "m", "tau", "straddle"):
        np.testing.assert_array_equal(getattr(one, f), getattr(many, f))
    left = monte_carlo(CL1, cfg, stop=2100)
    right = monte_carlo(CL1, cfg, start=2100)
    whole = monte_carlo(CL1, cfg, workers=3)
    merged = left.merge(right)
    assert merged.n == whole.n and merged.straddle_count == whole.straddle_count
    np.testing.assert_array_equal(merged.z.sorted_values, whole.z.sorted_values)
    np.testing.assert_array_equal(merged.counts.yzm, whole.counts.yzm)


@settings(max_examples=25)
@given(cramer_models(), st.floats(0.5, 5.0), st.floats(0.2, 3.0), st.floats(0.0, 2.0), st.integers(0, 2**32))
def test_pathwise_invariants(model, t, x, off, seed):
    step = 1e-2 * min(1.0, 1.0 / rate_scale(model))
    cfg = SimConfig(t=t, x=x, y_offset=off, n=40, seed=seed, step=step)
    b = simulate_batch(model, cfg)
    assert np.all(b.y_t >= 0)
    assert np.all(b.m + x >= b.y_t - 1e-12)
    assert np.all(b.m + x >= 0)
    seen = ~np.isnan(b.tau)
    assert np.array_equal(seen, ~np.isnan(b.z))
    assert np.all(b.z[seen] >= 0)
    assert np.all(b.tau[seen] <= cfg.horizon)
    early = seen & (b.tau <= t)
    assert np.all(b.m[early] >= off + b.z[early] - 1e-9)


def test_passage_law_shapes():
    cl = simulate_batch(CL1, SimConfig(t=20.0, x=2.0, n=2000, seed=1, horizon=2000.0))
    z = cl.z[~np.isnan(cl.z)]
    assert z.size > 500 and np.all(z > 0)
    bm = simulate_batch(BM1, SimConfig(t=5.0, x=1.0, n=300, seed=1, horizon=200.0, step=1e-3))
    z = bm.z[~np.isnan(bm.z)]
    assert z.size > 50 and np.all(z == 0)


def test_overshoot_is_memoryless_for_cl1():
    cfg = SimConfig(t=5.0, x=3.0, n=20_000, seed=5, horizon=5.0, regenerate=True)
    b = simulate_batch(CL1, cfg, workers=4)
    emp = EmpiricalDistribution.from_samples(b.z)
    assert emp.n == cfg.n
    assert ks_distance(emp, lambda v: 1 - np.exp(-np.asarray(v))) < dkw_two_sample_radius(cfg.n, cfg.n) / 2


def test_reflected_brownian_motion_law():
    t, n = 1.0, 4000
    b = simulate_batch(BM1, SimConfig(t=t, x=5.0, n=n, seed=3, step=1e-4), workers=4)
    mu = BM1.drift

    def cdf(y):
        y = np.maximum(np.asarray(y, dtype=float), 0.0)
        return norm.cdf((y - mu * t) / math.sqrt(t)) - np.exp(2 * mu * y) * norm.cdf((-y - mu * t) / math.sqrt(t))

    d = ks_distance(EmpiricalDistribution.from_samples(b.y_t), cdf)
    # sampling radius plus the grid bias of a discretely monitored maximum
    assert d < dkw_two_sample_radius(n, n) / 2 + 0.58 * math.sqrt(1e-4) * 1.2


def test_duality_with_running_supremum():
    n, t = 20_000, 10.0
    y = simulate_batch(CL1, SimConfig(t=t, x=5.0, n=n, seed=8), workers=4).y_t
    s = sample_running_sup(CL1, t, n, seed=9, workers=4)
    d = ks_two_sample(EmpiricalDistribution.from_samples(y), EmpiricalDistribution.from_samples(s))
    assert d < dkw_two_sample_radius(n, n)


def test_importance_sampling_unbiased():
    tilted = importance_sample_exit(CL1, 2.0, 2.0, 20_000, seed=1, workers=4)
    plain = importance_sample_exit(CL1, 2.0, 2.0, 20_000, seed=2, theta=0.0, workers=4)
    q = norm.ppf(0.995)
    assert abs(tilted.estimate - plain.estimate) < q * (tilted.std_error + plain.std_error)
    assert tilted.std_error < plain.std_error
    again = importance_sample_exit(CL1, 2.0, 2.0, 20_000, seed=1, workers=2)
    assert again == tilted
    assert importance_sample_exit(CL1, 0.0, 1.0, 10, seed=0) == (1.0, 0.0)
    with pytest.raises(ConfigError):
        importance_sample_exit(CL1, 1.0, 0.0, 10, seed=0)


def test_importance_sampling_with_diffusion():
    tilted = importance_sample_exit(KOU1, 1.0, 1.0, 4000, seed=1, step=1e-3, workers=4)
    plain = importance_sample_exit(KOU1, 1.0, 1.0, 4000, seed=2, theta=0.0, step=1e-3, workers=4)
    assert abs(tilted.estimate - plain.estimate) < 3.5 * (tilted.std_error + plain.std_error)


def test_straddle():
    with pytest.raises(UnsupportedModelError):
        straddle_probability(KOU1, 10.0, 2.0, 10, seed=0)
    assert straddle_probability(CL1, 5.0, 60.0, 2000, seed=0).estimate == 0.0
    assert straddle_probability(CL1, 50.0, 5.0, 2000, seed=0, workers=4).estimate > 0.0


def test_config_validation():
    for kw in ({"t": 0.0, "x": 1.0}, {"t": 1.0, "x": -1.0}, {"t": 1.0, "x": 1.0, "n": 0},
               {"t": 1.0, "x": 1.0, "seed": -1}, {"t": 1.0, "x": 1.0, "step": 0.0},
               {"t": 2.0, "x": 1.0, "horizon": 1.0}, {"t": 1.0, "x": 1.0, "y_offset": -1.0}):
        with pytest.raises(ConfigError):
            SimConfig(**kw)
    with pytest.raises(UnsupportedModelError):
        SimConfig(t=1.0, x=1.0, step=1e-3, regenerate=True).check_for(BM1)
    with pytest.raises(ConfigError):
        SimConfig(t=1.0, x=1.0, step=0.1).check_for(BM1)
    with pytest.raises(ConfigError):
        simulate_batch(CL1, SimConfig(t=1.0, x=1.0, n=10), 5, 20)
    with pytest.raises(ConfigError):
        sample_functionals(CL1, SimConfig(t=1.0, x=1.0, n=10), 10)
