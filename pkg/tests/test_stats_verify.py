import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy import stats

from reflectlab.stats_verify import (
    DEFAULT_GRID,
    EmpiricalDistribution,
    JointCounts,
    dkw_radius,
    dkw_two_sample_radius,
    independence_gap,
    ks_distance,
    ks_two_sample,
    merge_all,
)

samples = arrays(np.float64, st.integers(1, 200), elements=st.floats(-50, 50, allow_nan=False))


def exp_cdf(x):
    return 1.0 - np.exp(-np.maximum(np.asarray(x, dtype=float), 0.0))


def test_dkw_values():
    assert dkw_radius(100_000) == pytest.approx(0.0051468, rel=1e-4)
    assert dkw_radius(1, 0.5) == pytest.approx(math.sqrt(math.log(4.0) / 2.0))
    for bad in (0.0, 1.0, 1.0 - 1e-13):
        with pytest.raises(ValueError):
            dkw_radius(10, bad)
    with pytest.raises(ValueError):
        dkw_radius(0)
    assert dkw_two_sample_radius(100, 100) == pytest.approx(2 * dkw_radius(100, 0.995))


def test_ks_constant_against_exponential():
    # all mass at 0 versus Exp(1): the atom alone gives distance 1
    emp = EmpiricalDistribution.from_samples(np.zeros(10), atom_at_zero=True)
    assert ks_distance(emp, exp_cdf) == pytest.approx(1.0)
    emp = EmpiricalDistribution.from_samples(np.zeros(10))
    assert ks_distance(emp, exp_cdf) == pytest.approx(1.0)


def test_ks_matches_scipy():
    x = np.random.default_rng(3).exponential(size=500)
    emp = EmpiricalDistribution.from_samples(x)
    assert ks_distance(emp, exp_cdf) == pytest.approx(stats.kstest(x, "expon").statistic, abs=1e-12)


def test_two_sample_matches_scipy():
    g = np.random.default_rng(4)
    a, b = g.normal(size=300), g.normal(0.2, size=200)
    got = ks_two_sample(EmpiricalDistribution.from_samples(a), EmpiricalDistribution.from_samples(b))
    assert got == pytest.approx(stats.ks_2samp(a, b).statistic, abs=1e-12)


@given(samples)
def test_ks_invariant_under_monotone_map(x):
    emp = EmpiricalDistribution.from_samples(x)
    d1 = ks_distance(emp, stats.norm.cdf)
    emp2 = EmpiricalDistribution.from_samples(np.exp(x / 10.0))
    d2 = ks_distance(emp2, lambda v: stats.norm.cdf(10.0 * np.log(v)))
    assert d1 == pytest.approx(d2, abs=1e-9)


@given(samples)
def test_ks_self_consistency(x):
    emp = EmpiricalDistribution.from_samples(x)
    # the ECDF against itself: only the left limits differ, by at most the largest tie mass
    _, counts = np.unique(x, return_counts=True)
    assert ks_distance(emp, emp.cdf) <= counts.max() / x.size + 1e-12
    assert ks_two_sample(emp, emp) == 0.0


@given(samples, samples)
def test_empirical_merge(a, b):
    ea = EmpiricalDistribution.from_samples(a, atom_at_zero=True)
    eb = EmpiricalDistribution.from_samples(b, atom_at_zero=True)
    whole = EmpiricalDistribution.from_samples(np.concatenate([a, b]), atom_at_zero=True)
    m = ea.merge(eb)
    assert m.n == whole.n and m.atom_at_zero_count == whole.atom_at_zero_count
    np.testing.assert_array_equal(m.sorted_values, whole.sorted_values)


def test_nan_dropped_and_atom():
    emp = EmpiricalDistribution.from_samples([0.0, 0.0, 1.0, math.nan], atom_at_zero=True)
    assert emp.n == 3
    assert emp.atom_fraction == pytest.approx(2 / 3)
    assert emp.cdf(-0.1) == 0.0
    assert emp.cdf(0.0) == pytest.approx(2 / 3)
    with pytest.raises(ValueError):
        EmpiricalDistribution(np.array([2.0, 1.0]), 2)


def test_independent_inputs_small_gap():
    g = np.random.default_rng(5)
    n = 50_000
    y, z, m = g.exponential(size=n), g.exponential(size=n), g.gumbel(size=n)
    rep = independence_gap(JointCounts.from_samples(y, z, m))
    assert rep.gap < rep.dkw_radius
    assert rep.pair_gap < rep.dkw_radius


def test_comonotone_inputs_large_gap():
    u = np.random.default_rng(6).exponential(size=20_000)
    rep = independence_gap(JointCounts.from_samples(u, u, -u))
    assert rep.pair_gap > 0.1
    assert rep.gap > 0.05


def test_product_design_zero_gap():
    # full outer product of three marginal samples is exactly independent
    a, b, c = np.array([-2.0, 0.5, 2.0]), np.array([0.1, 0.9, 2.0]), np.array([-3.0, 1.0, 5.0])
    y, z, m = (v.ravel() for v in np.meshgrid(a, b, c, indexing="ij"))
    rep = independence_gap(JointCounts.from_samples(y, z, m))
    assert rep.gap == pytest.approx(0.0, abs=1e-15)
    assert rep.pair_gap == pytest.approx(0.0, abs=1e-15)


@given(st.lists(st.tuples(st.floats(-5, 5), st.floats(0, 5) | st.just(math.nan), st.floats(-5, 5)), min_size=2, max_size=80),
       st.integers(1, 79))
def test_joint_counts_merge_and_range(rows, cut):
    cut = min(cut, len(rows) - 1)
    y, z, m = (np.array(c) for c in zip(*rows))
    whole = JointCounts.from_samples(y, z, m)
    parts = merge_all([JointCounts.from_samples(y[:cut], z[:cut], m[:cut]),
                       JointCounts.from_samples(y[cut:], z[cut:], m[cut:])])
    assert parts.n == whole.n and parts.n_absent == whole.n_absent
    for f in ("y_gt", "z_gt", "m_le", "yz", "ym", "zm", "yzm"):
        np.testing.assert_array_equal(getattr(parts, f), getattr(whole, f))
    if whole.n:
        rep = independence_gap(whole)
        assert all(0.0 <= p <= 1.0 for p in rep.joint_probs + rep.product_probs)
        assert len(rep.grid) == 27


def test_joint_counts_guards():
    with pytest.raises(ValueError):
        JointCounts.from_samples([1.0], [1.0], [1.0], grid=((), (1.0,), (1.0,)))
    with pytest.raises(ValueError):
        independence_gap(JointCounts.empty(DEFAULT_GRID))
    with pytest.raises(ValueError):
        JointCounts.empty().merge(JointCounts.empty(((1.0,), (1.0,), (1.0,))))
