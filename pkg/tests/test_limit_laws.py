import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from reflectlab import _kernels as K
from reflectlab.errors import DivergentTailError, OscillationError, ReflectLabError
from reflectlab.ladder import LadderFactorization, RationalBernstein, wh_factorize
from reflectlab.levy_models import BM1, CL1, KOU1, ExpJumps, LevyModel, cramer_gamma
from reflectlab.limit_laws import (
    LimitLawSet,
    downward_passage_transform,
    gumbel_cdf,
    gumbel_constant,
    gumbel_quantile,
    joint_yz_laplace,
    laplace_invert_cdf,
    limit_law_set,
    overshoot_exit_asym,
    stehfest_weights,
    tilted_overshoot_transform,
    triple_transform,
    two_sided_exit_asym,
    y_inf_atom,
    y_inf_laplace,
    y_inf_tail,
    z_inf_atom,
    z_inf_laplace,
    z_inf_tail,
)
from reflectlab.path_simulator import _params
from reflectlab.rng import STATE_SIZE, rng_init

from strategies import cramer_models


@st.composite
def cl_models(draw):
    """Negative drift with upward Exp jumps only."""
    rate = draw(st.floats(0.2, 3.0))
    alpha = draw(st.floats(0.3, 4.0))
    drift = -draw(st.floats(0.2, 5.0))
    if rate / alpha >= 0.95 * abs(drift):
        drift = -rate / alpha * draw(st.floats(1.1, 3.0))
    return LevyModel(drift=drift, up=ExpJumps(rate, alpha))


def test_cl1_values():
    L = limit_law_set(CL1)
    assert z_inf_laplace(L, 1.0) == pytest.approx(0.5)
    assert z_inf_atom(L) == 0.0
    x = np.array([0.0, 0.5, 3.0])
    np.testing.assert_allclose(z_inf_tail(L, x), np.exp(-x))
    np.testing.assert_allclose(y_inf_tail(L, x), 0.5 * np.exp(-0.5 * x))
    assert y_inf_atom(L) == pytest.approx(0.5)
    assert y_inf_laplace(L, 1.0) == pytest.approx(2.0 / 3.0)


def test_bm1_values():
    L = limit_law_set(BM1)
    assert z_inf_atom(L) == pytest.approx(1.0)
    assert z_inf_tail(L, 1.0) == 0.0
    assert y_inf_atom(L) == 0.0
    assert y_inf_tail(L, 0.7) == pytest.approx(math.exp(-1.4))


def test_kou1_values():
    L = limit_law_set(KOU1)
    assert z_inf_atom(L) == pytest.approx(2.0 / 3.0)
    assert z_inf_tail(L, 0.5) == pytest.approx(math.exp(-1.0) / 3.0)


@given(cl_models())
def test_stationary_law_pollaczek_khinchine(model):
    # geometric compound of Exp(alpha) ladder heights: P(Y > x) = rho e^{-(alpha - rate/|d|) x}
    L = limit_law_set(model)
    rho = model.up.rate / (model.up.decay * abs(model.drift))
    rate = model.up.decay - model.up.rate / abs(model.drift)
    for x in (0.0, 0.4, 2.5):
        assert y_inf_tail(L, x) == pytest.approx(rho * math.exp(-rate * x), rel=1e-9)
    assert y_inf_atom(L) == pytest.approx(1.0 - rho, rel=1e-9)


@given(cl_models(), st.floats(0.01, 5.0))
def test_memoryless_overshoot(model, v):
    L = limit_law_set(model)
    a = model.up.decay
    assert z_inf_laplace(L, v) == pytest.approx(a / (a + v), rel=1e-9)
    g = L.gamma
    # under the Cramér measure every overshoot is Exp(alpha - gamma)
    assert tilted_overshoot_transform(L, 1.3, v) == pytest.approx((a - g) / (a - g + v), rel=1e-9)


@given(cramer_models())
def test_total_mass(model):
    try:
        L = limit_law_set(model)
    except ReflectLabError:
        return
    assert z_inf_atom(L) + z_inf_tail(L, 0.0) == pytest.approx(1.0, abs=1e-9)
    assert y_inf_atom(L) + y_inf_tail(L, 0.0) == pytest.approx(1.0, abs=1e-9)
    assert z_inf_laplace(L, 0.0) == pytest.approx(1.0)
    assert z_inf_laplace(L, 1e9) == pytest.approx(z_inf_atom(L), abs=1e-6)
    assert joint_yz_laplace(L, 0.4, 0.9) == pytest.approx(y_inf_laplace(L, 0.4) * z_inf_laplace(L, 0.9))


def test_brownian_stationary_law():
    m = LevyModel(drift=-0.7, sigma=1.3)
    L = limit_law_set(m)
    rate = 2 * 0.7 / 1.3**2
    assert L.gamma == pytest.approx(rate)
    assert y_inf_tail(L, 1.1) == pytest.approx(math.exp(-rate * 1.1))


def test_gumbel():
    L = limit_law_set(CL1, 4.0)
    assert gumbel_constant(L) == pytest.approx(0.25)
    assert gumbel_cdf(L, 0.0) == pytest.approx(math.exp(-1.0))
    p = np.array([0.01, 0.5, 0.99])
    np.testing.assert_allclose(gumbel_cdf(L, gumbel_quantile(L, p)), p)
    with pytest.raises(ReflectLabError) as err:
        gumbel_cdf(limit_law_set(CL1), 0.0)
    assert err.value.code == "config-error"


def test_triple_transform_against_quadrature():
    L = limit_law_set(KOU1, 3.0)
    g = L.gamma
    c = gumbel_constant(L) * 3.0

    def density(z):
        return c * g * math.exp(-g * z) * math.exp(-c * math.exp(-g * z))

    beta = 0.8
    re = quad(lambda z: math.cos(beta * z) * density(z), -30, 60, limit=400)[0]
    im = quad(lambda z: math.sin(beta * z) * density(z), -30, 60, limit=400)[0]
    got = triple_transform(L, 0.5, 0.7, beta)
    base = joint_yz_laplace(L, 0.5, 0.7)
    assert got == pytest.approx(base * complex(re, im), rel=1e-7)
    assert triple_transform(L, 0.5, 0.7, 0.0) == pytest.approx(base)


def test_downward_passage_creeping_models():
    for model in (CL1, BM1):
        L = limit_law_set(model)
        assert downward_passage_transform(L, 3.0) == pytest.approx(math.exp(-L.gamma * 3.0))


def test_downward_passage_positive_drift_jumps_only_down():
    # positive drift: the level -z is always passed by an Exp(beta) jump
    m = LevyModel(drift=0.5, up=ExpJumps(0.5, 2.0), down=ExpJumps(1.0, 1.0))
    L = limit_law_set(m)
    beta = 1.0
    z = 2.0
    assert downward_passage_transform(L, z) == pytest.approx(math.exp(-L.gamma * z) * beta / (beta + L.gamma), rel=1e-9)


def test_downward_passage_matches_simulation():
    m = LevyModel(drift=-0.5, up=ExpJumps(1.0, 2.0), down=ExpJumps(1.0, 1.5))
    L = limit_law_set(m)
    z = 1.5
    par = _params(m)
    state = np.empty(STATE_SIZE, dtype=np.uint64)
    vals = np.empty(40_000)
    for i in range(vals.size):
        rng_init(state, np.uint64(77), np.uint64(i))
        _, xt, _ = K.exit_path(par, 1e12, z, 1e-3, state)
        vals[i] = math.exp(L.gamma * xt)
    se = vals.std() / math.sqrt(vals.size)
    assert abs(vals.mean() - downward_passage_transform(L, z)) < 4 * se


def test_exit_asymptotics():
    L = limit_law_set(CL1)
    assert two_sided_exit_asym(L, CL1, 20.0, 10.0) == pytest.approx(0.5 * math.exp(-10) * (1 - math.exp(-5)))
    assert two_sided_exit_asym(L, CL1, 4.0, math.inf) == pytest.approx(0.5 * math.exp(-2))
    assert overshoot_exit_asym(L, CL1, 1.0, 20.0, 10.0) == pytest.approx(0.5 * two_sided_exit_asym(L, CL1, 20.0, 10.0))
    with pytest.raises(ValueError):
        two_sided_exit_asym(L, KOU1, 1.0, 1.0)


def test_tilted_transform_cl1_and_continuity():
    L = limit_law_set(CL1)
    assert tilted_overshoot_transform(L, 1.0, 2.0) == pytest.approx(0.2)
    assert tilted_overshoot_transform(L, 2.0, 1.0) == pytest.approx(1.0 / 3.0)
    K1 = limit_law_set(KOU1)
    near = tilted_overshoot_transform(K1, 1.0, 1.0 + 1e-7)
    assert tilted_overshoot_transform(K1, 1.0, 1.0) == pytest.approx(near, rel=1e-6)
    with pytest.raises(ValueError):
        tilted_overshoot_transform(L, 0.0, 1.0)


def test_stehfest_weights():
    for order in (8, 12, 14):
        assert abs(sum(stehfest_weights(order))) < 1e-6 * max(abs(w) for w in stehfest_weights(order))
    with pytest.raises(ValueError):
        stehfest_weights(13)


@pytest.mark.parametrize("model", [CL1, KOU1], ids=["CL-1", "KOU-1"])
def test_inversion_agrees_with_closed_form(model):
    L = limit_law_set(model)
    grid = [0.25, 0.5, 1.0, 2.0, 3.0]
    z_inv = laplace_invert_cdf(lambda v: z_inf_laplace(L, v), grid)
    y_inv = laplace_invert_cdf(lambda v: y_inf_laplace(L, v), grid)
    np.testing.assert_allclose(z_inv, z_inf_tail(L, np.array(grid)), atol=5e-5)
    np.testing.assert_allclose(y_inv, y_inf_tail(L, np.array(grid)), atol=5e-5)


def test_inversion_flags_oscillation():
    # point mass at 1: the tail is a step and Stehfest rings around it
    with pytest.raises(OscillationError) as err:
        laplace_invert_cdf(lambda v: math.exp(-v), [0.9, 1.05])
    assert err.value.code == "oscillation-detected"
    with pytest.raises(ValueError):
        laplace_invert_cdf(lambda v: 1.0, [0.0])


def test_divergent_tail_detected():
    # synthetic ascending factor with a Lévy pole below gamma
    asc = RationalBernstein((0.5,), (0.3,), 1.0)
    desc = RationalBernstein((0.0,), (), 1.0)
    fake = LadderFactorization(asc, desc, 1.0, 0.5, -1.0, 1.0, 1.0)
    with pytest.raises(DivergentTailError) as err:
        z_inf_tail(LimitLawSet(0.5, fake), 1.0)
    assert err.value.code == "divergent-tail"


def test_law_set_validation():
    f = wh_factorize(CL1)
    with pytest.raises(ValueError):
        LimitLawSet(0.7, f)
    with pytest.raises(ValueError):
        LimitLawSet(cramer_gamma(CL1).gamma, f, -1.0)


def test_tilted_transform_brownian_and_diagonal():
    # Brownian paths pass levels continuously: the overshoot is identically 0
    assert tilted_overshoot_transform(limit_law_set(BM1), 1.0, 2.0) == pytest.approx(1.0)
    L = limit_law_set(CL1)
    a = CL1.up.decay - L.gamma
    assert tilted_overshoot_transform(L, 1.5, 1.5) == pytest.approx(a / (a + 1.5))
