"""Verification suite: analytic limit laws against exact simulation.

Each check returns one or more :class:`Verdict` records.  Scales, seeds
and thresholds live in :class:`SuiteSettings`; the defaults are the full
desk-scale suite and a config file can shrink or tighten them.  No
wall-clock quantity enters a verdict, so reports are reproducible byte for
byte.
"""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field, fields
from typing import Any, Callable, Mapping, Optional

import numpy as np

from .errors import ConfigError
from .ladder import product_identity_residual, wh_factorize
from .levy_models import BM1, CL1, KOU1, LevyModel, cramer_gamma
from .limit_laws import (
    gumbel_cdf,
    laplace_invert_cdf,
    limit_law_set,
    tilted_overshoot_transform,
    two_sided_exit_asym,
    y_inf_tail,
    z_inf_atom,
    z_inf_laplace,
    z_inf_tail,
)
from .path_simulator import (
    SimConfig,
    importance_sample_exit,
    monte_carlo,
    simulate_batch,
    straddle_probability,
    tilted_overshoot_estimate,
)
from .stats_verify import DEFAULT_GRID, EmpiricalDistribution, independence_gap, ks_distance

__all__ = ["Verdict", "SuiteSettings", "CHECKS", "run_suite", "coupled_t"]


@dataclass(frozen=True)
class Verdict:
    name: str
    statistic: float
    threshold: float
    passed: bool
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "statistic": _clean(self.statistic),
            "threshold": _clean(self.threshold),
            "pass": bool(self.passed),
            "details": {k: _clean(v) for k, v in self.details.items()},
        }


def _clean(v):
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else None
    if isinstance(v, np.integer):
        return int(v)
    return v


@dataclass(frozen=True)
class SuiteSettings:
    seed: int = 20240611
    # Cramér root
    root_tol: float = 1e-10
    root_time_limit: float = 1e-3
    # factorization identity
    identity_points: int = 100
    identity_tol: float = 1e-8
    phi_root_tol: float = 1e-9
    # limiting overshoot
    overshoot_level: float = 20.0
    overshoot_horizon: float = 1e4
    overshoot_n: int = 100_000
    overshoot_ks_tol: float = 0.02
    creep_level_bm: float = 2.0
    creep_n_bm: int = 10_000
    creep_level_kou: float = 3.0
    creep_n_kou: int = 20_000
    creep_horizon: float = 1e4
    creep_step: float = 1e-3
    creep_atom_tol: float = 0.02
    # stationary law
    stationary_t: float = 400.0
    stationary_n: int = 100_000
    stationary_atom_tol: float = 0.01
    stationary_ks_tol: float = 0.02
    # coupled grid: Gumbel maximum and independence
    lambda_scale: float = 4.0
    x_list: tuple = (10.0, 12.0, 14.0)
    y_offset: float = 8.0
    coupled_n: int = 100_000
    gumbel_ks_tol: float = 0.03
    gap_tol: float = 0.03
    gap_grid: tuple = DEFAULT_GRID
    # two-sided exit
    exit_x: float = 20.0
    exit_z: float = 10.0
    exit_n: int = 100_000
    exit_rel_tol: float = 0.05
    # tilted overshoot transform
    transform_pairs: tuple = ((1.0, 2.0), (2.0, 1.0))
    transform_n: int = 100_000
    transform_rel_tol: float = 0.02
    # straddle decay
    straddle_x_list: tuple = (10.0, 12.0, 14.0, 16.0)
    straddle_n: int = 20_000
    straddle_min_ratio: float = 2.0

    def __post_init__(self):
        for name in ("x_list", "straddle_x_list", "transform_pairs"):
            if len(getattr(self, name)) == 0:
                raise ConfigError(f"verify.{name} must not be empty")
        if len(self.gap_grid) != 3 or any(len(g) == 0 for g in self.gap_grid):
            raise ConfigError("verify.gap_grid needs three non-empty threshold lists")
        if len(self.straddle_x_list) < 2:
            raise ConfigError("verify.straddle_x_list needs at least two levels")

    @classmethod
    def from_mapping(cls, section: Optional[Mapping[str, Any]]) -> "SuiteSettings":
        section = dict(section or {})
        known = {f.name: f for f in fields(cls)}
        unknown = set(section) - set(known)
        if unknown:
            raise ConfigError(f"unknown verify keys: {sorted(unknown)}")
        kw = {}
        for key, val in section.items():
            default = known[key].default
            if isinstance(default, tuple):
                if key in ("transform_pairs", "gap_grid"):
                    val = tuple(tuple(float(v) for v in row) for row in val)
                else:
                    val = tuple(float(v) for v in val)
            elif isinstance(default, bool):
                val = bool(val)
            elif isinstance(default, int):
                if isinstance(val, float) and not val.is_integer():
                    raise ConfigError(f"verify.{key} must be an integer")
                val = int(val)
            else:
                val = float(val)
            kw[key] = val
        return cls(**kw)

    def to_dict(self) -> dict:
        return asdict(self)


def coupled_t(lambda_scale: float, gamma: float, x: float) -> float:
    """Time paired with level ``x`` on the coupled grid ``t = lambda e^{gamma x}``."""
    return lambda_scale * math.exp(gamma * x)


def check_cramer_root(s: SuiteSettings, workers: int = 1) -> list[Verdict]:
    closed = {
        "CL-1": (CL1, CL1.up.decay - CL1.up.rate / abs(CL1.drift)),
        "BM-1": (BM1, -2.0 * BM1.drift / BM1.sigma**2),
    }
    errs = {}
    slowest = 0.0
    for name, (model, exact) in closed.items():
        errs[name] = abs(cramer_gamma(model).gamma - exact)
        reps = []
        for _ in range(50):
            t0 = time.perf_counter()
            cramer_gamma(model)
            reps.append(time.perf_counter() - t0)
        slowest = max(slowest, float(np.median(reps)))
    stat = max(errs.values())
    ok = stat <= s.root_tol and slowest < s.root_time_limit
    return [Verdict("cramer_root", stat, s.root_tol, ok,
                    {"abs_error_cl1": errs["CL-1"], "abs_error_bm1": errs["BM-1"]})]


def _theta_grid(model: LevyModel, n: int) -> np.ndarray:
    lo = max(model.theta_min, -10.0)
    hi = min(model.theta_max, 10.0)
    pad = 1e-3 * (hi - lo)
    return np.linspace(lo + pad, hi - pad, n)


def check_factorization(s: SuiteSettings, workers: int = 1) -> list[Verdict]:
    out = []
    for name, model in (("CL-1", CL1), ("BM-1", BM1), ("KOU-1", KOU1)):
        fact = wh_factorize(model)
        resid = product_identity_residual(model, fact, _theta_grid(model, s.identity_points))
        at_root = abs(complex(fact.phi(-fact.gamma)))
        ok = resid <= s.identity_tol and at_root <= s.phi_root_tol
        out.append(Verdict(f"wh_identity_{name}", resid, s.identity_tol, ok, {"abs_phi_at_minus_gamma": at_root}))
    return out


def overshoot_cl1(s: SuiteSettings, workers: int = 1) -> Verdict:
    laws = limit_law_set(CL1)
    cfg = SimConfig(t=1.0, x=s.overshoot_level, n=s.overshoot_n, seed=s.seed + 3, horizon=s.overshoot_horizon)
    z = EmpiricalDistribution.from_samples(simulate_batch(CL1, cfg, workers=workers).z, atom_at_zero=True)

    def z_cdf(v):
        return 1.0 - np.asarray(z_inf_tail(laws, v))

    # the transform route must agree with the closed-form tail used for KS
    grid = np.linspace(0.25, 4.0, 16)
    inverted = laplace_invert_cdf(lambda v: z_inf_laplace(laws, v), grid)
    route_gap = float(np.max(np.abs(np.asarray(inverted) - z_inf_tail(laws, grid))))
    ks = ks_distance(z, z_cdf) if z.n else math.inf
    return Verdict("overshoot_ks_CL-1", ks, s.overshoot_ks_tol, ks <= s.overshoot_ks_tol,
                   {"observed": z.n, "n": s.overshoot_n, "limit_atom": z_inf_atom(laws),
                    "inversion_vs_closed_form": route_gap})


def overshoot_bm1(s: SuiteSettings, workers: int = 1) -> Verdict:
    cfg = SimConfig(t=1.0, x=s.creep_level_bm, n=s.creep_n_bm, seed=s.seed + 31,
                    horizon=s.creep_horizon, step=s.creep_step)
    zb = simulate_batch(BM1, cfg, workers=workers).z
    zb = zb[~np.isnan(zb)]
    biggest = float(zb.max()) if zb.size else math.inf
    return Verdict("overshoot_creeping_BM-1", biggest, 0.0, zb.size > 0 and biggest == 0.0,
                   {"observed": int(zb.size), "n": s.creep_n_bm})


def overshoot_kou1(s: SuiteSettings, workers: int = 1) -> Verdict:
    laws = limit_law_set(KOU1)
    cfg = SimConfig(t=1.0, x=s.creep_level_kou, n=s.creep_n_kou, seed=s.seed + 37,
                    horizon=s.creep_horizon, step=s.creep_step)
    zk = EmpiricalDistribution.from_samples(simulate_batch(KOU1, cfg, workers=workers).z, atom_at_zero=True)
    target = z_inf_atom(laws)
    diff = abs(zk.atom_fraction - target) if zk.n else math.inf
    return Verdict("overshoot_atom_KOU-1", diff, s.creep_atom_tol, diff <= s.creep_atom_tol,
                   {"empirical_atom": zk.atom_fraction, "limit_atom": target, "observed": zk.n})


def check_overshoot(s: SuiteSettings, workers: int = 1) -> list[Verdict]:
    return [overshoot_cl1(s, workers), overshoot_bm1(s, workers), overshoot_kou1(s, workers)]


def check_stationary(s: SuiteSettings, workers: int = 1) -> list[Verdict]:
    laws = limit_law_set(CL1)
    cfg = SimConfig(t=s.stationary_t, x=1.0, n=s.stationary_n, seed=s.seed + 4)
    y = EmpiricalDistribution.from_samples(simulate_batch(CL1, cfg, workers=workers).y_t, atom_at_zero=True)
    p_pos = float(y_inf_tail(laws, 0.0))
    atom_err = abs(y.atom_fraction - (1.0 - p_pos))
    positive = EmpiricalDistribution(y.sorted_values, y.sorted_values.size, 0)

    def cond_cdf(v):
        return 1.0 - np.asarray(y_inf_tail(laws, v)) / p_pos

    ks = ks_distance(positive, cond_cdf) if positive.n else math.inf
    return [
        Verdict("stationary_atom_CL-1", atom_err, s.stationary_atom_tol, atom_err <= s.stationary_atom_tol,
                {"empirical_atom": y.atom_fraction, "limit_atom": 1.0 - p_pos}),
        Verdict("stationary_ks_CL-1", ks, s.stationary_ks_tol, ks <= s.stationary_ks_tol,
                {"positive_samples": positive.n}),
    ]


def _coupled_runs(s: SuiteSettings, workers: int):
    laws = limit_law_set(CL1, s.lambda_scale)
    runs = []
    for i, x in enumerate(s.x_list):
        t = coupled_t(s.lambda_scale, laws.gamma, x)
        cfg = SimConfig(t=t, x=x, y_offset=s.y_offset, n=s.coupled_n, seed=s.seed + 50 + i,
                        horizon=t, regenerate=True)
        runs.append((x, t, monte_carlo(CL1, cfg, grid=s.gap_grid, workers=workers)))
    return laws, runs


def check_coupled(s: SuiteSettings, workers: int = 1) -> list[Verdict]:
    laws, runs = _coupled_runs(s, workers)
    ks = [ks_distance(r.m, lambda v: gumbel_cdf(laws, v)) for _, _, r in runs]
    decreasing = all(b < a for a, b in zip(ks, ks[1:]))
    worst = max(ks)
    gumbel = Verdict("gumbel_max_CL-1", worst, s.gumbel_ks_tol, worst <= s.gumbel_ks_tol and decreasing,
                     {"x": list(s.x_list), "t": [t for _, t, _ in runs], "ks": ks, "decreasing": decreasing})

    reports = [independence_gap(r.counts) for _, _, r in runs]
    gaps = [rep.gap for rep in reports]
    radius = max(rep.dkw_radius for rep in reports)
    rises = [b - a for a, b in zip(gaps, gaps[1:])]
    trend_ok = all(r <= radius for r in rises)
    final = gaps[-1]
    indep = Verdict("independence_gap_CL-1", final, s.gap_tol, final <= s.gap_tol and trend_ok,
                    {"x": list(s.x_list), "gaps": gaps, "pair_gaps": [rep.pair_gap for rep in reports],
                     "dkw_radius": radius, "trend_ok": trend_ok})
    return [gumbel, indep]


def check_exit(s: SuiteSettings, workers: int = 1) -> list[Verdict]:
    laws = limit_law_set(CL1)
    est = importance_sample_exit(CL1, s.exit_x, s.exit_z, s.exit_n, s.seed + 7, workers=workers)
    target = two_sided_exit_asym(laws, CL1, s.exit_x, s.exit_z)
    rel = abs(est.estimate / target - 1.0)
    return [Verdict("two_sided_exit_CL-1", rel, s.exit_rel_tol, rel <= s.exit_rel_tol,
                    {"estimate": est.estimate, "std_error": est.std_error, "asymptotic": target,
                     "plain_mc_expected_hits": target * s.exit_n})]


def check_tilted_transform(s: SuiteSettings, workers: int = 1) -> list[Verdict]:
    laws = limit_law_set(CL1)
    ests = tilted_overshoot_estimate(CL1, s.transform_pairs, s.transform_n, s.seed + 8, workers=workers)
    exact = [tilted_overshoot_transform(laws, q, u) for q, u in s.transform_pairs]
    rels = [abs(e.estimate / x - 1.0) for e, x in zip(ests, exact)]
    worst = max(rels)
    return [Verdict("tilted_transform_CL-1", worst, s.transform_rel_tol, worst <= s.transform_rel_tol,
                    {"pairs": [list(p) for p in s.transform_pairs], "estimates": [e.estimate for e in ests],
                     "exact": exact})]


def check_straddle(s: SuiteSettings, workers: int = 1) -> list[Verdict]:
    gamma = cramer_gamma(CL1).gamma
    probs = []
    for i, x in enumerate(s.straddle_x_list):
        t = coupled_t(s.lambda_scale, gamma, x)
        probs.append(straddle_probability(CL1, t, x, s.straddle_n, s.seed + 90 + i, workers=workers).estimate)
    ratio = probs[0] / probs[-1] if probs[-1] > 0 else math.inf
    return [Verdict("straddle_decay_CL-1", ratio, s.straddle_min_ratio, ratio >= s.straddle_min_ratio,
                    {"x": list(s.straddle_x_list), "probabilities": probs})]


CHECKS: dict[str, Callable[[SuiteSettings, int], list[Verdict]]] = {
    "cramer_root": check_cramer_root,
    "factorization": check_factorization,
    "overshoot": check_overshoot,
    "stationary": check_stationary,
    "coupled": check_coupled,
    "exit": check_exit,
    "tilted_transform": check_tilted_transform,
    "straddle": check_straddle,
}


def run_suite(settings: SuiteSettings, only=None, workers: int = 1) -> list[Verdict]:
    names = list(CHECKS) if only is None else list(only)
    unknown = [n for n in names if n not in CHECKS]
    if unknown:
        raise ConfigError(f"unknown checks: {unknown}; available: {list(CHECKS)}")
    if not names:
        raise ConfigError("no checks selected")
    out = []
    for name in names:
        out.extend(CHECKS[name](settings, workers))
    return out
