"""Path sampling of X and the reflected process Y.

Models without a diffusion part are simulated exactly, event by event:
between jumps the path is linear, so reflection, first passages,
overshoots and running maxima are closed-form per segment.  With a
diffusion part an Euler grid is used, with jumps at exact Poisson epochs;
passage times then carry an O(sqrt(step)) bias.

Randomness is a pure function of ``(seed, index)``.  Work is split into
index chunks that may run on several threads, and results are always
assembled in index order, so the worker count never changes any output.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional, Sequence

import numpy as np

from . import _kernels as K
from .errors import ConfigError, UnsupportedModelError
from .levy_models import LevyModel, cramer_gamma, esscher_tilt, psi
from .stats_verify import DEFAULT_GRID, EmpiricalDistribution, JointCounts

__all__ = [
    "SimConfig",
    "FunctionalSample",
    "SampleBatch",
    "MonteCarloResult",
    "Estimate",
    "rate_scale",
    "simulate_batch",
    "sample_functionals",
    "monte_carlo",
    "importance_sample_exit",
    "straddle_probability",
    "tilted_overshoot_estimate",
    "sample_running_sup",
    "jump_events",
]

CHUNK = 2048
_SEED_LIMIT = 2**64


def rate_scale(model: LevyModel) -> float:
    """Largest natural rate of the model: total jump rate, |drift|, sigma^2."""
    return max(model.jump_rate, abs(model.drift), model.sigma**2)


@dataclass(frozen=True)
class SimConfig:
    t: float
    x: float
    y_offset: float = 0.0
    n: int = 1000
    seed: int = 0
    step: float = 1e-3
    horizon: Optional[float] = None
    # finish the passage over x + y_offset by regeneration after the horizon
    regenerate: bool = False

    def __post_init__(self):
        if not (self.t > 0 and math.isfinite(self.t)):
            raise ConfigError(f"t must be positive and finite, got {self.t}")
        if not (self.x > 0 and math.isfinite(self.x)):
            raise ConfigError(f"x must be positive and finite, got {self.x}")
        if not (self.y_offset >= 0 and math.isfinite(self.y_offset)):
            raise ConfigError(f"y_offset must be nonnegative, got {self.y_offset}")
        if not (isinstance(self.n, (int, np.integer)) and self.n >= 1):
            raise ConfigError(f"n must be a positive integer, got {self.n}")
        if not (isinstance(self.seed, (int, np.integer)) and 0 <= self.seed < _SEED_LIMIT):
            raise ConfigError(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        if not self.step > 0:
            raise ConfigError(f"step must be positive, got {self.step}")
        if self.horizon is None:
            object.__setattr__(self, "horizon", float(self.t))
        if not self.horizon >= self.t:
            raise ConfigError(f"horizon {self.horizon} must be >= t {self.t}")

    @property
    def level(self) -> float:
        return self.x + self.y_offset

    def check_for(self, model: LevyModel) -> None:
        """Model-dependent checks: grid resolution and regeneration support."""
        if model.sigma > 0:
            limit = 1e-2 * min(1.0, 1.0 / rate_scale(model))
            if self.step > limit * (1 + 1e-12):
                raise ConfigError(f"step {self.step} too coarse for this model: need <= {limit:.3g}")
            if self.regenerate:
                raise UnsupportedModelError("regeneration needs a model without diffusion")


@dataclass(frozen=True)
class FunctionalSample:
    y_t: float
    z: Optional[float]
    m: float
    tau: Optional[float]
    straddle: bool
    weight: float = 1.0


def _opt(v: float) -> Optional[float]:
    return None if math.isnan(v) else float(v)


@dataclass
class SampleBatch:
    """Columns of consecutive samples starting at index ``start``; NaN marks absent values."""

    start: int
    y_t: np.ndarray
    z: np.ndarray
    m: np.ndarray
    tau: np.ndarray
    straddle: np.ndarray
    weight: np.ndarray

    def __len__(self) -> int:
        return self.y_t.size

    def sample(self, i: int) -> FunctionalSample:
        return FunctionalSample(
            y_t=float(self.y_t[i]),
            z=_opt(self.z[i]),
            m=float(self.m[i]),
            tau=_opt(self.tau[i]),
            straddle=bool(self.straddle[i]),
            weight=float(self.weight[i]),
        )


def _params(model: LevyModel) -> np.ndarray:
    up, down = model.up, model.down
    return np.array([
        model.drift,
        model.sigma,
        up.rate if up else 0.0,
        up.decay if up else 1.0,
        down.rate if down else 0.0,
        down.decay if down else 1.0,
    ])


def _run_chunks(fn: Callable[[int, int], None], start: int, stop: int, workers: int) -> None:
    ranges = [(lo, min(lo + CHUNK, stop)) for lo in range(start, stop, CHUNK)]
    if workers <= 1 or len(ranges) <= 1:
        for lo, hi in ranges:
            fn(lo, hi)
        return
    with ThreadPoolExecutor(max_workers=workers) as ex:
        for _ in ex.map(lambda r: fn(*r), ranges):
            pass


def _index_range(cfg_n: int, start: int, stop: Optional[int]) -> tuple[int, int]:
    stop = cfg_n if stop is None else stop
    if not 0 <= start <= stop <= cfg_n:
        raise ConfigError(f"index range [{start}, {stop}) outside [0, {cfg_n})")
    return start, stop


def simulate_batch(
    model: LevyModel, cfg: SimConfig, start: int = 0, stop: Optional[int] = None, workers: int = 1
) -> SampleBatch:
    """Functionals for the samples with index in ``[start, stop)``."""
    cfg.check_for(model)
    start, stop = _index_range(cfg.n, start, stop)
    par = _params(model)
    tpar = par
    gamma = 0.0
    if cfg.regenerate:
        gamma = cramer_gamma(model).gamma
        tpar = _params(esscher_tilt(model, gamma))
    out = np.empty((stop - start, K.OUT_COLS))
    seed = np.uint64(cfg.seed)

    def work(lo, hi):
        K.functionals_batch(par, float(cfg.t), float(cfg.x), float(cfg.level), float(cfg.horizon),
                            float(cfg.step), bool(cfg.regenerate), tpar, gamma, seed, lo,
                            out[lo - start:hi - start])

    _run_chunks(work, start, stop, workers)
    return SampleBatch(
        start=start,
        y_t=out[:, 0].copy(),
        z=out[:, 1].copy(),
        m=out[:, 2].copy(),
        tau=out[:, 3].copy(),
        straddle=out[:, 4] > 0.5,
        weight=np.ones(stop - start),
    )


def sample_functionals(model: LevyModel, cfg: SimConfig, index: int) -> FunctionalSample:
    if not 0 <= index < cfg.n:
        raise ConfigError(f"index {index} outside [0, {cfg.n})")
    return simulate_batch(model, cfg, index, index + 1).sample(0)


@dataclass
class MonteCarloResult:
    y_t: EmpiricalDistribution
    z: EmpiricalDistribution
    m: EmpiricalDistribution
    counts: JointCounts
    n: int
    straddle_count: int

    def merge(self, other: "MonteCarloResult") -> "MonteCarloResult":
        return MonteCarloResult(
            self.y_t.merge(other.y_t),
            self.z.merge(other.z),
            self.m.merge(other.m),
            self.counts.merge(other.counts),
            self.n + other.n,
            self.straddle_count + other.straddle_count,
        )

    @classmethod
    def from_batch(cls, batch: SampleBatch, grid=DEFAULT_GRID) -> "MonteCarloResult":
        return cls(
            y_t=EmpiricalDistribution.from_samples(batch.y_t, atom_at_zero=True),
            z=EmpiricalDistribution.from_samples(batch.z, atom_at_zero=True),
            m=EmpiricalDistribution.from_samples(batch.m),
            counts=JointCounts.from_samples(batch.y_t, batch.z, batch.m, grid),
            n=len(batch),
            straddle_count=int(batch.straddle.sum()),
        )


def monte_carlo(
    model: LevyModel,
    cfg: SimConfig,
    grid=DEFAULT_GRID,
    start: int = 0,
    stop: Optional[int] = None,
    workers: int = 1,
) -> MonteCarloResult:
    """Empirical laws of ``Y(t)``, ``Z(x + y_offset)`` and ``M(t, x)`` plus joint counts.

    Samples without an observed passage are left out of the overshoot law
    and of the joint counts.
    """
    return MonteCarloResult.from_batch(simulate_batch(model, cfg, start, stop, workers), grid)


class Estimate(NamedTuple):
    estimate: float
    std_error: float

    @property
    def rel_error(self) -> float:
        return self.std_error / self.estimate if self.estimate else math.inf


def _mean_se(values: np.ndarray) -> Estimate:
    n = values.size
    mean = float(np.mean(values))
    se = float(np.std(values, ddof=1) / math.sqrt(n)) if n > 1 else math.inf
    return Estimate(mean, se)


def importance_sample_exit(
    model: LevyModel,
    x: float,
    z: float,
    n: int,
    seed: int,
    theta: Optional[float] = None,
    step: float = 1e-3,
    workers: int = 1,
) -> Estimate:
    """Estimate ``P(T(x) < T(-z))`` for X started at 0.

    Paths run under the exponentially tilted law at ``theta`` (the Cramér
    root by default) and each path leaving upwards carries the likelihood
    ratio ``exp(-theta X(T) + T psi(theta))``.  ``theta = 0`` is plain Monte
    Carlo.  At ``x = 0`` the passage is immediate and the estimate is 1.
    """
    if x < 0 or not z > 0:
        raise ConfigError("need x >= 0 and z > 0")
    if x == 0:
        return Estimate(1.0, 0.0)
    if theta is None:
        theta = cramer_gamma(model).gamma
    psi_theta = 0.0 if theta == 0 else float(psi(model, theta))
    if abs(psi_theta) < 1e-12:
        psi_theta = 0.0
    par = _params(esscher_tilt(model, theta))
    out = np.empty(n)
    s = np.uint64(seed)

    def work(lo, hi):
        K.exit_weights_batch(par, float(x), float(z), float(step), float(theta), psi_theta, s, lo, out[lo:hi])

    _run_chunks(work, 0, n, workers)
    return _mean_se(out)


def straddle_probability(
    model: LevyModel, t: float, x: float, n: int, seed: int, workers: int = 1
) -> Estimate:
    """Probability that ``t`` and ``tau(x)`` lie in one excursion of Y away from 0."""
    if model.sigma > 0:
        raise UnsupportedModelError("excursion intervals are not identifiable on a diffusion grid")
    cfg = SimConfig(t=t, x=x, n=n, seed=seed)
    batch = simulate_batch(model, cfg, workers=workers)
    return _mean_se(batch.straddle.astype(float))


def tilted_overshoot_estimate(
    model: LevyModel,
    pairs: Sequence[tuple[float, float]],
    n: int,
    seed: int,
    workers: int = 1,
) -> list[Estimate]:
    """``int q e^{-q x} E[exp(-u K(x))] dx`` under the Cramér-tilted law, per ``(q, u)``.

    Each path's running maximum is integrated exactly, so the only error
    is Monte Carlo noise.
    """
    if model.sigma > 0:
        raise UnsupportedModelError("pathwise overshoot integral needs a model without diffusion")
    qs = np.array([float(q) for q, _ in pairs])
    us = np.array([float(u) for _, u in pairs])
    if np.any(qs <= 0) or np.any(us <= 0):
        raise ConfigError("q and u must be positive")
    par = _params(esscher_tilt(model, cramer_gamma(model).gamma))
    out = np.empty((n, qs.size))
    s = np.uint64(seed)

    def work(lo, hi):
        K.overshoot_integral_batch(par, qs, us, s, lo, out[lo:hi])

    _run_chunks(work, 0, n, workers)
    return [_mean_se(out[:, j]) for j in range(qs.size)]


def sample_running_sup(
    model: LevyModel, t: float, n: int, seed: int, step: float = 1e-3, workers: int = 1
) -> np.ndarray:
    """Samples of ``sup_{s <= t} X(s)``."""
    par = _params(model)
    out = np.empty(n)
    s = np.uint64(seed)

    def work(lo, hi):
        K.running_sup_batch(par, float(t), float(step), s, lo, out[lo:hi])

    _run_chunks(work, 0, n, workers)
    return out


def jump_events(model: LevyModel, t_end: float, seed: int, index: int, max_events: int = 10**7):
    """Jump epochs and signed sizes on ``[0, t_end]`` of sample ``(seed, index)``.

    Uses the same random stream as :func:`simulate_batch` for models
    without diffusion, so a path can be rebuilt independently.
    """
    if model.sigma > 0:
        raise UnsupportedModelError("jump events alone do not determine a diffusion path")
    return K.jump_events(_params(model), float(t_end), np.uint64(seed), index, max_events)
