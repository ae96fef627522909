"""Parametric Lévy models: drift + Brownian motion + two-sided exponential jumps.

The cumulant (Laplace) exponent of the family is rational,

    psi(theta) = drift*theta + sigma^2 theta^2 / 2
                 + lam_up * theta / (alpha - theta)
                 - lam_down * theta / (beta + theta),

which is what makes the ladder factorization computable by root finding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Mapping, Optional

from scipy.optimize import brentq

from .errors import ModelError, NoCramerRootError, PoleError

__all__ = [
    "ExpJumps",
    "LevyModel",
    "CramerData",
    "psi",
    "psi_prime",
    "mean_x1",
    "cramer_gamma",
    "esscher_tilt",
    "CL1",
    "BM1",
    "KOU1",
]

_PSI_ROOT_TOL = 1e-12


@dataclass(frozen=True)
class ExpJumps:
    """Compound Poisson jumps with rate ``rate`` and Exp(``decay``) sizes."""

    rate: float
    decay: float

    def __post_init__(self):
        if not (self.rate > 0 and math.isfinite(self.rate)):
            raise ModelError(f"jump rate must be positive and finite, got {self.rate}")
        if not (self.decay > 0 and math.isfinite(self.decay)):
            raise ModelError(f"jump decay must be positive and finite, got {self.decay}")

    @property
    def mean_size(self) -> float:
        return 1.0 / self.decay


@dataclass(frozen=True)
class LevyModel:
    drift: float
    sigma: float = 0.0
    up: Optional[ExpJumps] = None
    down: Optional[ExpJumps] = None

    def __post_init__(self):
        if not math.isfinite(self.drift):
            raise ModelError(f"drift must be finite, got {self.drift}")
        if not (self.sigma >= 0 and math.isfinite(self.sigma)):
            raise ModelError(f"sigma must be a finite nonnegative number, got {self.sigma}")
        if self.sigma == 0 and self.up is None and self.down is None:
            # pure drift is lattice-free but deterministic; nothing to reflect
            raise ModelError("degenerate pure-drift model: need a diffusion or jump component")

    @classmethod
    def from_mapping(cls, section: Mapping[str, Any]) -> "LevyModel":
        """Build a model from the ``model`` section of a config file."""
        def jumps(key):
            sub = section.get(key)
            if not sub:
                return None
            decay_key = "alpha" if key == "up" else "beta"
            try:
                return ExpJumps(float(sub["rate"]), float(sub[decay_key]))
            except KeyError as exc:
                raise ModelError(f"model.{key} needs keys 'rate' and '{decay_key}'") from exc

        if "drift" not in section:
            raise ModelError("model.drift is required")
        return cls(
            drift=float(section["drift"]),
            sigma=float(section.get("sigma", 0.0)),
            up=jumps("up"),
            down=jumps("down"),
        )

    def to_mapping(self) -> dict:
        out: dict = {"drift": self.drift, "sigma": self.sigma}
        if self.up is not None:
            out["up"] = {"rate": self.up.rate, "alpha": self.up.decay}
        if self.down is not None:
            out["down"] = {"rate": self.down.rate, "beta": self.down.decay}
        return out

    @property
    def theta_max(self) -> float:
        return self.up.decay if self.up is not None else math.inf

    @property
    def theta_min(self) -> float:
        return -self.down.decay if self.down is not None else -math.inf

    @property
    def jump_rate(self) -> float:
        return (self.up.rate if self.up else 0.0) + (self.down.rate if self.down else 0.0)

    def psi(self, theta: float) -> float:
        return psi(self, theta)

    def psi_prime(self, theta: float) -> float:
        return psi_prime(self, theta)


@dataclass(frozen=True)
class CramerData:
    gamma: float
    mean_x1: float
    theta_max: float
    psi_prime_gamma: float


def _check_domain(model: LevyModel, theta: complex) -> None:
    re = theta.real if isinstance(theta, complex) else theta
    if model.up is not None and re >= model.up.decay:
        raise PoleError(
            f"theta={theta} outside the exponent's domain: needs Re(theta) < alpha={model.up.decay}",
            code="pole",
        )
    if model.down is not None and re <= -model.down.decay:
        raise PoleError(
            f"theta={theta} outside the exponent's domain: needs Re(theta) > -beta={-model.down.decay}",
            code="pole",
        )


def psi(model: LevyModel, theta):
    """Cumulant exponent ``log E[exp(theta X(1))]``; accepts complex ``theta``."""
    _check_domain(model, theta)
    val = model.drift * theta + 0.5 * model.sigma**2 * theta * theta
    if model.up is not None:
        val += model.up.rate * theta / (model.up.decay - theta)
    if model.down is not None:
        val -= model.down.rate * theta / (model.down.decay + theta)
    return val


def psi_prime(model: LevyModel, theta: float) -> float:
    _check_domain(model, theta)
    val = model.drift + model.sigma**2 * theta
    if model.up is not None:
        a = model.up.decay
        val += model.up.rate * a / (a - theta) ** 2
    if model.down is not None:
        b = model.down.decay
        val -= model.down.rate * b / (b + theta) ** 2
    return val


def mean_x1(model: LevyModel) -> float:
    val = model.drift
    if model.up is not None:
        val += model.up.rate / model.up.decay
    if model.down is not None:
        val -= model.down.rate / model.down.decay
    return val


def cramer_gamma(model: LevyModel) -> CramerData:
    """Positive root of ``psi``.

    The bracket is found by a geometric scan from 1e-12 towards the upper
    edge of the domain and then refined with Brent's method.

    Raises:
        NoCramerRootError: if ``E[X(1)] >= 0`` or ``psi`` stays negative on
            its whole positive domain.
    """
    mu = mean_x1(model)
    if mu >= 0:
        raise NoCramerRootError(f"E[X(1)] = {mu} >= 0: no positive Cramér root")
    tmax = model.theta_max
    top = tmax - 1e-9 if math.isfinite(tmax) else 1e12
    lo = 1e-12
    hi = None
    theta = lo
    while theta < top:
        if psi(model, theta) > 0:
            hi = theta
            break
        lo = theta
        theta *= 2.0
    if hi is None:
        if psi(model, top) > 0:
            hi = top
        else:
            raise NoCramerRootError(
                "psi stays negative on (0, theta_max): no Cramér root (heavy-tail-like configuration)"
            )
    g = brentq(lambda th: psi(model, th), lo, hi, xtol=1e-300, rtol=1e-15, maxiter=500)
    if abs(psi(model, g)) > _PSI_ROOT_TOL:
        raise NoCramerRootError(f"root refinement stalled: psi(gamma)={psi(model, g)}")
    return CramerData(gamma=g, mean_x1=mu, theta_max=tmax, psi_prime_gamma=psi_prime(model, g))


def esscher_tilt(model: LevyModel, gamma: float) -> LevyModel:
    """Law of X under the exponential change of measure ``exp(gamma X(t))``."""
    if gamma == 0:
        return model
    _check_domain(model, gamma)
    up = down = None
    if model.up is not None:
        a = model.up.decay
        up = ExpJumps(model.up.rate * a / (a - gamma), a - gamma)
    if model.down is not None:
        b = model.down.decay
        down = ExpJumps(model.down.rate * b / (b + gamma), b + gamma)
    return LevyModel(drift=model.drift + model.sigma**2 * gamma, sigma=model.sigma, up=up, down=down)


# Reference models used throughout the tests and example configs.
CL1 = LevyModel(drift=-2.0, up=ExpJumps(1.0, 1.0))
BM1 = LevyModel(drift=-1.0, sigma=1.0)
KOU1 = LevyModel(drift=-1.0, sigma=1.0, up=ExpJumps(0.5, 2.0))
