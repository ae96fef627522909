"""Wiener-Hopf ladder-height exponents for rational-exponent Lévy models.

``-psi(theta)`` is a rational function of ``theta``.  Its zeros and poles
with positive real part belong to the ascending ladder exponent ``phi``
(through ``phi(-theta)``), the zero at the origin and everything with
negative real part to the descending exponent ``phihat``.  Each factor is
kept in monic product form

    phi(u) = scale * prod(u + r_i) / prod(u + p_j)

and decomposed into killing + drift + hyperexponential Lévy measure so the
overshoot laws can be written term by term.

Only combinations that do not depend on the local-time normalization are
meaningful outside this module: ``c_gamma``, ``ell * phihat(gamma)``,
``phi(v) / phi(0)``, ``m * gamma / phi(0)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
from numpy.polynomial import Polynomial

from .errors import FactorizationError
from .levy_models import CramerData, LevyModel, cramer_gamma, mean_x1, psi

__all__ = [
    "RationalBernstein",
    "LadderFactorization",
    "wh_factorize",
    "ell_via_wald",
    "nu_h_tail",
    "product_identity_residual",
]

_COINCIDENT_TOL = 1e-8
_RESIDUE_TOL = 1e-10
_IMAG_TOL = 1e-9


@dataclass(frozen=True)
class RationalBernstein:
    """A killed-subordinator exponent with rational form.

    ``roots`` are the points ``r`` with ``phi(-r) = 0``; ``poles`` the points
    ``p`` with a pole at ``-p``.  ``jump_terms`` holds ``(weight, pole)``
    pairs such that the Lévy tail is ``sum(weight * exp(-pole * x))``.
    """

    roots: tuple
    poles: tuple
    scale: float = 1.0
    killing: float = field(init=False)
    drift: float = field(init=False)
    jump_terms: tuple = field(init=False)

    def __post_init__(self):
        num = Polynomial.fromroots([-r for r in self.roots]) if self.roots else Polynomial([1.0])
        den = Polynomial.fromroots([-p for p in self.poles]) if self.poles else Polynomial([1.0])
        object.__setattr__(self, "_num", num)
        object.__setattr__(self, "_den", den)
        diff = len(self.roots) - len(self.poles)
        if diff not in (0, 1):
            raise FactorizationError(
                f"factor grows like u^{diff}: not a Bernstein function", code="factorization-failure"
            )
        drift = self.scale if diff == 1 else 0.0
        dden = den.deriv()
        terms = []
        for p in self.poles:
            residue = self.scale * num(-p) / dden(-p)
            if abs(residue) <= _RESIDUE_TOL * max(1.0, self.scale):
                continue
            terms.append((-residue / p, p))
        object.__setattr__(self, "killing", float(self(0.0).real))
        object.__setattr__(self, "drift", float(drift))
        object.__setattr__(self, "jump_terms", tuple(terms))

    def __call__(self, u):
        u = np.asarray(u) if not np.isscalar(u) else u
        return self.scale * self._num(u) / self._den(u)

    def derivative(self, u):
        num, den = self._num, self._den
        return self.scale * (num.deriv()(u) * den(u) - num(u) * den.deriv()(u)) / den(u) ** 2

    def nu_tail(self, x):
        """Tail ``nu((x, inf))`` of the Lévy measure."""
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for w, p in self.jump_terms:
            out = out + w * np.exp(-p * x)
        return out if out.ndim else float(out)

    def rescaled(self, a: float) -> "RationalBernstein":
        return RationalBernstein(self.roots, self.poles, self.scale * a)

    def bernstein_violations(self, tol: float = 1e-12) -> list[str]:
        """Structural and sampled checks of the killed-subordinator property."""
        problems = []
        if self.killing < -tol * self.scale:
            problems.append(f"negative killing {self.killing}")
        for w, p in self.jump_terms:
            if w <= 0:
                problems.append(f"non-positive Lévy weight {w} at pole {p}")
        grid = np.concatenate([[0.0], np.logspace(-4, 4, 161)])
        vals = np.real(self(grid))
        steps = np.diff(vals)
        if np.any(vals < -tol * self.scale):
            problems.append("negative values on [0, inf)")
        if np.any(steps < -1e-10 * np.maximum(1.0, np.abs(vals[1:]))):
            problems.append("not nondecreasing on [0, inf)")
        # concavity via second differences on a uniform grid
        lin = np.linspace(0.0, 50.0, 501)
        second = np.diff(np.real(self(lin)), 2)
        if np.any(second > 1e-9 * max(1.0, float(np.max(np.abs(vals))))):
            problems.append("not concave on [0, inf)")
        return problems


@dataclass(frozen=True)
class LadderFactorization:
    ascending: RationalBernstein
    descending: RationalBernstein
    k: float
    gamma: float
    mean_x1: float
    ell: float
    c_gamma: float

    @property
    def phi0(self) -> float:
        return self.ascending.killing

    @property
    def m(self) -> float:
        return self.ascending.drift

    @property
    def ell_phihat_gamma(self) -> float:
        return self.ell * float(np.real(self.descending(self.gamma)))

    def phi(self, u):
        return self.ascending(u)

    def phihat(self, theta):
        return self.descending(theta)

    def rescaled(self, a_asc: float = 1.0, a_desc: float = 1.0) -> "LadderFactorization":
        """Change the local-time normalizations; ``k`` and ``ell`` compensate."""
        return replace(
            self,
            ascending=self.ascending.rescaled(a_asc),
            descending=self.descending.rescaled(a_desc),
            k=self.k / (a_asc * a_desc),
            ell=self.ell / a_desc,
        )


def _numerator_denominator(model: LevyModel) -> tuple[Polynomial, Polynomial]:
    """Polynomials with ``psi = num / den``."""
    theta = Polynomial([0.0, 1.0])
    up_den = Polynomial([model.up.decay, -1.0]) if model.up else Polynomial([1.0])
    down_den = Polynomial([model.down.decay, 1.0]) if model.down else Polynomial([1.0])
    den = up_den * down_den
    num = (model.drift * theta + 0.5 * model.sigma**2 * theta**2) * den
    if model.up:
        num = num + model.up.rate * theta * down_den
    if model.down:
        num = num - model.down.rate * theta * up_den
    return num.trim(), den


def _polish(poly: Polynomial, x: float, steps: int = 6) -> float:
    d = poly.deriv()
    for _ in range(steps):
        dv = d(x)
        if dv == 0:
            break
        step = poly(x) / dv
        x -= step
        if abs(step) <= 1e-16 * max(1.0, abs(x)):
            break
    return x


def _real_roots(poly: Polynomial) -> list[float]:
    raw = poly.roots() if poly.degree() > 0 else np.array([])
    out = []
    for z in np.atleast_1d(raw):
        if abs(z.imag) > _IMAG_TOL * max(1.0, abs(z)):
            raise FactorizationError(
                f"complex root {z} of the exponent: model outside the supported family",
            )
        out.append(float(z.real))
    return out


def wh_factorize(model: LevyModel, cramer: Optional[CramerData] = None) -> LadderFactorization:
    """Split ``-psi`` into ascending and descending ladder exponents.

    Both factors are monic; the remaining constant is ``k`` in
    ``-psi(theta) = k * phi(-theta) * phihat(theta)``.
    """
    if cramer is None:
        cramer = cramer_gamma(model)
    gamma = cramer.gamma
    num, den = _numerator_denominator(model)
    if abs(num.coef[0]) > 1e-14:
        raise FactorizationError("exponent does not vanish at the origin")
    reduced = Polynomial(num.coef[1:])
    roots = [_polish(reduced, r) for r in _real_roots(reduced)]
    # the bisected Cramér root is the most accurate value we have
    i_gamma = int(np.argmin([abs(r - gamma) for r in roots]))
    if abs(roots[i_gamma] - gamma) > 1e-6 * max(1.0, gamma):
        raise FactorizationError(f"Cramér root {gamma} not among the exponent's zeros {roots}")
    roots[i_gamma] = gamma
    roots.append(0.0)
    poles = _real_roots(den)

    pts = sorted(roots + poles)
    for a, b in zip(pts, pts[1:]):
        if abs(a - b) < _COINCIDENT_TOL:
            raise FactorizationError(f"near-coincident zeros/poles at {a} and {b}")

    asc_roots = tuple(sorted(r for r in roots if r > 0))
    asc_poles = tuple(sorted(p for p in poles if p > 0))
    desc_roots = tuple(sorted(-r for r in roots if r <= 0))
    desc_poles = tuple(sorted(-p for p in poles if p < 0))

    lead = -num.coef[-1] / den.coef[-1]
    k = lead * (-1.0) ** (len(asc_roots) - len(asc_poles))
    if not k > 0:
        raise FactorizationError(f"non-positive Wiener-Hopf constant k={k}")

    ascending = RationalBernstein(asc_roots, asc_poles)
    descending = RationalBernstein(desc_roots, desc_poles)
    for name, fac in (("ascending", ascending), ("descending", descending)):
        problems = fac.bernstein_violations()
        if problems:
            raise FactorizationError(f"{name} factor is not a Bernstein function: {'; '.join(problems)}")
    if abs(descending.killing) > 1e-12:
        raise FactorizationError(f"descending factor has killing {descending.killing}, expected 0")

    phi0 = ascending.killing
    slope = float(np.real(ascending.derivative(-gamma)))
    if not (phi0 > 0 and slope > 0):
        raise FactorizationError(f"expected phi(0) > 0 and phi'(-gamma) > 0, got {phi0}, {slope}")
    fact = LadderFactorization(
        ascending=ascending,
        descending=descending,
        k=float(k),
        gamma=gamma,
        mean_x1=cramer.mean_x1,
        ell=math.nan,
        c_gamma=phi0 / (gamma * slope),
    )
    return replace(fact, ell=ell_via_wald(model, fact))


def ell_via_wald(model: LevyModel, fact: LadderFactorization) -> float:
    """``1 / E[Lhat^{-1}(1)]`` from Wald's identity ``E[Hhat(1)] = -E[X(1)] E[Lhat^{-1}(1)]``."""
    mean_height = float(np.real(fact.descending.derivative(0.0)))
    if not mean_height > 0:
        raise FactorizationError(f"descending ladder height has mean {mean_height}")
    return abs(mean_x1(model)) / mean_height


def nu_h_tail(fact: LadderFactorization, x):
    """Tail of the ascending ladder-height Lévy measure."""
    if np.any(np.asarray(x) < 0):
        raise ValueError("nu_h_tail needs x >= 0")
    return fact.ascending.nu_tail(x)


def product_identity_residual(
    model: LevyModel, fact: LadderFactorization, thetas: Sequence[complex], floor: float = 1e-6
) -> float:
    """Largest relative mismatch of ``-psi = k phi(-.) phihat(.)`` over ``thetas``.

    ``floor`` keeps the ratio finite at the zeros 0 and gamma, where both
    sides are rounding noise.
    """
    worst = 0.0
    for th in thetas:
        lhs = -psi(model, th)
        rhs = fact.k * fact.phi(-th) * fact.phihat(th)
        worst = max(worst, abs(lhs - rhs) / max(abs(lhs), abs(rhs), floor))
    return worst

