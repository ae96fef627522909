"""Empirical distributions, KS distances, DKW bands and the independence gap."""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "EmpiricalDistribution",
    "JointCounts",
    "IndependenceReport",
    "DEFAULT_GRID",
    "ks_distance",
    "ks_two_sample",
    "dkw_radius",
    "dkw_two_sample_radius",
    "independence_gap",
    "merge_all",
]

# thresholds (a, b, c) for the events Y(t) > a, Z > b, M <= c
DEFAULT_GRID = ((0.0, 1.0, 3.0), (0.25, 0.7, 1.5), (-1.0, 0.7, 3.0))


@dataclass(frozen=True)
class EmpiricalDistribution:
    """Sorted sample with exact zeros optionally kept as a separate atom count."""

    sorted_values: np.ndarray
    n: int
    atom_at_zero_count: int = 0

    def __post_init__(self):
        vals = np.asarray(self.sorted_values, dtype=float)
        object.__setattr__(self, "sorted_values", vals)
        if self.n != vals.size + self.atom_at_zero_count:
            raise ValueError("n must equal the number of values plus the atom count")
        if vals.size > 1 and np.any(np.diff(vals) < 0):
            raise ValueError("sorted_values must be ascending")

    @classmethod
    def from_samples(cls, values, atom_at_zero: bool = False) -> "EmpiricalDistribution":
        vals = np.asarray(values, dtype=float)
        vals = vals[~np.isnan(vals)]
        atom = 0
        if atom_at_zero:
            zero = vals == 0.0
            atom = int(zero.sum())
            vals = vals[~zero]
        return cls(np.sort(vals), int(vals.size + atom), atom)

    @property
    def atom_fraction(self) -> float:
        return self.atom_at_zero_count / self.n if self.n else math.nan

    def cdf(self, x):
        """Right-continuous ECDF; the atom sits at 0."""
        x = np.asarray(x, dtype=float)
        below = np.searchsorted(self.sorted_values, x, side="right")
        atom = np.where(x >= 0, self.atom_at_zero_count, 0)
        out = (below + atom) / self.n
        return out if out.ndim else float(out)

    def merge(self, other: "EmpiricalDistribution") -> "EmpiricalDistribution":
        vals = np.sort(np.concatenate([self.sorted_values, other.sorted_values]), kind="stable")
        return EmpiricalDistribution(vals, self.n + other.n, self.atom_at_zero_count + other.atom_at_zero_count)


def ks_distance(emp: EmpiricalDistribution, cdf: Callable) -> float:
    """Two-sided Kolmogorov-Smirnov distance to ``cdf``.

    Both one-sided limits of the ECDF are compared at every sample point;
    the atom at zero is compared against ``cdf(0)``.
    """
    if emp.n == 0:
        raise ValueError("empty sample")
    vals = emp.sorted_values
    a = emp.atom_at_zero_count
    worst = 0.0
    if a:
        worst = abs(a / emp.n - float(cdf(0.0)))
    if vals.size:
        f = np.asarray(cdf(vals), dtype=float)
        i = np.arange(1, vals.size + 1)
        hi = (a + i) / emp.n
        lo = (a + i - 1) / emp.n
        worst = max(worst, float(np.max(np.maximum(np.abs(hi - f), np.abs(f - lo)))))
    return worst


def ks_two_sample(a: EmpiricalDistribution, b: EmpiricalDistribution) -> float:
    """Sup distance between two ECDFs, evaluated at every jump of either."""
    pts = np.concatenate([a.sorted_values, b.sorted_values, [0.0]])
    return float(np.max(np.abs(a.cdf(pts) - b.cdf(pts))))


def dkw_radius(n: int, confidence: float = 0.99) -> float:
    if n < 1:
        raise ValueError("n must be positive")
    if not 0.0 < confidence < 1.0:
        raise ValueError("confidence must lie in (0, 1)")
    if confidence > 1.0 - 1e-12:
        raise ValueError("confidence too close to 1: the band diverges")
    return math.sqrt(math.log(2.0 / (1.0 - confidence)) / (2.0 * n))


@dataclass
class JointCounts:
    """Summable counts of the half-line events on a threshold grid.

    Only samples with an observed overshoot enter; ``n_absent`` records the
    rest.
    """

    grid: tuple
    n: int
    n_absent: int
    y_gt: np.ndarray
    z_gt: np.ndarray
    m_le: np.ndarray
    yz: np.ndarray
    ym: np.ndarray
    zm: np.ndarray
    yzm: np.ndarray

    @classmethod
    def empty(cls, grid=DEFAULT_GRID) -> "JointCounts":
        a, b, c = (len(g) for g in grid)
        z = np.zeros
        return cls(tuple(tuple(map(float, g)) for g in grid), 0, 0,
                   z(a, np.int64), z(b, np.int64), z(c, np.int64),
                   z((a, b), np.int64), z((a, c), np.int64), z((b, c), np.int64), z((a, b, c), np.int64))

    @classmethod
    def from_samples(cls, y, z, m, grid=DEFAULT_GRID) -> "JointCounts":
        if any(len(g) == 0 for g in grid):
            raise ValueError("threshold grid must be non-empty in every coordinate")
        y, z, m = (np.asarray(v, dtype=float) for v in (y, z, m))
        keep = ~np.isnan(z)
        out = cls.empty(grid)
        out.n_absent = int((~keep).sum())
        y, z, m = y[keep], z[keep], m[keep]
        out.n = int(y.size)
        ea = y[None, :] > np.asarray(out.grid[0])[:, None]
        eb = z[None, :] > np.asarray(out.grid[1])[:, None]
        ec = m[None, :] <= np.asarray(out.grid[2])[:, None]
        ea, eb, ec = (e.astype(np.int64) for e in (ea, eb, ec))
        out.y_gt = ea.sum(1)
        out.z_gt = eb.sum(1)
        out.m_le = ec.sum(1)
        out.yz = ea @ eb.T
        out.ym = ea @ ec.T
        out.zm = eb @ ec.T
        out.yzm = np.einsum("ai,bi,ci->abc", ea, eb, ec)
        return out

    def merge(self, other: "JointCounts") -> "JointCounts":
        if self.grid != other.grid:
            raise ValueError("cannot merge counts on different grids")
        return JointCounts(
            self.grid, self.n + other.n, self.n_absent + other.n_absent,
            self.y_gt + other.y_gt, self.z_gt + other.z_gt, self.m_le + other.m_le,
            self.yz + other.yz, self.ym + other.ym, self.zm + other.zm, self.yzm + other.yzm,
        )


@dataclass(frozen=True)
class IndependenceReport:
    grid: list
    joint_probs: list
    product_probs: list
    gap: float
    pair_gap: float
    dkw_radius: float

    def to_dict(self) -> dict:
        return {
            "grid": [list(g) for g in self.grid],
            "joint_probs": list(self.joint_probs),
            "product_probs": list(self.product_probs),
            "gap": self.gap,
            "pair_gap": self.pair_gap,
            "dkw_radius": self.dkw_radius,
        }


def independence_gap(counts: JointCounts, confidence: float = 0.99) -> IndependenceReport:
    """Sup-norm gap between joint and product probabilities over the grid.

    ``gap`` uses the triple events ``{Y > a, Z > b, M <= c}``; ``pair_gap``
    the three pairwise products.
    """
    if counts.n == 0:
        raise ValueError("no complete samples")
    n = counts.n
    py, pz, pm = counts.y_gt / n, counts.z_gt / n, counts.m_le / n
    joint = counts.yzm / n
    prod3 = py[:, None, None] * pz[None, :, None] * pm[None, None, :]
    gap = float(np.max(np.abs(joint - prod3)))
    pair_gap = max(
        float(np.max(np.abs(counts.yz / n - np.outer(py, pz)))),
        float(np.max(np.abs(counts.ym / n - np.outer(py, pm)))),
        float(np.max(np.abs(counts.zm / n - np.outer(pz, pm)))),
    )
    grid = [tuple(p) for p in product(*counts.grid)]
    return IndependenceReport(
        grid=grid,
        joint_probs=[float(v) for v in joint.ravel()],
        product_probs=[float(v) for v in prod3.ravel()],
        gap=gap,
        pair_gap=pair_gap,
        dkw_radius=dkw_radius(n, confidence),
    )


def dkw_two_sample_radius(n1: int, n2: int, confidence: float = 0.99) -> float:
    """Bound for the distance between two ECDFs of the same law.

    Each ECDF lies in its own DKW band at level ``(1 + confidence) / 2``, so
    by the triangle inequality both hold with probability ``confidence``.
    """
    half = 0.5 * (1.0 + confidence)
    return dkw_radius(n1, half) + dkw_radius(n2, half)


def merge_all(items: Sequence):
    out = items[0]
    for it in items[1:]:
        out = out.merge(it)
    return out
