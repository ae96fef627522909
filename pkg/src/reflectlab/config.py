"""Experiment configuration files (TOML).

Sections: ``model`` (the Lévy model), ``sim`` (sampling), ``grid``
(coupled (t, x) grid and y offset), ``limits`` (tables for the limit
laws), ``plot`` (plot-data grids) and ``verify`` (suite settings).  See
``configs/`` in the repository for annotated files.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Optional

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .checks import SuiteSettings
from .errors import ConfigError, ModelError
from .levy_models import LevyModel

__all__ = ["Experiment", "GridSettings", "load_experiment", "experiment_from_mapping"]

_SECTIONS = {"model", "sim", "grid", "limits", "plot", "verify"}
_SIM_KEYS = {"n", "seed", "t", "x", "y_offset", "step", "horizon", "regenerate"}
_GRID_KEYS = {"lambda", "x_list", "y_offset"}


@dataclass(frozen=True)
class GridSettings:
    lambda_scale: Optional[float] = None
    x_list: tuple = ()
    y_offset: float = 0.0


@dataclass(frozen=True)
class Experiment:
    model: Optional[LevyModel]
    sim: dict = field(default_factory=dict)
    grid: GridSettings = GridSettings()
    limits: dict = field(default_factory=dict)
    plot: dict = field(default_factory=dict)
    verify: SuiteSettings = SuiteSettings()
    source: Optional[str] = None

    def require_model(self) -> LevyModel:
        if self.model is None:
            raise ConfigError("config has no [model] section")
        return self.model


def _floats(values, name: str) -> tuple:
    try:
        out = tuple(float(v) for v in values)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name} must be a list of numbers") from exc
    if not all(math.isfinite(v) for v in out):
        raise ConfigError(f"{name} must be finite")
    return out


def experiment_from_mapping(doc: Mapping[str, Any], source: Optional[str] = None) -> Experiment:
    unknown = set(doc) - _SECTIONS
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")
    model = None
    if "model" in doc:
        try:
            model = LevyModel.from_mapping(doc["model"])
        except (TypeError, ValueError) as exc:
            raise ModelError(f"bad model section: {exc}") from exc

    sim = dict(doc.get("sim", {}))
    bad = set(sim) - _SIM_KEYS
    if bad:
        raise ConfigError(f"unknown sim keys: {sorted(bad)}")

    g = dict(doc.get("grid", {}))
    bad = set(g) - _GRID_KEYS
    if bad:
        raise ConfigError(f"unknown grid keys: {sorted(bad)}")
    if "t" in g:
        raise ConfigError("grid times are derived from lambda and gamma; do not set grid.t")
    lam = g.get("lambda")
    if lam is not None and not float(lam) > 0:
        raise ConfigError("grid.lambda must be positive")
    grid = GridSettings(
        lambda_scale=None if lam is None else float(lam),
        x_list=_floats(g.get("x_list", ()), "grid.x_list"),
        y_offset=float(g.get("y_offset", sim.get("y_offset", 0.0))),
    )
    if "x_list" in g and not grid.x_list:
        raise ConfigError("grid.x_list is empty")
    if grid.x_list and grid.lambda_scale is None:
        raise ConfigError("grid.x_list needs grid.lambda")

    return Experiment(
        model=model,
        sim=sim,
        grid=grid,
        limits=dict(doc.get("limits", {})),
        plot=dict(doc.get("plot", {})),
        verify=SuiteSettings.from_mapping(doc.get("verify")),
        source=source,
    )


def load_experiment(path: str | Path) -> Experiment:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    try:
        doc = tomllib.loads(raw.decode("utf-8"))
    except (tomllib.TOMLDecodeError, UnicodeDecodeError) as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    return experiment_from_mapping(doc, source=str(path))
