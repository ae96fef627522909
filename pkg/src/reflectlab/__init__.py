"""Reflected Lévy processes under Cramér's condition: ladder factorization,
limit laws of overshoot, stationary level and maximum, and exact path
simulation to check them."""

from .errors import ReflectLabError
from .levy_models import BM1, CL1, KOU1, ExpJumps, LevyModel, cramer_gamma, esscher_tilt, psi
from .ladder import LadderFactorization, wh_factorize
from .limit_laws import LimitLawSet, limit_law_set

__version__ = "0.1.0"

__all__ = [
    "ReflectLabError",
    "LevyModel",
    "ExpJumps",
    "CL1",
    "BM1",
    "KOU1",
    "psi",
    "cramer_gamma",
    "esscher_tilt",
    "wh_factorize",
    "LadderFactorization",
    "LimitLawSet",
    "limit_law_set",
]
