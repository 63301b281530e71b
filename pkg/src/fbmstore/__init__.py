"""Fractional Brownian storage: simulation, large-deviations rates and
convergence-to-stationarity metrics."""

__version__ = "0.1.0"

from .fbm_core import FbmPath, HurstParam, Seed, TimeGrid, fbm_covariance, sample_fgn, sample_path
from .rate_variational import ConstraintSet, j_delta, min_norm, phi, single_constraint_rate, theta

__all__ = [
    "FbmPath",
    "HurstParam",
    "Seed",
    "TimeGrid",
    "fbm_covariance",
    "sample_fgn",
    "sample_path",
    "ConstraintSet",
    "min_norm",
    "theta",
    "j_delta",
    "single_constraint_rate",
    "phi",
]
