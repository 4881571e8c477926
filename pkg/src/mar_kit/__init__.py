"""Matrix autoregression MAR(1): simulation, estimation, inference and forecasting."""

from __future__ import annotations

from .errors import (
    DataError,
    DimensionError,
    MarError,
    NumericError,
    PreconditionError,
    RankDeficiencyError,
)
from .kron import kron, nkp_project, normalize_pair, rearrange, unvec, vec
from .model import CovarianceSpec, MarModel, MatrixSeries, autocovariance, irf_s1, simulate
from .estimators import FitOptions, MarFit, fit, fit_lse, fit_mle, fit_proj, fit_var1

__version__ = "0.1.0"

__all__ = [
    "CovarianceSpec",
    "DataError",
    "DimensionError",
    "FitOptions",
    "MarError",
    "MarFit",
    "MarModel",
    "MatrixSeries",
    "NumericError",
    "PreconditionError",
    "RankDeficiencyError",
    "autocovariance",
    "fit",
    "fit_lse",
    "fit_mle",
    "fit_proj",
    "fit_var1",
    "irf_s1",
    "kron",
    "nkp_project",
    "normalize_pair",
    "rearrange",
    "simulate",
    "unvec",
    "vec",
    "__version__",
]
