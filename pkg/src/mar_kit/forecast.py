"""One-step prediction, residual diagnostics and rolling out-of-sample evaluation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, PreconditionError
from .estimators import FitOptions, fit_lse, fit_mle, fit_proj, fit_var1
from .kron import as_matrix
from .model import MatrixSeries

__all__ = [
    "predict_one",
    "residuals",
    "rss",
    "AcfReport",
    "acf",
    "ForecastReport",
    "rolling_forecast",
    "fit_iar",
    "FORECAST_METHODS",
]

FORECAST_METHODS = ("PROJ", "LSE", "MLEs", "VAR1", "iAR1", "iAR2")


def _coefs(fit):
    # accepts MarFit, MarModel or anything exposing A and B
    return np.asarray(fit.A, dtype=float), np.asarray(fit.B, dtype=float)


def predict_one(fit, X) -> np.ndarray:
    """Conditional mean ``A X B'`` of the next observation."""
    A, B = _coefs(fit)
    X = as_matrix(X, "X")
    if X.shape != (A.shape[0], B.shape[0]):
        raise DimensionError(f"X is {X.shape}, fit expects {(A.shape[0], B.shape[0])}")
    return A @ X @ B.T


def residuals(fit, series: MatrixSeries) -> MatrixSeries:
    """``R_t = X_t - A X_{t-1} B'`` for ``t = 2..T``."""
    A, B = _coefs(fit)
    if (series.m, series.n) != (A.shape[0], B.shape[0]):
        raise DimensionError("series dimensions do not match the fit")
    X = series.values
    return MatrixSeries(X[1:] - A @ X[:-1] @ B.T, series.row_labels, series.col_labels)


def rss(resid: MatrixSeries) -> float:
    """Sum over ``t`` of ``||R_t||_F^2``."""
    return float(np.sum(np.asarray(resid.values) ** 2))


@dataclass(frozen=True)
class AcfReport:
    """``values[h, i, j]``: lag-``h`` autocorrelation of series ``(i, j)``, ``h = 0..max_lag``."""

    values: np.ndarray
    n_obs: int

    @property
    def max_lag(self) -> int:
        return self.values.shape[0] - 1

    def band(self, z: float = 1.96) -> float:
        """Half-width of the usual white-noise band ``z / sqrt(T)``."""
        return z / np.sqrt(self.n_obs)


def acf(series: MatrixSeries, max_lag: int) -> AcfReport:
    """Biased sample autocorrelations of every entry series, demeaned.

    A constant series has no defined correlation; its lags ``>= 1`` are set to 0.
    """
    X = series.values
    T = X.shape[0]
    if not 0 <= max_lag < T - 1:
        raise PreconditionError(f"max_lag must lie in [0, {T - 2}] for T = {T}")
    D = X - X.mean(axis=0)
    out = np.empty((max_lag + 1,) + X.shape[1:])
    g0 = np.sum(D * D, axis=0) / T
    safe = np.where(g0 > 0, g0, 1.0)
    out[0] = 1.0
    for h in range(1, max_lag + 1):
        gh = np.sum(D[h:] * D[:-h], axis=0) / T
        out[h] = np.where(g0 > 0, gh / safe, 0.0)
    return AcfReport(np.clip(out, -1.0, 1.0), T)


def fit_iar(x: np.ndarray, p: int, intercept: bool = True) -> np.ndarray:
    """OLS coefficients ``(c, phi_1..phi_p)`` of a scalar AR(p); ``c`` is 0 without intercept."""
    x = np.asarray(x, dtype=float)
    N = x.shape[0] - p
    cols = [x[p - k - 1 : p - k - 1 + N] for k in range(p)]
    if intercept:
        cols = [np.ones(N)] + cols
    Xd = np.column_stack(cols)
    coef, *_ = np.linalg.lstsq(Xd, x[p:], rcond=None)
    return coef if intercept else np.concatenate([[0.0], coef])


@dataclass(frozen=True)
class ForecastReport:
    """Rolling one-step forecasts for targets ``t0 .. T-1`` (0-based)."""

    method: str
    t0: int
    predictions: np.ndarray
    sq_errors: np.ndarray
    refit_each_step: bool

    @property
    def total(self) -> float:
        return float(np.sum(self.sq_errors))

    @property
    def steps(self) -> int:
        return self.sq_errors.shape[0]


def _min_history(method: str, m: int, n: int, intercept: bool) -> int:
    if method in ("PROJ", "VAR1"):
        return m * n + 2
    if method in ("LSE", "MLEs"):
        return 3
    if method == "iAR1":
        return 3 + int(intercept)
    if method == "iAR2":
        return 5 + int(intercept)
    raise ValueError(f"unknown method {method!r}; expected one of {FORECAST_METHODS}")


def _make_predictor(method: str, hist: np.ndarray, opts: FitOptions | None, intercept: bool):
    series = MatrixSeries(hist)
    if method in ("PROJ", "LSE", "MLEs"):
        fitter = {"PROJ": lambda s: fit_proj(s), "LSE": lambda s: fit_lse(s, opts),
                  "MLEs": lambda s: fit_mle(s, opts)}[method]
        f = fitter(series)
        A, B = f.A, f.B
        return lambda h: A @ h[-1] @ B.T
    if method == "VAR1":
        phi = fit_var1(series).phi
        m, n = hist.shape[1:]

        def var_pred(h):
            v = phi @ h[-1].T.reshape(-1)
            return v.reshape(n, m).T

        return var_pred
    p = 1 if method == "iAR1" else 2
    m, n = hist.shape[1:]
    coefs = np.empty((m, n, p + 1))
    for i in range(m):
        for j in range(n):
            coefs[i, j] = fit_iar(hist[:, i, j], p, intercept)

    def iar_pred(h):
        out = coefs[:, :, 0].copy()
        for k in range(p):
            out += coefs[:, :, k + 1] * h[-1 - k]
        return out

    return iar_pred


def rolling_forecast(
    series: MatrixSeries,
    t0: int,
    method: str,
    refit_each_step: bool = True,
    opts: FitOptions | None = None,
    intercept: bool = True,
) -> ForecastReport:
    """One-step forecasts of ``X_t`` for ``t = t0 .. T-1`` (0-based) from data before ``t``.

    With ``refit_each_step`` the model is re-estimated on ``X_0 .. X_{t-1}``
    before every forecast; otherwise it is estimated once on ``X_0 .. X_{t0-1}``.
    ``intercept`` applies to the iAR baselines only.
    """
    X = series.values
    T, m, n = X.shape
    need = _min_history(method, m, n, intercept)
    if t0 < need:
        raise PreconditionError(f"{method} needs at least {need} observations before the first target; t0 = {t0}")
    if t0 >= T:
        raise PreconditionError(f"t0 = {t0} leaves no targets in a series of length {T}")
    preds = np.empty((T - t0, m, n))
    predictor = None
    for t in range(t0, T):
        if predictor is None or refit_each_step:
            predictor = _make_predictor(method, X[:t], opts, intercept)
        preds[t - t0] = predictor(X[:t])
    err = np.sum((preds - X[t0:]) ** 2, axis=(1, 2))
    return ForecastReport(method, t0, preds, err, refit_each_step)
