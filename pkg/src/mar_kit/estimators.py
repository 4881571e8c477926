"""Estimators for MAR(1): unrestricted VAR(1), projection, iterated least squares, MLE.

Method tags: ``"PROJ"`` (nearest Kronecker product of the VAR(1) estimate),
``"LSE"`` (alternating least squares) and ``"MLEs"`` (Gaussian MLE with a
Kronecker-structured innovation covariance).  All fits are intercept-free;
demean the data beforehand if needed.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import NumericError, PreconditionError, RankDeficiencyError
from .kron import normalize_pair, nkp_project
from .model import CovarianceSpec, MarModel, MatrixSeries, is_stationary

logger = logging.getLogger(__name__)

__all__ = [
    "Var1Fit",
    "MarFit",
    "FitOptions",
    "fit_var1",
    "fit_proj",
    "fit_lse",
    "fit_mle",
    "fit",
    "normalize_pair",
    "lse_objective",
    "neg_loglik",
    "METHODS",
]

METHODS = ("PROJ", "LSE", "MLEs")


@dataclass(frozen=True)
class Var1Fit:
    """Least squares fit of ``vec(X_t) = Phi vec(X_{t-1}) + e_t``."""

    phi: np.ndarray
    sigma: np.ndarray
    gamma0: np.ndarray
    t_eff: int
    m: int
    n: int

    @property
    def residual_rss(self) -> float:
        return float(np.trace(self.sigma) * self.t_eff)


@dataclass(frozen=True)
class MarFit:
    """Result of fitting a MAR(1) model.

    ``objective_trace`` holds the least squares objective (LSE, PROJ) or the
    negative log likelihood without constants (MLEs), starting from the
    initial value.  ``stationary`` reports ``rho(A) rho(B) < 1`` for the
    estimate; causality is not enforced.
    """

    model: MarModel
    method: str
    iterations: int
    objective_trace: tuple[float, ...]
    converged: bool
    residuals: MatrixSeries
    stationary: bool = True
    var1: Var1Fit | None = None
    events: tuple[str, ...] = ()

    @property
    def A(self) -> np.ndarray:
        return self.model.A

    @property
    def B(self) -> np.ndarray:
        return self.model.B

    @property
    def phi(self) -> np.ndarray:
        return self.model.phi

    @property
    def rss(self) -> float:
        return float(np.sum(self.residuals.values ** 2))


@dataclass(frozen=True)
class FitOptions:
    """Iteration controls for LSE and MLEs.

    ``init`` is ``"proj"`` (default), ``"identity"`` or an ``(A, B)`` pair.
    """

    max_iter: int = 500
    rel_tol: float = 1e-8
    init: object = "proj"

    def __post_init__(self):
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if not self.rel_tol > 0:
            raise ValueError("rel_tol must be positive")


def _lagged(series: MatrixSeries) -> tuple[np.ndarray, np.ndarray]:
    X = series.values
    return np.ascontiguousarray(X[1:]), np.ascontiguousarray(X[:-1])


def fit_var1(series: MatrixSeries) -> Var1Fit:
    """OLS for the stacked VAR(1) without intercept."""
    T, m, n = series.T, series.m, series.n
    d = m * n
    if T < d + 2:
        raise RankDeficiencyError(
            f"VAR(1) needs T >= mn + 2 = {d + 2} time points for dimension mn = {d}; got T = {T}"
        )
    V = series.vecs()
    Y, X = V[1:], V[:-1]
    XtX = X.T @ X
    rank = np.linalg.matrix_rank(XtX)
    if rank < d:
        raise RankDeficiencyError(
            f"VAR(1) design matrix has rank {rank} < mn = {d} (dimension {d} regressors)"
        )
    phi = np.linalg.solve(XtX, X.T @ Y).T
    resid = Y - X @ phi.T
    t_eff = T - 1
    sigma = resid.T @ resid / t_eff
    gamma0 = XtX / t_eff
    return Var1Fit(
        phi=phi,
        sigma=0.5 * (sigma + sigma.T),
        gamma0=0.5 * (gamma0 + gamma0.T),
        t_eff=t_eff,
        m=m,
        n=n,
    )


def _residuals(Y: np.ndarray, Z: np.ndarray, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    return Y - A @ Z @ B.T


def lse_objective(series: MatrixSeries, A, B) -> float:
    """``sum_t ||X_t - A X_{t-1} B'||_F^2``."""
    Y, Z = _lagged(series)
    return float(np.sum(_residuals(Y, Z, np.asarray(A), np.asarray(B)) ** 2))


def neg_loglik(series: MatrixSeries, A, B, sigma_c, sigma_r) -> float:
    """Negative Gaussian log likelihood (constants dropped) under ``sigma_c kron sigma_r``."""
    Y, Z = _lagged(series)
    return _neg_loglik(Y, Z, np.asarray(A), np.asarray(B), np.asarray(sigma_c), np.asarray(sigma_r))


def _neg_loglik(Y, Z, A, B, Sc, Sr) -> float:
    T1, m, n = Y.shape
    R = _residuals(Y, Z, A, B)
    Sr_inv = np.linalg.inv(Sr)
    Sc_inv = np.linalg.inv(Sc)
    quad = float(np.einsum("ij,tjk,kl,til->", Sr_inv, R, Sc_inv, R))
    _, ld_c = np.linalg.slogdet(Sc)
    _, ld_r = np.linalg.slogdet(Sr)
    return m * T1 * ld_c + n * T1 * ld_r + quad


def _finish(series, A, B, cov, method, iterations, trace, converged, var1=None, events=()):
    A, B = normalize_pair(A, B)
    model = MarModel(A, B, cov)
    Y, Z = _lagged(series)
    resid = MatrixSeries(_residuals(Y, Z, A, B), series.row_labels, series.col_labels)
    ok, rho = is_stationary(model)
    if not ok:
        logger.warning("%s estimate is not causal: rho(A)*rho(B) = %.4g", method, rho)
    return MarFit(
        model=model,
        method=method,
        iterations=iterations,
        objective_trace=tuple(float(v) for v in trace),
        converged=converged,
        residuals=resid,
        stationary=ok,
        var1=var1,
        events=tuple(events),
    )


def _residual_cov(series: MatrixSeries, A, B) -> CovarianceSpec:
    Y, Z = _lagged(series)
    R = _residuals(Y, Z, A, B)
    r = R.transpose(0, 2, 1).reshape(R.shape[0], -1)
    S = r.T @ r / R.shape[0]
    S = 0.5 * (S + S.T)
    try:
        return CovarianceSpec.full(S)
    except PreconditionError:
        # degenerate residuals (e.g. noiseless data): fall back to the diagonal
        v = np.maximum(np.diag(S), np.finfo(float).tiny)
        return CovarianceSpec.diagonal(v)


def fit_proj(series: MatrixSeries) -> MarFit:
    """Projection estimator: nearest Kronecker product of the VAR(1) estimate."""
    var1 = fit_var1(series)
    A, B = nkp_project(var1.phi, series.m, series.n, 1)[0]
    obj = lse_objective(series, A, B)
    return _finish(
        series, A, B, _residual_cov(series, A, B), "PROJ", 1, [obj], True, var1=var1
    )


def _initial_pair(series: MatrixSeries, init) -> tuple[np.ndarray, np.ndarray, Var1Fit | None]:
    m, n = series.m, series.n
    if isinstance(init, str):
        key = init.lower()
        if key == "proj":
            try:
                var1 = fit_var1(series)
            except RankDeficiencyError:
                return np.eye(m) / np.sqrt(m), np.eye(n) * np.sqrt(m), None
            A, B = nkp_project(var1.phi, m, n, 1)[0]
            return A, B, var1
        if key == "identity":
            return np.eye(m) / np.sqrt(m), np.eye(n) * np.sqrt(m), None
        raise ValueError(f"unknown init {init!r}")
    A, B = init
    A = np.array(A, dtype=float)
    B = np.array(B, dtype=float)
    if A.shape != (m, m) or B.shape != (n, n):
        raise ValueError("provided initial (A, B) have wrong shapes")
    return A, B, None


def _solve_right(num: np.ndarray, den: np.ndarray, what: str, it: int) -> np.ndarray:
    """Return ``num @ inv(den)``."""
    try:
        out = np.linalg.solve(den.T, num.T).T
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"singular {what}-update matrix at iteration {it}") from exc
    if not np.all(np.isfinite(out)):
        raise NumericError(f"non-finite {what}-update at iteration {it}")
    return out


def _update_B(Y, Z, Yt, Zt, A, Wr, it):
    # B <- (sum X_t' Wr A X_{t-1}) (sum X_{t-1}' A' Wr A X_{t-1})^{-1}
    K = Wr @ A
    num = kernels.cross_sum(Yt, Zt, K)
    den = kernels.quad_sum(Zt, A.T @ K)
    return _solve_right(num, den, "B", it)


def _update_A(Y, Z, B, Wc, it):
    # A <- (sum X_t Wc B X_{t-1}') (sum X_{t-1} B' Wc B X_{t-1}')^{-1}
    K = Wc @ B
    num = kernels.cross_sum(Y, Z, K)
    den = kernels.quad_sum(Z, B.T @ K)
    return _solve_right(num, den, "A", it)


def _rescale(A, B):
    s = np.linalg.norm(A)
    if not s > 0:
        raise NumericError("A collapsed to zero during iteration")
    return A / s, B * s


def _rel_change(prev: float, cur: float, scale: float | None = None) -> float:
    if scale is not None and cur <= 1e-30 * scale:
        return 0.0
    return abs(prev - cur) / max(abs(prev), 1e-300)


def fit_lse(series: MatrixSeries, opts: FitOptions | None = None) -> MarFit:
    """Iterated least squares: alternate exact B- and A-updates until the objective settles."""
    opts = opts or FitOptions()
    if series.T < 3:
        raise PreconditionError("LSE needs T >= 3")
    Y, Z = _lagged(series)
    Yt = np.ascontiguousarray(Y.transpose(0, 2, 1))
    Zt = np.ascontiguousarray(Z.transpose(0, 2, 1))
    Im, In = np.eye(series.m), np.eye(series.n)
    A, B, var1 = _initial_pair(series, opts.init)
    A, B = _rescale(A, B)
    scale = float(np.sum(Y ** 2)) or 1.0
    trace = [float(np.sum(_residuals(Y, Z, A, B) ** 2))]
    converged = False
    it = 0
    for it in range(1, opts.max_iter + 1):
        B = _update_B(Y, Z, Yt, Zt, A, Im, it)
        A = _update_A(Y, Z, B, In, it)
        A, B = _rescale(A, B)
        trace.append(float(np.sum(_residuals(Y, Z, A, B) ** 2)))
        if _rel_change(trace[-2], trace[-1], scale) < opts.rel_tol:
            converged = True
            break
    return _finish(series, A, B, _residual_cov(series, A, B), "LSE", it, trace, converged, var1=var1)


def _spd_inverse(S: np.ndarray, name: str, cycle: int, events: list) -> np.ndarray:
    try:
        L = np.linalg.cholesky(S)
    except np.linalg.LinAlgError:
        ridge = 1e-10 * max(1.0, float(np.trace(S)) / S.shape[0])
        events.append(f"cycle {cycle}: ridge {ridge:.3g} added to {name}")
        try:
            L = np.linalg.cholesky(S + ridge * np.eye(S.shape[0]))
        except np.linalg.LinAlgError as exc:
            raise NumericError(f"{name} lost positive definiteness at cycle {cycle}") from exc
    Linv = np.linalg.inv(L)
    return Linv.T @ Linv


def fit_mle(
    series: MatrixSeries, opts: FitOptions | None = None, fixed_cov: bool = False
) -> MarFit:
    """MLE under ``Cov(vec E_t) = sigma_c kron sigma_r``.

    Cycles the exact block updates of ``A``, ``B``, ``sigma_c``, ``sigma_r``,
    then rescales so ``||A||_F = ||sigma_r||_F = 1``.  With ``fixed_cov`` the
    covariance stays at the identity and the iteration reduces to LSE.
    """
    opts = opts or FitOptions()
    T, m, n = series.T, series.m, series.n
    if T < 3:
        raise PreconditionError("MLEs needs T >= 3")
    if not (m * (T - 1) > n and n * (T - 1) > m):
        raise PreconditionError("MLEs needs m(T-1) > n and n(T-1) > m")
    Y, Z = _lagged(series)
    Yt = np.ascontiguousarray(Y.transpose(0, 2, 1))
    Zt = np.ascontiguousarray(Z.transpose(0, 2, 1))
    T1 = T - 1
    A, B, var1 = _initial_pair(series, opts.init)
    A, B = _rescale(A, B)
    Sc, Sr = np.eye(n), np.eye(m)
    Wc, Wr = np.eye(n), np.eye(m)
    events: list[str] = []
    scale = float(np.sum(Y ** 2)) or 1.0
    trace = [float(np.sum(_residuals(Y, Z, A, B) ** 2)) if fixed_cov else _neg_loglik(Y, Z, A, B, Sc, Sr)]
    converged = False
    it = 0
    for it in range(1, opts.max_iter + 1):
        if fixed_cov:
            # same sweep order as fit_lse so the iterates coincide
            B = _update_B(Y, Z, Yt, Zt, A, Wr, it)
            A = _update_A(Y, Z, B, Wc, it)
        else:
            A = _update_A(Y, Z, B, Wc, it)
            B = _update_B(Y, Z, Yt, Zt, A, Wr, it)
        if not fixed_cov:
            R = _residuals(Y, Z, A, B)
            Rt = np.ascontiguousarray(R.transpose(0, 2, 1))
            Sc = kernels.quad_sum(Rt, Wr) / (m * T1)
            Wc = _spd_inverse(Sc, "sigma_c", it, events)
            Sr = kernels.quad_sum(np.ascontiguousarray(R), Wc) / (n * T1)
            Wr = _spd_inverse(Sr, "sigma_r", it, events)
            c = np.linalg.norm(Sr)
            Sr, Sc = Sr / c, Sc * c
            Wr, Wc = Wr * c, Wc / c
        A, B = _rescale(A, B)
        if fixed_cov:
            # with identity covariance the NLL is the least squares objective
            trace.append(float(np.sum(_residuals(Y, Z, A, B) ** 2)))
        else:
            trace.append(_safe_nll(Y, Z, A, B, Sc, Sr))
        if fixed_cov:
            done = _rel_change(trace[-2], trace[-1], scale) < opts.rel_tol
        else:
            done = _rel_change(trace[-2], trace[-1]) < opts.rel_tol
        if done:
            converged = True
            break
    cov = CovarianceSpec.identity() if fixed_cov else CovarianceSpec.kronecker(Sc, Sr)
    return _finish(series, A, B, cov, "MLEs", it, trace, converged, var1=var1, events=events)


def _safe_nll(Y, Z, A, B, Sc, Sr) -> float:
    try:
        return _neg_loglik(Y, Z, A, B, Sc, Sr)
    except np.linalg.LinAlgError:
        return float("nan")


def fit(series: MatrixSeries, method: str, opts: FitOptions | None = None) -> MarFit:
    """Dispatch on a method name (``proj``, ``lse``, ``mle``/``mles``; case-insensitive)."""
    key = method.lower()
    if key == "proj":
        return fit_proj(series)
    if key == "lse":
        return fit_lse(series, opts)
    if key in ("mle", "mles"):
        return fit_mle(series, opts)
    raise ValueError(f"unknown method {method!r}")
