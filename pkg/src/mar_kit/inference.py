"""Plug-in asymptotic covariances, confidence intervals and the Kronecker specification test.

Layouts: for PROJ the stacked vector is ``(vec A, vec B)`` and the product
vector is ``vec(B) kron vec(A)``; for LSE and MLEs the stacked vector is
``(vec A, vec B')`` and the product is ``vec(B') kron vec(A)``.  All
expectations are replaced by sample averages at the fitted parameters, and
covariances are divided by ``T - 1`` (the number of regression rows).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .errors import NumericError, PreconditionError
from .estimators import MarFit, Var1Fit, fit_var1
from .kron import as_matrix, nkp_project, pinv, rearrange, rearrange_permutation, vec
from .model import MatrixSeries

__all__ = [
    "AsymptoticCovariance",
    "ConfidenceIntervals",
    "SpecTestResult",
    "xi_proj",
    "asymp_cov_proj",
    "asymp_cov_lse",
    "asymp_cov_mle",
    "asymp_cov",
    "regressor_blocks",
    "confidence_intervals",
    "specification_test",
    "chi2_sf",
]


@dataclass(frozen=True)
class AsymptoticCovariance:
    method: str
    xi: np.ndarray
    stacked_cov: np.ndarray
    kron_cov: np.ndarray
    t_used: int
    stacked_estimate: np.ndarray
    kron_estimate: np.ndarray
    m: int
    n: int

    def stacked_labels(self) -> list[str]:
        """Entry names matching ``stacked_estimate`` (1-based, ``A[i,j]``/``B[i,j]``)."""
        m, n = self.m, self.n
        names = [f"A[{i + 1},{j + 1}]" for j in range(m) for i in range(m)]
        if self.method == "PROJ":
            names += [f"B[{i + 1},{j + 1}]" for j in range(n) for i in range(n)]
        else:
            # vec(B') walks B by rows
            names += [f"B[{j + 1},{i + 1}]" for j in range(n) for i in range(n)]
        return names


@dataclass(frozen=True)
class ConfidenceIntervals:
    level: float
    estimate: np.ndarray
    stderr: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    kron_estimate: np.ndarray
    kron_lower: np.ndarray
    kron_upper: np.ndarray

    def marks(self) -> list[str]:
        """``+`` if the interval is strictly above 0, ``-`` if strictly below, else ``0``."""
        return ["+" if lo > 0 else "-" if hi < 0 else "0" for lo, hi in zip(self.lower, self.upper)]

    def covers(self, truth) -> np.ndarray:
        truth = np.asarray(truth, dtype=float)
        return (self.lower <= truth) & (truth <= self.upper)


@dataclass(frozen=True)
class SpecTestResult:
    statistic: float
    df: int
    p_value: float
    D_hat: np.ndarray
    P_hat: np.ndarray
    rank: int
    warnings: tuple[str, ...] = field(default=())

    def reject(self, level: float = 0.05) -> bool:
        return self.p_value < level


def chi2_sf(x: float, df: int) -> float:
    """Upper tail of the chi-square distribution."""
    if x <= 0:
        return 1.0
    return float(special.gammaincc(0.5 * df, 0.5 * x))


def _sym(M: np.ndarray) -> np.ndarray:
    return 0.5 * (M + M.T)


def xi_proj(var1: Var1Fit) -> np.ndarray:
    """Covariance of ``sqrt(T) vec(G(Phi_hat))``: permuted ``inv(Gamma0) kron Sigma``."""
    try:
        g_inv = np.linalg.inv(var1.gamma0)
    except np.linalg.LinAlgError as exc:
        raise NumericError("sample Gamma0 is singular") from exc
    full = np.kron(_sym(g_inv), var1.sigma)
    perm = rearrange_permutation(var1.m, var1.n)
    return _sym(full[np.ix_(perm, perm)])


def _proj_maps(A: np.ndarray, B: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    m, n = A.shape[0], B.shape[0]
    alpha = vec(A)
    nb = np.linalg.norm(B)
    if not nb > 0:
        raise NumericError("B is zero; projection covariance undefined")
    beta1 = vec(B) / nb
    Qa = np.eye(m * m) - np.outer(alpha, alpha)
    Qb = np.eye(n * n) - np.outer(beta1, beta1)
    V0 = np.vstack([np.kron(beta1[None, :], Qa) / nb, np.kron(np.eye(n * n), alpha[None, :])])
    P = np.kron(Qb, Qa)
    V1 = np.eye(m * m * n * n) - P
    return V0, V1, P


def asymp_cov_proj(fit: MarFit, var1: Var1Fit | None = None) -> AsymptoticCovariance:
    """Plug-in covariance of the projection estimator."""
    var1 = var1 if var1 is not None else fit.var1
    if var1 is None:
        raise PreconditionError("projection covariance needs the VAR(1) fit")
    A, B = fit.A, fit.B
    xi = xi_proj(var1)
    V0, V1, _ = _proj_maps(A, B)
    T = var1.t_eff
    return AsymptoticCovariance(
        method="PROJ",
        xi=xi,
        stacked_cov=_sym(V0 @ xi @ V0.T) / T,
        kron_cov=_sym(V1 @ xi @ V1.T) / T,
        t_used=T,
        stacked_estimate=np.concatenate([vec(A), vec(B)]),
        kron_estimate=np.kron(vec(B), vec(A)),
        m=A.shape[0],
        n=B.shape[0],
    )


def regressor_blocks(series: MatrixSeries, A, B) -> np.ndarray:
    """Stack of ``W_t' = [(B X_{t-1}') kron I_m : I_n kron (A X_{t-1})]``, shape ``(T-1, mn, m^2+n^2)``.

    ``W_t' (vec dA, vec dB')`` is the first-order change of ``vec(A X_{t-1} B')``.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    Z = series.values[:-1]
    T1, m, n = Z.shape
    BZt = np.einsum("pq,tiq->tpi", B, Z)  # B X'  (n x m)
    AZ = np.einsum("ij,tjq->tiq", A, Z)  # A X   (m x n)
    left = np.einsum("tpq,ab->tpaqb", BZt, np.eye(m)).reshape(T1, n * m, m * m)
    right = np.einsum("pq,tab->tpaqb", np.eye(n), AZ).reshape(T1, n * m, n * n)
    return np.concatenate([left, right], axis=2)


def _bilinear_maps(A: np.ndarray, B: np.ndarray):
    m, n = A.shape[0], B.shape[0]
    alpha = vec(A)
    beta = vec(B.T)
    gamma = np.concatenate([alpha, np.zeros(n * n)])
    V = np.hstack([np.kron(beta[:, None], np.eye(m * m)), np.kron(np.eye(n * n), alpha[:, None])])
    return alpha, beta, gamma, V


def _sandwich(G: np.ndarray, gamma: np.ndarray, weight: np.ndarray, meat_w: np.ndarray):
    T1 = G.shape[0]
    bread = np.einsum("tki,kl,tlj->ij", G, weight, G) / T1
    H = _sym(bread + np.outer(gamma, gamma))
    meat = bread if meat_w is weight else np.einsum("tki,kl,tlj->ij", G, meat_w, G) / T1
    try:
        H_inv = np.linalg.inv(H)
    except np.linalg.LinAlgError as exc:
        raise NumericError("plug-in H matrix is singular") from exc
    if not np.all(np.isfinite(H_inv)):
        raise NumericError("plug-in H matrix is singular")
    return _sym(H_inv @ _sym(meat) @ H_inv), H


def _residual_sigma(series: MatrixSeries, A, B) -> np.ndarray:
    X = series.values
    R = X[1:] - A @ X[:-1] @ B.T
    r = R.transpose(0, 2, 1).reshape(R.shape[0], -1)
    return _sym(r.T @ r / R.shape[0])


def _bilinear_result(method, A, B, xi, T1) -> AsymptoticCovariance:
    alpha, beta, _, V = _bilinear_maps(A, B)
    return AsymptoticCovariance(
        method=method,
        xi=xi,
        stacked_cov=xi / T1,
        kron_cov=_sym(V @ xi @ V.T) / T1,
        t_used=T1,
        stacked_estimate=np.concatenate([alpha, beta]),
        kron_estimate=np.kron(beta, alpha),
        m=A.shape[0],
        n=B.shape[0],
    )


def asymp_cov_lse(fit: MarFit, series: MatrixSeries, sigma=None) -> AsymptoticCovariance:
    """Sandwich covariance of the least squares estimator.

    ``sigma`` defaults to the sample covariance of the fitted residuals.
    """
    A, B = fit.A, fit.B
    S = _residual_sigma(series, A, B) if sigma is None else as_matrix(sigma, "sigma")
    G = regressor_blocks(series, A, B)
    _, _, gamma, _ = _bilinear_maps(A, B)
    xi, _ = _sandwich(G, gamma, np.eye(G.shape[1]), S)
    return _bilinear_result("LSE", A, B, xi, G.shape[0])


def asymp_cov_mle(fit: MarFit, series: MatrixSeries, sigma=None) -> AsymptoticCovariance:
    """Covariance of the MLE under a Kronecker error covariance.

    ``sigma`` defaults to ``sigma_c kron sigma_r`` of the fit.
    """
    A, B = fit.A, fit.B
    if sigma is None:
        if fit.model.cov.kind != "kronecker":
            raise PreconditionError("MLE covariance needs a fit with Kronecker covariance")
        S = fit.model.sigma
    else:
        S = as_matrix(sigma, "sigma")
    try:
        L = np.linalg.cholesky(S)
    except np.linalg.LinAlgError as exc:
        raise NumericError("error covariance is not positive definite") from exc
    L_inv = np.linalg.inv(L)
    W = L_inv.T @ L_inv
    G = regressor_blocks(series, A, B)
    _, _, gamma, _ = _bilinear_maps(A, B)
    W = _sym(W)
    xi, _ = _sandwich(G, gamma, W, W)
    return _bilinear_result("MLEs", A, B, xi, G.shape[0])


def asymp_cov(fit: MarFit, series: MatrixSeries) -> AsymptoticCovariance:
    """Dispatch on ``fit.method``."""
    if fit.method == "PROJ":
        return asymp_cov_proj(fit, fit.var1 if fit.var1 is not None else fit_var1(series))
    if fit.method == "LSE":
        return asymp_cov_lse(fit, series)
    if fit.method == "MLEs":
        return asymp_cov_mle(fit, series)
    raise ValueError(f"unknown method {fit.method!r}")


def _z(level: float) -> float:
    if not 0 < level < 1:
        raise ValueError("level must lie in (0, 1)")
    return float(special.ndtri(0.5 * (1.0 + level)))


def _stderr(var: np.ndarray, scale: float) -> np.ndarray:
    tol = 1e-8 * max(scale, 1.0)
    if np.any(var < -tol):
        raise NumericError(f"negative variance {var.min():.3g} in asymptotic covariance")
    return np.sqrt(np.clip(var, 0.0, None))


def confidence_intervals(cov: AsymptoticCovariance, level: float = 0.95, estimate=None) -> ConfidenceIntervals:
    """Normal-theory intervals ``estimate +- z * se`` for stacked and product entries."""
    z = _z(level)
    est = cov.stacked_estimate if estimate is None else np.asarray(estimate, dtype=float)
    se = _stderr(np.diag(cov.stacked_cov), float(np.trace(np.abs(cov.stacked_cov))))
    kse = _stderr(np.diag(cov.kron_cov), float(np.trace(np.abs(cov.kron_cov))))
    return ConfidenceIntervals(
        level=level,
        estimate=est,
        stderr=se,
        lower=est - z * se,
        upper=est + z * se,
        kron_estimate=cov.kron_estimate,
        kron_lower=cov.kron_estimate - z * kse,
        kron_upper=cov.kron_estimate + z * kse,
    )


def specification_test(series: MatrixSeries, var1: Var1Fit | None = None) -> SpecTestResult:
    """Wald-type test of ``Phi = B kron A`` against an unrestricted VAR(1)."""
    m, n = series.m, series.n
    var1 = var1 if var1 is not None else fit_var1(series)
    A1, B1 = nkp_project(var1.phi, m, n, 1)[0]
    D = rearrange(var1.phi, m, n) - np.outer(vec(A1), vec(B1))
    xi = xi_proj(var1)
    _, _, P = _proj_maps(A1, B1)
    M = _sym(P @ xi @ P)
    df = (m * m - 1) * (n * n - 1)
    warnings = []
    sv = np.linalg.svd(M, compute_uv=False)
    rank = int(np.sum(sv > np.finfo(float).eps * M.shape[0] * (sv[0] if sv.size else 0.0) * 10))
    if rank != df:
        warnings.append(f"numerical rank {rank} of P Xi P differs from df {df}")
    if df == 0:
        return SpecTestResult(0.0, 0, 1.0, D, P, rank, tuple(warnings))
    d = vec(D)
    stat = float(var1.t_eff * d @ pinv(M, rank=df) @ d)
    stat = max(stat, 0.0)
    return SpecTestResult(
        statistic=stat,
        df=df,
        p_value=chi2_sf(stat, df),
        D_hat=D,
        P_hat=P,
        rank=rank,
        warnings=tuple(warnings),
    )
