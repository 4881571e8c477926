"""MAR(1) model objects, simulation, autocovariances and impulse responses.

The model is ``X_t = A X_{t-1} B' + E_t`` with ``A`` of size ``m x m`` and
``B`` of size ``n x n``; in vectorized form ``vec(X_t) = (B kron A) vec(X_{t-1})
+ vec(E_t)``.  ``A`` is normalized to unit Frobenius norm.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import kernels
from .errors import DimensionError, NumericError, PreconditionError
from .kron import as_matrix, normalize_pair, spectral_radius, unvec, vec

__all__ = [
    "MatrixSeries",
    "CovarianceSpec",
    "MarModel",
    "IrfResult",
    "is_stationary",
    "simulate",
    "simulate_var1",
    "autocovariance",
    "irf_s1",
    "random_model",
    "random_covariance",
    "haar_orthogonal",
]


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class MatrixSeries:
    """``T`` consecutive ``m x n`` observations, stored as a ``(T, m, n)`` array."""

    values: np.ndarray
    row_labels: tuple[str, ...] | None = None
    col_labels: tuple[str, ...] | None = None

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim == 2:
            vals = vals[:, :, None]
        if vals.ndim != 3:
            raise DimensionError(f"series values must be (T, m, n), got {vals.shape}")
        if not np.all(np.isfinite(vals)):
            raise NumericError("series contains non-finite values")
        object.__setattr__(self, "values", _readonly(vals))
        T, m, n = vals.shape
        for name, labels, size in (("row", self.row_labels, m), ("col", self.col_labels, n)):
            if labels is not None:
                labels = tuple(str(x) for x in labels)
                if len(labels) != size:
                    raise DimensionError(f"{len(labels)} {name} labels for {size} {name}s")
                object.__setattr__(self, f"{name}_labels", labels)

    @property
    def T(self) -> int:
        return self.values.shape[0]

    @property
    def m(self) -> int:
        return self.values.shape[1]

    @property
    def n(self) -> int:
        return self.values.shape[2]

    def __len__(self) -> int:
        return self.T

    def vecs(self) -> np.ndarray:
        """``(T, mn)`` array whose row ``t`` is ``vec(X_t)``."""
        return self.values.transpose(0, 2, 1).reshape(self.T, self.m * self.n)

    def window(self, start: int = 0, stop: int | None = None) -> "MatrixSeries":
        return MatrixSeries(self.values[start:stop], self.row_labels, self.col_labels)

    def transpose(self) -> "MatrixSeries":
        """Series of transposed observations (rows and columns swapped)."""
        return MatrixSeries(self.values.transpose(0, 2, 1), self.col_labels, self.row_labels)

    def labels(self) -> tuple[tuple[str, ...], tuple[str, ...]]:
        rows = self.row_labels or tuple(str(i + 1) for i in range(self.m))
        cols = self.col_labels or tuple(str(j + 1) for j in range(self.n))
        return rows, cols


def _check_spd(S: np.ndarray, name: str) -> np.ndarray:
    S = as_matrix(S, name)
    if S.shape[0] != S.shape[1]:
        raise DimensionError(f"{name} must be square, got {S.shape}")
    if not np.allclose(S, S.T, rtol=1e-10, atol=1e-12):
        raise PreconditionError(f"{name} is not symmetric")
    S = 0.5 * (S + S.T)
    try:
        np.linalg.cholesky(S)
    except np.linalg.LinAlgError as exc:
        raise PreconditionError(f"{name} is not positive definite") from exc
    return S


@dataclass(frozen=True)
class CovarianceSpec:
    """Covariance of ``vec(E_t)``.

    ``kind`` is one of ``"identity"``, ``"diagonal"``, ``"full"`` or
    ``"kronecker"``.  Use the classmethod constructors.  The Kronecker kind
    represents ``sigma_c kron sigma_r`` with ``||sigma_r||_F = 1``.
    """

    kind: str
    variances: np.ndarray | None = None
    sigma: np.ndarray | None = None
    sigma_c: np.ndarray | None = None
    sigma_r: np.ndarray | None = None

    @classmethod
    def identity(cls) -> "CovarianceSpec":
        return cls("identity")

    @classmethod
    def diagonal(cls, variances) -> "CovarianceSpec":
        v = np.asarray(variances, dtype=float).ravel()
        if not np.all(np.isfinite(v)) or np.any(v <= 0):
            raise PreconditionError("diagonal variances must be positive and finite")
        return cls("diagonal", variances=_readonly(v))

    @classmethod
    def full(cls, sigma) -> "CovarianceSpec":
        return cls("full", sigma=_readonly(_check_spd(sigma, "sigma")))

    @classmethod
    def kronecker(cls, sigma_c, sigma_r) -> "CovarianceSpec":
        Sc = _check_spd(sigma_c, "sigma_c")
        Sr = _check_spd(sigma_r, "sigma_r")
        scale = np.linalg.norm(Sr)
        return cls("kronecker", sigma_c=_readonly(Sc * scale), sigma_r=_readonly(Sr / scale))

    def check_dims(self, m: int, n: int) -> None:
        d = m * n
        if self.kind == "diagonal" and self.variances.size != d:
            raise DimensionError(f"{self.variances.size} variances for dimension {d}")
        if self.kind == "full" and self.sigma.shape != (d, d):
            raise DimensionError(f"sigma is {self.sigma.shape}, expected {d}x{d}")
        if self.kind == "kronecker" and (
            self.sigma_r.shape != (m, m) or self.sigma_c.shape != (n, n)
        ):
            raise DimensionError("sigma_r / sigma_c shapes do not match (m, n)")

    def matrix(self, m: int, n: int) -> np.ndarray:
        """The full ``mn x mn`` covariance matrix."""
        self.check_dims(m, n)
        if self.kind == "identity":
            return np.eye(m * n)
        if self.kind == "diagonal":
            return np.diag(self.variances)
        if self.kind == "full":
            return np.array(self.sigma)
        return np.kron(self.sigma_c, self.sigma_r)

    def sample(self, rng: np.random.Generator, size: int, m: int, n: int) -> np.ndarray:
        """Draw ``size`` Gaussian innovation matrices, shape ``(size, m, n)``."""
        self.check_dims(m, n)
        Z = rng.standard_normal((size, m, n))
        if self.kind == "identity":
            return Z
        if self.kind == "kronecker":
            # E = Sr^{1/2} Z Sc^{1/2'} with Cholesky square roots
            Lr = np.linalg.cholesky(self.sigma_r)
            Lc = np.linalg.cholesky(self.sigma_c)
            return Lr @ Z @ Lc.T
        z = Z.transpose(0, 2, 1).reshape(size, m * n)
        if self.kind == "diagonal":
            e = z * np.sqrt(self.variances)
        else:
            e = z @ np.linalg.cholesky(self.sigma).T
        return e.reshape(size, n, m).transpose(0, 2, 1)


@dataclass(frozen=True)
class MarModel:
    """Coefficients ``(A, B)`` and innovation covariance of a MAR(1) model.

    ``check_norm=False`` skips the ``||A||_F = 1`` check (for degenerate
    test models such as ``A = 0``).
    """

    A: np.ndarray
    B: np.ndarray
    cov: CovarianceSpec = field(default_factory=CovarianceSpec.identity)
    check_norm: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        A = as_matrix(self.A, "A")
        B = as_matrix(self.B, "B")
        if A.shape[0] != A.shape[1] or B.shape[0] != B.shape[1]:
            raise DimensionError("A and B must be square")
        if self.check_norm and abs(np.linalg.norm(A) - 1.0) > 1e-10:
            raise PreconditionError(f"||A||_F must be 1, got {np.linalg.norm(A):.6g}")
        self.cov.check_dims(A.shape[0], B.shape[0])
        object.__setattr__(self, "A", _readonly(A))
        object.__setattr__(self, "B", _readonly(B))

    @classmethod
    def from_pair(cls, A, B, cov: CovarianceSpec | None = None) -> "MarModel":
        """Build a model after normalizing ``(A, B)``."""
        A, B = normalize_pair(A, B)
        return cls(A, B, cov or CovarianceSpec.identity())

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @property
    def n(self) -> int:
        return self.B.shape[0]

    @property
    def phi(self) -> np.ndarray:
        """VAR(1) coefficient ``B kron A``."""
        return np.kron(self.B, self.A)

    @property
    def sigma(self) -> np.ndarray:
        return self.cov.matrix(self.m, self.n)


def is_stationary(model: MarModel) -> tuple[bool, float]:
    """Return ``(rho(A) * rho(B) < 1, rho(A) * rho(B))``."""
    rho = spectral_radius(model.A) * spectral_radius(model.B)
    return rho < 1.0, rho


def _require_stationary(model: MarModel) -> float:
    ok, rho = is_stationary(model)
    if not ok:
        raise PreconditionError(f"model is not causal: rho(A)*rho(B) = {rho:.6g} >= 1")
    return rho


def simulate(model: MarModel, T: int, burn_in: int = 500, seed: int = 0) -> MatrixSeries:
    """Simulate ``T`` observations after ``burn_in`` discarded steps from ``X_0 = 0``."""
    _require_stationary(model)
    if T < 1 or burn_in < 0:
        raise PreconditionError("T must be >= 1 and burn_in >= 0")
    rng = np.random.default_rng(seed)
    E = model.cov.sample(rng, burn_in + T, model.m, model.n)
    return MatrixSeries(kernels.bilinear_recursion(model.A, model.B, E, burn_in))


def simulate_var1(
    phi,
    cov: CovarianceSpec,
    m: int,
    n: int,
    T: int,
    burn_in: int = 500,
    seed: int = 0,
) -> MatrixSeries:
    """Simulate a matrix series from an arbitrary VAR(1) coefficient on ``vec(X_t)``.

    Used for data that violate the Kronecker structure (e.g. sums of terms).
    """
    phi = as_matrix(phi, "phi")
    if phi.shape != (m * n, m * n):
        raise DimensionError(f"phi must be {m * n}x{m * n}")
    rho = spectral_radius(phi)
    if rho >= 1.0:
        raise PreconditionError(f"VAR(1) coefficient has spectral radius {rho:.6g} >= 1")
    rng = np.random.default_rng(seed)
    E = cov.sample(rng, burn_in + T, m, n)
    e = E.transpose(0, 2, 1).reshape(burn_in + T, m * n)
    x = kernels.var_recursion(phi, e, burn_in)
    return MatrixSeries(x.reshape(T, n, m).transpose(0, 2, 1))


def autocovariance(
    model: MarModel, k: int = 0, tol: float = 1e-12, max_terms: int = 10_000
) -> np.ndarray:
    """Population lag-``k`` autocovariance of ``vec(X_t)`` by summing the causal series."""
    _require_stationary(model)
    if tol <= 0:
        raise ValueError("tol must be positive")
    A, B, S = model.A, model.B, model.sigma
    Ak = np.linalg.matrix_power(A, k)
    Bk = np.linalg.matrix_power(B, k)
    left = np.kron(Bk, Ak)  # (B^{k+l} kron A^{k+l})
    right = np.eye(model.m * model.n)  # (B^l kron A^l)
    phi = model.phi
    total = np.zeros_like(S)
    for _ in range(max_terms):
        term = left @ S @ right.T
        total += term
        tn = np.linalg.norm(term)
        if tn == 0.0 or tn < tol * np.linalg.norm(total):
            break
        left = phi @ left
        right = phi @ right
    if k == 0:
        total = 0.5 * (total + total.T)
    return total


@dataclass(frozen=True)
class IrfResult:
    """Shock-first orthogonal impulse responses for a shock at ``(shock_row, shock_col)``.

    ``responses[k]`` and ``accumulated[k]`` are ``m x n``.  ``row_resp`` and
    ``col_resp`` are filled for Kronecker covariances, in which case
    ``responses[k] == outer(row_resp[k], col_resp[k])``.
    """

    shock_row: int
    shock_col: int
    horizon: int
    responses: np.ndarray
    accumulated: np.ndarray
    row_resp: np.ndarray | None = None
    col_resp: np.ndarray | None = None

    @property
    def factored(self) -> bool:
        return self.row_resp is not None


def irf_s1(model: MarModel, i: int, j: int, K: int) -> IrfResult:
    """Responses of ``X_{t+k}``, ``k = 0..K``, to a one-standard-deviation shock in ``e_{t,ij}``.

    The other innovations are orthogonalized against the shocked one, so the
    impulse is the covariance column of entry ``(i, j)`` (0-based) divided by
    that entry's standard deviation.
    """
    m, n = model.m, model.n
    if not (0 <= i < m and 0 <= j < n):
        raise IndexError(f"shock ({i}, {j}) outside a {m}x{n} matrix")
    if K < 0:
        raise ValueError("horizon must be nonnegative")
    _require_stationary(model)
    S = model.sigma
    col = j * m + i
    impulse = unvec(S[:, col] / np.sqrt(S[col, col]), m, n)
    A, B = model.A, model.B
    responses = np.empty((K + 1, m, n))
    cur = impulse
    for k in range(K + 1):
        responses[k] = cur
        cur = A @ cur @ B.T
    accumulated = np.cumsum(responses, axis=0)

    row_resp = col_resp = None
    if model.cov.kind == "kronecker":
        Sr, Sc = model.cov.sigma_r, model.cov.sigma_c
        r = Sr[:, i] / np.sqrt(Sr[i, i] * Sc[j, j])
        c = np.array(Sc[:, j])
        row_resp = np.empty((K + 1, m))
        col_resp = np.empty((K + 1, n))
        for k in range(K + 1):
            row_resp[k] = r
            col_resp[k] = c
            r = A @ r
            c = B @ c
    return IrfResult(i, j, K, responses, accumulated, row_resp, col_resp)


def random_model(m: int, n: int, rho_target: float = 0.5, seed: int = 0) -> MarModel:
    """Gaussian ``A``, ``B`` rescaled so ``rho(A) rho(B) = rho_target`` and ``||A||_F = 1``."""
    if not 0 < rho_target < 1:
        raise PreconditionError("rho_target must lie in (0, 1)")
    rng = np.random.default_rng(seed)
    while True:
        A = rng.standard_normal((m, m))
        B = rng.standard_normal((n, n))
        ra, rb = spectral_radius(A), spectral_radius(B)
        if ra > 0 and rb > 0:
            break
    B = B * (rho_target / (ra * rb))
    return MarModel.from_pair(A, B)


def haar_orthogonal(rng: np.random.Generator, d: int) -> np.ndarray:
    """Haar-distributed orthogonal matrix from the QR of a Gaussian matrix."""
    Q, R = np.linalg.qr(rng.standard_normal((d, d)))
    signs = np.sign(np.diag(R))
    signs[signs == 0] = 1.0
    return Q * signs


def _random_spd(rng: np.random.Generator, d: int) -> np.ndarray:
    Q = haar_orthogonal(rng, d)
    lam = np.abs(rng.standard_normal(d))
    S = (Q * lam) @ Q.T
    return 0.5 * (S + S.T)


def random_covariance(setting: str, m: int, n: int, seed: int = 0) -> CovarianceSpec:
    """Innovation covariance for simulation setting ``"I"``, ``"II"`` or ``"III"``.

    I: identity.  II: ``Q diag(|z|) Q'`` with Haar ``Q``.  III: Kronecker
    product of two such matrices.
    """
    setting = str(setting).upper()
    rng = np.random.default_rng(seed)
    if setting == "I":
        return CovarianceSpec.identity()
    if setting == "II":
        return CovarianceSpec.full(_random_spd(rng, m * n))
    if setting == "III":
        Sc = _random_spd(rng, n)
        Sr = _random_spd(rng, m)
        return CovarianceSpec.kronecker(Sc, Sr)
    raise ValueError(f"unknown setting {setting!r}; expected I, II or III")


def stack(series: Sequence[np.ndarray]) -> MatrixSeries:
    """Build a :class:`MatrixSeries` from a list of equally shaped matrices."""
    return MatrixSeries(np.stack([np.asarray(x, dtype=float) for x in series]))
