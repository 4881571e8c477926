"""Kronecker-product linear algebra.

All matrices are plain ``numpy.ndarray`` objects.  ``vec`` stacks columns
(column-major order), so ``vec(C @ Z @ D) == kron(D.T, C) @ vec(Z)``.

Index conventions are 0-based throughout the Python API.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, NumericError

__all__ = [
    "KronTermList",
    "as_matrix",
    "kron",
    "vec",
    "unvec",
    "rearrange",
    "rearrange_permutation",
    "spectral_radius",
    "sign_of_largest",
    "normalize_pair",
    "nkp_project",
    "pinv",
]


def as_matrix(M, name: str = "matrix") -> np.ndarray:
    """Return ``M`` as a finite 2-D float array or raise."""
    arr = np.asarray(M, dtype=float)
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NumericError(f"{name} contains non-finite entries")
    return arr


def kron(C, D) -> np.ndarray:
    """Kronecker product; block ``(i, j)`` equals ``C[i, j] * D``."""
    return np.kron(as_matrix(C, "C"), as_matrix(D, "D"))


def vec(M) -> np.ndarray:
    """Stack the columns of ``M`` into a 1-D vector."""
    arr = np.asarray(M, dtype=float)
    if arr.ndim == 1:
        return arr.copy()
    if arr.ndim != 2:
        raise DimensionError(f"vec expects a matrix, got shape {arr.shape}")
    return arr.reshape(-1, order="F")


def unvec(v, m: int, n: int) -> np.ndarray:
    """Inverse of :func:`vec`: reshape a length ``m*n`` vector to ``m x n``."""
    arr = np.asarray(v, dtype=float).ravel()
    if arr.size != m * n:
        raise DimensionError(f"cannot unvec length {arr.size} into {m}x{n}")
    return arr.reshape((m, n), order="F")


def rearrange(Phi, m: int, n: int) -> np.ndarray:
    """Rearrange an ``mn x mn`` matrix into ``m^2 x n^2``.

    The map is the entry permutation with ``rearrange(kron(B, A), m, n) ==
    outer(vec(A), vec(B))`` for ``A`` of size ``m x m`` and ``B`` of size
    ``n x n``.  It is linear and preserves the Frobenius norm.
    """
    Phi = np.asarray(Phi, dtype=float)
    d = m * n
    if Phi.shape != (d, d):
        raise DimensionError(f"rearrange expects a {d}x{d} matrix, got {Phi.shape}")
    # Phi[k*m + i, l*m + j] = B[k, l] * A[i, j]
    blocks = Phi.reshape(n, m, n, m)  # axes (k, i, l, j)
    # row index j*m + i is vec(A) position, column l*n + k is vec(B) position
    return blocks.transpose(3, 1, 2, 0).reshape(m * m, n * n)


def rearrange_permutation(m: int, n: int) -> np.ndarray:
    """Index array ``p`` with ``vec(rearrange(Phi))[k] == vec(Phi)[p[k]]``.

    Indices are 0-based.
    """
    if m < 1 or n < 1:
        raise DimensionError("m and n must be positive")
    d = m * n
    probe = unvec(np.arange(d * d, dtype=float), d, d)
    return vec(rearrange(probe, m, n)).astype(np.intp)


def spectral_radius(M) -> float:
    """Largest modulus among the (complex) eigenvalues of a square matrix."""
    M = as_matrix(M)
    if M.shape[0] != M.shape[1]:
        raise DimensionError(f"spectral radius needs a square matrix, got {M.shape}")
    try:
        eig = np.linalg.eigvals(M)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"eigenvalue computation failed: {exc}") from exc
    return float(np.max(np.abs(eig))) if eig.size else 0.0


def sign_of_largest(M) -> float:
    """+1 or -1 so that the largest-magnitude entry of ``sign * M`` is positive.

    Ties go to the lowest column-major index.  Returns +1 for the zero matrix.
    """
    v = vec(M)
    if v.size == 0:
        return 1.0
    k = int(np.argmax(np.abs(v)))
    return -1.0 if v[k] < 0 else 1.0


def normalize_pair(A, B) -> tuple[np.ndarray, np.ndarray]:
    """Rescale ``(A, B)`` so ``||A||_F = 1`` with the sign rule applied.

    ``kron(B_scaled, A_unit)`` equals ``kron(B, A)``.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    norm = np.linalg.norm(A)
    if not norm > 0:
        raise NumericError("cannot normalize a zero A matrix")
    s = sign_of_largest(A)
    return s * A / norm, s * norm * B


@dataclass(frozen=True)
class KronTermList:
    """Terms ``(A_i, B_i)`` of a Kronecker sum, largest singular value first."""

    terms: tuple[tuple[np.ndarray, np.ndarray], ...]
    singular_values: np.ndarray

    def __len__(self) -> int:
        return len(self.terms)

    def __getitem__(self, i):
        return self.terms[i]

    def matrix(self) -> np.ndarray:
        """Return ``sum_i kron(B_i, A_i)``."""
        A0, B0 = self.terms[0]
        out = np.zeros((A0.shape[0] * B0.shape[0],) * 2)
        for A, B in self.terms:
            out += np.kron(B, A)
        return out


def nkp_project(Phi, m: int, n: int, k: int = 1) -> KronTermList:
    """Nearest Kronecker product approximation with ``k`` terms.

    Solved by an SVD of ``rearrange(Phi)``.  Every ``A_i`` has unit Frobenius
    norm with the sign rule of :func:`sign_of_largest`; ``B_i`` carries the
    singular value.
    """
    R = rearrange(Phi, m, n)
    if not 1 <= k <= min(m * m, n * n):
        raise DimensionError(f"k must lie in [1, {min(m * m, n * n)}], got {k}")
    try:
        U, d, Vt = np.linalg.svd(R, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"SVD failed: {exc}") from exc
    terms = []
    for i in range(k):
        A = unvec(U[:, i], m, m)
        B = d[i] * unvec(Vt[i], n, n)
        s = sign_of_largest(A)
        terms.append((s * A, s * B))
    return KronTermList(terms=tuple(terms), singular_values=d.copy())


def pinv(M, tol: float | None = None, rank: int | None = None) -> np.ndarray:
    """Moore-Penrose inverse via SVD.

    Singular values ``<= tol`` are discarded; the default cutoff is
    ``eps * max(M.shape) * sigma_max``.  When ``rank`` is given exactly the
    ``rank`` largest singular values are kept instead.
    """
    M = as_matrix(M)
    try:
        U, s, Vt = np.linalg.svd(M, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"SVD failed: {exc}") from exc
    if rank is not None:
        keep = np.zeros_like(s, dtype=bool)
        keep[: max(0, min(rank, s.size))] = True
    else:
        if tol is None:
            tol = np.finfo(float).eps * max(M.shape) * (s[0] if s.size else 0.0)
        elif tol < 0:
            raise ValueError("tol must be nonnegative")
        keep = s > tol
    inv_s = np.zeros_like(s)
    inv_s[keep] = 1.0 / s[keep]
    return (Vt.T * inv_s) @ U.T
