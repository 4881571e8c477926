"""Pure-Python/numpy versions of the compiled kernels in ``_kernels.pyx``."""

from __future__ import annotations

import numpy as np


def bilinear_recursion(A, B, E, burn_in: int) -> np.ndarray:
    """Iterate ``X_t = A X_{t-1} B' + E_t`` from ``X_0 = 0``; drop ``burn_in`` steps."""
    A = np.ascontiguousarray(A, dtype=float)
    B = np.ascontiguousarray(B, dtype=float)
    E = np.ascontiguousarray(E, dtype=float)
    N, m, n = E.shape
    if A.shape != (m, m) or B.shape != (n, n):
        raise ValueError("coefficient shapes do not match innovations")
    if burn_in > N:
        raise ValueError("burn_in exceeds the number of innovations")
    out = np.empty((N - burn_in, m, n))
    Bt = B.T
    prev = np.zeros((m, n))
    for t in range(N):
        prev = A @ (prev @ Bt) + E[t]
        if t >= burn_in:
            out[t - burn_in] = prev
    return out


def var_recursion(Phi, e, burn_in: int) -> np.ndarray:
    """Iterate ``x_t = Phi x_{t-1} + e_t`` from ``x_0 = 0``; drop ``burn_in`` steps."""
    Phi = np.ascontiguousarray(Phi, dtype=float)
    e = np.ascontiguousarray(e, dtype=float)
    N, d = e.shape
    if Phi.shape != (d, d):
        raise ValueError("Phi shape does not match innovations")
    if burn_in > N:
        raise ValueError("burn_in exceeds the number of innovations")
    out = np.empty((N - burn_in, d))
    prev = np.zeros(d)
    for t in range(N):
        prev = Phi @ prev + e[t]
        if t >= burn_in:
            out[t - burn_in] = prev
    return out


def cross_sum(Y, Z, K) -> np.ndarray:
    """Return ``sum_t Y_t K Z_t'`` for stacks ``Y``, ``Z`` of shape ``(T, p, q)``."""
    Y = np.asarray(Y, dtype=float)
    Z = np.asarray(Z, dtype=float)
    K = np.asarray(K, dtype=float)
    if Y.shape != Z.shape:
        raise ValueError("Y and Z must have the same shape")
    if K.shape != (Y.shape[2], Y.shape[2]):
        raise ValueError("K must be q x q")
    return np.tensordot(Y @ K, Z, axes=([0, 2], [0, 2]))
