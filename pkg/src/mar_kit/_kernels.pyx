# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops.  Must match ``_kernels_py`` to rounding error."""

import numpy as np


def bilinear_recursion(const double[:, ::1] A, const double[:, ::1] B,
                       const double[:, :, ::1] E, Py_ssize_t burn_in):
    """Iterate ``X_t = A X_{t-1} B' + E_t`` from ``X_0 = 0``; drop ``burn_in`` steps."""
    cdef Py_ssize_t N = E.shape[0], m = E.shape[1], n = E.shape[2]
    cdef Py_ssize_t T = N - burn_in
    if A.shape[0] != m or A.shape[1] != m or B.shape[0] != n or B.shape[1] != n:
        raise ValueError("coefficient shapes do not match innovations")
    if T < 0:
        raise ValueError("burn_in exceeds the number of innovations")
    out = np.empty((T, m, n), dtype=np.float64)
    cdef double[:, :, ::1] X = out
    prev_arr = np.zeros((m, n), dtype=np.float64)
    cur_arr = np.empty((m, n), dtype=np.float64)
    tmp_arr = np.empty((m, n), dtype=np.float64)
    cdef double[:, ::1] prev = prev_arr
    cdef double[:, ::1] cur = cur_arr
    cdef double[:, ::1] tmp = tmp_arr
    cdef double[:, ::1] swap
    cdef Py_ssize_t t, i, j, k, l
    cdef double acc
    with nogil:
        for t in range(N):
            # tmp = prev @ B.T
            for i in range(m):
                for l in range(n):
                    acc = 0.0
                    for k in range(n):
                        acc = acc + prev[i, k] * B[l, k]
                    tmp[i, l] = acc
            # cur = A @ tmp + E_t
            for i in range(m):
                for l in range(n):
                    acc = 0.0
                    for j in range(m):
                        acc = acc + A[i, j] * tmp[j, l]
                    cur[i, l] = acc + E[t, i, l]
            if t >= burn_in:
                for i in range(m):
                    for l in range(n):
                        X[t - burn_in, i, l] = cur[i, l]
            swap = prev
            prev = cur
            cur = swap
    return out


def var_recursion(const double[:, ::1] Phi, const double[:, ::1] e, Py_ssize_t burn_in):
    """Iterate ``x_t = Phi x_{t-1} + e_t`` from ``x_0 = 0``; drop ``burn_in`` steps."""
    cdef Py_ssize_t N = e.shape[0], d = e.shape[1]
    cdef Py_ssize_t T = N - burn_in
    if Phi.shape[0] != d or Phi.shape[1] != d:
        raise ValueError("Phi shape does not match innovations")
    if T < 0:
        raise ValueError("burn_in exceeds the number of innovations")
    out = np.empty((T, d), dtype=np.float64)
    cdef double[:, ::1] X = out
    prev_arr = np.zeros(d, dtype=np.float64)
    cur_arr = np.empty(d, dtype=np.float64)
    cdef double[::1] prev = prev_arr
    cdef double[::1] cur = cur_arr
    cdef double[::1] swap
    cdef Py_ssize_t t, i, j
    cdef double acc
    with nogil:
        for t in range(N):
            for i in range(d):
                acc = 0.0
                for j in range(d):
                    acc = acc + Phi[i, j] * prev[j]
                cur[i] = acc + e[t, i]
            if t >= burn_in:
                for i in range(d):
                    X[t - burn_in, i] = cur[i]
            swap = prev
            prev = cur
            cur = swap
    return out


def cross_sum(const double[:, :, ::1] Y, const double[:, :, ::1] Z, const double[:, ::1] K):
    """Return ``sum_t Y_t K Z_t'`` for stacks ``Y``, ``Z`` of shape ``(T, p, q)``."""
    cdef Py_ssize_t T = Y.shape[0], p = Y.shape[1], q = Y.shape[2]
    if Z.shape[0] != T or Z.shape[1] != p or Z.shape[2] != q:
        raise ValueError("Y and Z must have the same shape")
    if K.shape[0] != q or K.shape[1] != q:
        raise ValueError("K must be q x q")
    out = np.zeros((p, p), dtype=np.float64)
    cdef double[:, ::1] S = out
    tmp_arr = np.empty((p, q), dtype=np.float64)
    cdef double[:, ::1] tmp = tmp_arr
    cdef Py_ssize_t t, i, j, k
    cdef double acc
    with nogil:
        for t in range(T):
            for i in range(p):
                for j in range(q):
                    acc = 0.0
                    for k in range(q):
                        acc = acc + Y[t, i, k] * K[k, j]
                    tmp[i, j] = acc
            for i in range(p):
                for j in range(p):
                    acc = 0.0
                    for k in range(q):
                        acc = acc + tmp[i, k] * Z[t, j, k]
                    S[i, j] = S[i, j] + acc
    return out
