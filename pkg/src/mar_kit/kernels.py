"""Backend selection for the hot loops.

The compiled extension ``mar_kit._kernels`` is used when it imports; set
``MAR_KIT_PURE_PYTHON=1`` to force the numpy fallback.  ``BACKEND`` names the
active implementation.
"""

from __future__ import annotations

import os

import numpy as np

from . import _kernels_py

_compiled = None
if not os.environ.get("MAR_KIT_PURE_PYTHON"):
    try:
        from . import _kernels as _compiled  # type: ignore[attr-defined]
    except ImportError:
        _compiled = None

_impl = _compiled if _compiled is not None else _kernels_py
BACKEND = "cython" if _compiled is not None else "python"


def bilinear_recursion(A, B, E, burn_in: int = 0) -> np.ndarray:
    return _impl.bilinear_recursion(
        np.ascontiguousarray(A, dtype=float),
        np.ascontiguousarray(B, dtype=float),
        np.ascontiguousarray(E, dtype=float),
        int(burn_in),
    )


def var_recursion(Phi, e, burn_in: int = 0) -> np.ndarray:
    return _impl.var_recursion(
        np.ascontiguousarray(Phi, dtype=float),
        np.ascontiguousarray(e, dtype=float),
        int(burn_in),
    )


def cross_sum(Y, Z, K) -> np.ndarray:
    """``sum_t Y_t K Z_t'``."""
    return _impl.cross_sum(
        np.ascontiguousarray(Y, dtype=float),
        np.ascontiguousarray(Z, dtype=float),
        np.ascontiguousarray(K, dtype=float),
    )


def quad_sum(Z, G) -> np.ndarray:
    """``sum_t Z_t G Z_t'``, symmetrized when ``G`` is symmetric."""
    S = cross_sum(Z, Z, G)
    return 0.5 * (S + S.T) if np.allclose(G, np.transpose(G)) else S
