import importlib
import os
import subprocess
import sys

import numpy as np
import pytest
from numpy.testing import assert_allclose

from mar_kit import _kernels_py, kernels

try:
    from mar_kit import _kernels as compiled
except ImportError:  # extension not built
    compiled = None

needs_ext = pytest.mark.skipif(compiled is None, reason="compiled kernels not built")


def test_backend_name():
    assert kernels.BACKEND in ("cython", "python")
    if compiled is not None and not os.environ.get("MAR_KIT_PURE_PYTHON"):
        assert kernels.BACKEND == "cython"


def test_pure_python_switch():
    code = "import mar_kit.kernels as k; print(k.BACKEND)"
    env = dict(os.environ, MAR_KIT_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


def test_recursion_python_by_hand():
    A = np.array([[0.5]])
    B = np.array([[0.5]])
    E = np.ones((4, 1, 1))
    X = _kernels_py.bilinear_recursion(A, B, E, 1)
    # x1 = 1, x2 = 1.25, x3 = 1.3125, x4 = 1.328125
    assert_allclose(X[:, 0, 0], [1.25, 1.3125, 1.328125])


@needs_ext
def test_bilinear_backends_agree(rng):
    A = rng.standard_normal((3, 3)) * 0.4
    B = rng.standard_normal((2, 2)) * 0.4
    E = rng.standard_normal((300, 3, 2))
    a = compiled.bilinear_recursion(A, B, E, 50)
    b = _kernels_py.bilinear_recursion(A, B, E, 50)
    assert a.shape == (250, 3, 2)
    assert np.abs(a - b).max() < 1e-12


@needs_ext
def test_var_backends_agree(rng):
    Phi = rng.standard_normal((5, 5)) * 0.2
    e = rng.standard_normal((200, 5))
    assert np.abs(compiled.var_recursion(Phi, e, 20) - _kernels_py.var_recursion(Phi, e, 20)).max() < 1e-12


@needs_ext
def test_cross_sum_backends_agree(rng):
    Y = rng.standard_normal((40, 3, 4))
    Z = rng.standard_normal((40, 3, 4))
    K = rng.standard_normal((4, 4))
    a = compiled.cross_sum(Y, Z, K)
    b = _kernels_py.cross_sum(Y, Z, K)
    loop = sum(Y[t] @ K @ Z[t].T for t in range(40))
    assert_allclose(a, loop, atol=1e-12)
    assert_allclose(b, loop, atol=1e-12)


@pytest.mark.parametrize("impl", [_kernels_py, compiled], ids=["python", "cython"])
def test_shape_errors(impl):
    if impl is None:
        pytest.skip("compiled kernels not built")
    with pytest.raises(ValueError):
        impl.bilinear_recursion(np.eye(2), np.eye(2), np.zeros((3, 2, 3)), 0)
    with pytest.raises(ValueError):
        impl.bilinear_recursion(np.eye(2), np.eye(3), np.zeros((3, 2, 3)), 4)
    with pytest.raises(ValueError):
        impl.var_recursion(np.eye(2), np.zeros((3, 3)), 0)
    with pytest.raises(ValueError):
        impl.cross_sum(np.zeros((2, 2, 2)), np.zeros((2, 2, 3)), np.eye(2))


def test_quad_sum_symmetric(rng):
    Z = rng.standard_normal((30, 3, 2))
    G = np.array([[2.0, 0.5], [0.5, 1.0]])
    S = kernels.quad_sum(Z, G)
    assert np.array_equal(S, S.T)
