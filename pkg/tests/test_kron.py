import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from mar_kit.errors import DimensionError, NumericError
from mar_kit.kron import (
    kron,
    nkp_project,
    normalize_pair,
    pinv,
    rearrange,
    rearrange_permutation,
    spectral_radius,
    unvec,
    vec,
)


def kron_loop(C, D):
    p, q = C.shape
    r, s = D.shape
    out = np.zeros((p * r, q * s))
    for i in range(p):
        for j in range(q):
            for k in range(r):
                for l in range(s):
                    out[i * r + k, j * s + l] = C[i, j] * D[k, l]
    return out


def rearrange_loop(Phi, m, n):
    # block (k, l) of Phi is b_kl * A; its vec is column k + l*n of the result
    out = np.zeros((m * m, n * n))
    for k in range(n):
        for l in range(n):
            block = Phi[k * m:(k + 1) * m, l * m:(l + 1) * m]
            out[:, l * n + k] = block.reshape(-1, order="F")
    return out


def test_kron_identity_and_scalar():
    assert_array_equal(kron(np.eye(2), np.eye(3)), np.eye(6))
    assert_array_equal(kron([[2.0]], [[1, 0], [0, 3]]), np.diag([2.0, 6.0]))


def test_kron_matches_definition(rng):
    C = rng.standard_normal((2, 3))
    D = rng.standard_normal((2, 2))
    assert_allclose(kron(C, D), kron_loop(C, D), rtol=0, atol=1e-15)


def test_kron_rejects_nonfinite():
    with pytest.raises(NumericError):
        kron([[np.nan]], [[1.0]])


def test_vec_and_unvec():
    assert_array_equal(vec([[1, 3], [2, 4]]), [1, 2, 3, 4])
    assert_array_equal(vec(np.array([[1.0], [2.0], [5.0]])), [1, 2, 5])
    assert_array_equal(unvec([1, 2, 3, 4], 2, 2), [[1, 3], [2, 4]])
    assert unvec([1, 2, 3], 3, 1).shape == (3, 1)
    with pytest.raises(DimensionError):
        unvec([1, 2, 3], 2, 2)


def test_vec_roundtrip(rng):
    M = rng.standard_normal((3, 5))
    assert_array_equal(unvec(vec(M), 3, 5), M)


def test_rearrange_worked_2x2():
    A = np.array([[1.0, 2.0], [3.0, 4.0]])
    B = np.array([[5.0, 6.0], [7.0, 8.0]])
    R = rearrange(np.kron(B, A), 2, 2)
    # rows follow a11, a21, a12, a22; columns b11, b21, b12, b22
    expected = np.outer([1, 3, 2, 4], [5, 7, 6, 8])
    assert_array_equal(R, expected)


def test_rearrange_identity_factors():
    R = rearrange(np.eye(4), 2, 2)
    assert_array_equal(R, np.outer(vec(np.eye(2)), vec(np.eye(2))))
    assert np.linalg.matrix_rank(R) == 1


def test_rearrange_defining_identity(rng):
    A = rng.standard_normal((2, 2))
    A /= np.linalg.norm(A)
    B = rng.standard_normal((3, 3))
    assert np.abs(rearrange(np.kron(B, A), 2, 3) - np.outer(vec(A), vec(B))).max() < 1e-14


def test_rearrange_matches_loop(rng):
    Phi = rng.standard_normal((6, 6))
    assert_array_equal(rearrange(Phi, 3, 2), rearrange_loop(Phi, 3, 2))
    assert_array_equal(rearrange(Phi, 2, 3), rearrange_loop(Phi, 2, 3))


def test_rearrange_shape_errors():
    with pytest.raises(DimensionError):
        rearrange(np.eye(5), 2, 2)
    with pytest.raises(DimensionError):
        rearrange(np.ones((4, 3)), 2, 2)


def test_permutation_identity_and_2x2():
    assert_array_equal(rearrange_permutation(1, 1), [0])
    p = rearrange_permutation(2, 2)
    assert sorted(p) == list(range(16))
    # entry (row, col) of the 4x4 worked display in vec order
    Phi = np.arange(16.0).reshape(4, 4)
    assert_array_equal(vec(Phi)[p], vec(rearrange(Phi, 2, 2)))


def test_permutation_consistency(rng):
    for m, n in [(2, 3), (3, 2), (1, 4), (3, 3)]:
        p = rearrange_permutation(m, n)
        for _ in range(20):
            Phi = rng.standard_normal((m * n, m * n))
            assert_array_equal(vec(Phi)[p], vec(rearrange(Phi, m, n)))


def test_spectral_radius_cases(rng):
    assert spectral_radius(np.diag([0.5, -0.7])) == pytest.approx(0.7)
    assert spectral_radius([[0, -1], [1, 0]]) == pytest.approx(1.0)
    A = rng.standard_normal((3, 3))
    B = rng.standard_normal((2, 2))
    rel = abs(spectral_radius(np.kron(B, A)) - spectral_radius(A) * spectral_radius(B))
    assert rel / (spectral_radius(A) * spectral_radius(B)) < 1e-10
    with pytest.raises(DimensionError):
        spectral_radius(np.ones((2, 3)))


def test_nkp_exact_kronecker(rng):
    A = rng.standard_normal((2, 2))
    A /= np.linalg.norm(A)
    B = rng.standard_normal((3, 3))
    Phi = np.kron(B, A)
    A1, B1 = nkp_project(Phi, 2, 3, 1)[0]
    assert np.linalg.norm(np.kron(B1, A1) - Phi) < 1e-12
    assert np.linalg.norm(A1) == pytest.approx(1.0)
    # up to a joint sign
    s = np.sign(np.sum(A1 * A))
    assert_allclose(s * A1, A, atol=1e-12)
    assert_allclose(s * B1, B, atol=1e-12)


def test_nkp_identity():
    A1, B1 = nkp_project(np.eye(4), 2, 2, 1)[0]
    assert_allclose(A1, np.eye(2) / np.sqrt(2), atol=1e-14)
    assert_allclose(B1, np.sqrt(2) * np.eye(2), atol=1e-14)


def test_nkp_two_terms(rng):
    # orthogonal vec(A_i) and orthogonal vec(B_i)
    Qa, _ = np.linalg.qr(rng.standard_normal((4, 2)))
    Qb, _ = np.linalg.qr(rng.standard_normal((9, 2)))
    A1, A2 = unvec(Qa[:, 0], 2, 2), unvec(Qa[:, 1], 2, 2)
    B1, B2 = 3 * unvec(Qb[:, 0], 3, 3), unvec(Qb[:, 1], 3, 3)
    Phi = np.kron(B1, A1) + np.kron(B2, A2)
    terms = nkp_project(Phi, 2, 3, 2)
    assert len(terms) == 2
    assert np.linalg.norm(terms.matrix() - Phi) < 1e-10


def test_nkp_residuals_follow_singular_values(rng):
    Phi = rng.standard_normal((6, 6))
    prev = np.inf
    for k in range(1, 5):
        t = nkp_project(Phi, 3, 2, k)
        res = np.linalg.norm(Phi - t.matrix())
        assert res <= prev + 1e-12
        assert res == pytest.approx(np.sqrt(np.sum(t.singular_values[k:] ** 2)), abs=1e-10)
        prev = res
    with pytest.raises(DimensionError):
        nkp_project(Phi, 3, 2, 5)


def test_nkp_sign_rule(rng):
    for _ in range(10):
        t = nkp_project(rng.standard_normal((6, 6)), 3, 2, 3)
        for A, _ in t.terms:
            v = vec(A)
            assert v[np.argmax(np.abs(v))] > 0


def test_normalize_pair():
    A, B = normalize_pair(2 * np.eye(2), np.eye(2))
    assert_allclose(A, np.eye(2) / np.sqrt(2))
    assert_allclose(B, 2 * np.sqrt(2) * np.eye(2))
    A2, B2 = normalize_pair(A, B)
    assert_allclose(A2, A, atol=1e-15)
    assert_allclose(B2, B, atol=1e-15)
    with pytest.raises(NumericError):
        normalize_pair(np.zeros((2, 2)), np.eye(2))


def test_normalize_pair_sign_and_invariance(rng):
    A = rng.standard_normal((3, 3))
    B = rng.standard_normal((2, 2))
    A1, B1 = normalize_pair(A, B)
    assert np.abs(np.kron(B1, A1) - np.kron(B, A)).max() < 1e-14
    v = vec(A1)
    assert v[np.argmax(np.abs(v))] > 0
    # ties go to the lowest column-major index
    At, _ = normalize_pair([[-1.0, 1.0], [0.0, 0.0]], np.eye(1))
    assert At[0, 0] > 0


def test_pinv_cases(rng):
    assert_allclose(pinv(np.eye(3)), np.eye(3))
    assert_allclose(pinv(np.diag([2.0, 0.0])), np.diag([0.5, 0.0]))
    M = rng.standard_normal((4, 2)) @ rng.standard_normal((2, 4))
    P = pinv(M)
    assert np.abs(M @ P @ M - M).max() < 1e-10
    assert np.abs(P @ M @ P - P).max() < 1e-10
    assert_allclose(M @ P, (M @ P).T, atol=1e-10)
    assert_allclose(P @ M, (P @ M).T, atol=1e-10)


def test_pinv_fixed_rank(rng):
    M = np.diag([3.0, 2.0, 1e-3])
    assert_allclose(pinv(M, rank=2), np.diag([1 / 3, 0.5, 0.0]))
    with pytest.raises(ValueError):
        pinv(M, tol=-1.0)
