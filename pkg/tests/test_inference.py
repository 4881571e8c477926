import dataclasses

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import stats

from mar_kit.errors import NumericError
from mar_kit.estimators import fit_lse, fit_mle, fit_proj, fit_var1
from mar_kit.inference import (
    AsymptoticCovariance,
    asymp_cov,
    asymp_cov_lse,
    asymp_cov_mle,
    asymp_cov_proj,
    chi2_sf,
    confidence_intervals,
    regressor_blocks,
    specification_test,
    xi_proj,
)
from mar_kit.kron import rearrange, vec
from mar_kit.model import MarModel, MatrixSeries, random_covariance, random_model, simulate
from mar_kit.experiments import mixture_phi
from mar_kit.model import CovarianceSpec, simulate_var1


@pytest.fixture(scope="module")
def series():
    base = random_model(3, 2, seed=31)
    model = MarModel(base.A, base.B, random_covariance("III", 3, 2, seed=32))
    return simulate(model, 800, seed=33)


def psd_ok(M):
    return np.linalg.eigvalsh(M).min() >= -1e-8 * np.trace(M)


def test_xi_proj_is_permuted_var_cov(series):
    v = fit_var1(series)
    xi = xi_proj(v)
    full = np.kron(np.linalg.inv(v.gamma0), v.sigma)
    # covariance of vec(G(Phi)) under vec(Phi) ~ full: map a random direction both ways
    rng = np.random.default_rng(0)
    D = rng.standard_normal((6, 6))
    lhs = vec(rearrange(D, 3, 2)) @ xi @ vec(rearrange(D, 3, 2))
    assert lhs == pytest.approx(vec(D) @ full @ vec(D), rel=1e-12)


def test_scalar_proj_matches_ar1(rng):
    X = simulate(random_model(1, 1, 0.6, seed=1), 500, seed=2)
    f = fit_proj(X)
    c = asymp_cov_proj(f)
    v = f.var1
    assert c.kron_cov[0, 0] == pytest.approx(v.sigma[0, 0] / v.gamma0[0, 0] / v.t_eff, rel=1e-8)


def test_scalar_lse_matches_ar1_sandwich():
    X = simulate(random_model(1, 1, 0.6, seed=3), 500, seed=4)
    f = fit_lse(X)
    c = asymp_cov_lse(f, X)
    x = X.values[:, 0, 0]
    r = x[1:] - f.phi[0, 0] * x[:-1]
    s2 = np.mean(r ** 2)
    var = s2 / np.mean(x[:-1] ** 2) / (len(x) - 1)
    assert c.kron_cov[0, 0] == pytest.approx(var, rel=1e-8)


def test_proj_structures(series):
    f = fit_proj(series)
    c = asymp_cov_proj(f)
    assert c.stacked_cov.shape == (13, 13)
    assert c.kron_cov.shape == (36, 36)
    for M in (c.stacked_cov, c.kron_cov):
        assert_allclose(M, M.T, atol=1e-10)
        assert psd_ok(M)
    assert c.t_used == series.T - 1


def test_projection_matrix(series):
    res = specification_test(series)
    P = res.P_hat
    assert_allclose(P, P.T, atol=1e-12)
    assert np.abs(P @ P - P).max() < 1e-8
    assert np.trace(P) == pytest.approx(res.df, abs=1e-6)
    assert res.df == 24 and res.rank == 24 and not res.warnings
    assert res.statistic >= 0 and 0 <= res.p_value <= 1


def test_null_direction(series):
    f = fit_lse(series)
    G = regressor_blocks(series, f.A, f.B)
    M = np.einsum("tki,tkj->ij", G, G) / G.shape[0]
    u = np.concatenate([vec(f.A), -vec(f.B.T)])
    assert np.abs(M @ u).max() < 1e-8 * np.abs(M).max()


def test_regressor_blocks_linearize(series, rng):
    A = rng.standard_normal((3, 3))
    B = rng.standard_normal((2, 2))
    dA = rng.standard_normal((3, 3))
    dB = rng.standard_normal((2, 2))
    G = regressor_blocks(series, A, B)
    d = np.concatenate([vec(dA), vec(dB.T)])
    Z = series.values[:-1]
    for t in (0, 5, 100):
        exact = dA @ Z[t] @ B.T + A @ Z[t] @ dB.T
        assert_allclose(G[t] @ d, vec(exact), atol=1e-12)


def test_lse_mle_structures(series):
    for fit_, fn in ((fit_lse, asymp_cov_lse), (fit_mle, asymp_cov_mle)):
        f = fit_(series)
        c = fn(f, series)
        assert c.stacked_cov.shape == (13, 13)
        for M in (c.stacked_cov, c.kron_cov):
            assert_allclose(M, M.T, atol=1e-10)
            assert psd_ok(M)
        assert_allclose(c.kron_estimate, np.kron(vec(f.B.T), vec(f.A)))


def test_mle_formula_reduces_to_lse_with_identity(series):
    f = fit_lse(series)
    I = np.eye(6)
    a = asymp_cov_lse(f, series, sigma=I)
    b = asymp_cov_mle(f, series, sigma=I)
    assert np.abs(a.xi - b.xi).max() < 1e-10


def test_sign_flip_invariance(series):
    for fit_, fn in ((fit_proj, None), (fit_lse, asymp_cov_lse), (fit_mle, asymp_cov_mle)):
        f = fit_(series)
        flipped = dataclasses.replace(f, model=MarModel(-f.A, -f.B, f.model.cov))
        c1 = asymp_cov(f, series)
        c2 = asymp_cov(flipped, series)
        assert np.abs(c1.kron_cov - c2.kron_cov).max() < 1e-10


def test_covariances_shrink_like_one_over_t():
    model = random_model(3, 2, seed=41)
    X2 = simulate(model, 4000, seed=42)
    X1 = X2.window(0, 2000)
    for fit_ in (fit_proj, fit_lse, fit_mle):
        r = np.trace(asymp_cov(fit_(X2), X2).stacked_cov) / np.trace(asymp_cov(fit_(X1), X1).stacked_cov)
        assert 0.375 <= r <= 0.625


def _manual_cov(diag, m=1, n=1):
    est = np.zeros(len(diag))
    k = np.zeros(1)
    return AsymptoticCovariance("LSE", np.diag(diag), np.diag(diag), np.diag([0.0]), 100, est, k, m, n)


def test_confidence_interval_widths():
    ci = confidence_intervals(_manual_cov([1 / 100, 0.0]), 0.95)
    assert ci.upper[0] - ci.estimate[0] == pytest.approx(0.196, abs=1e-3)
    assert ci.lower[1] == ci.upper[1] == 0.0
    assert np.all(ci.lower <= ci.estimate) and np.all(ci.estimate <= ci.upper)
    assert ci.marks() == ["0", "0"]


def test_confidence_interval_negative_variance():
    ci = confidence_intervals(_manual_cov([1.0, -1e-12]))
    assert ci.stderr[1] == 0.0
    with pytest.raises(NumericError):
        confidence_intervals(_manual_cov([1.0, -1e-3]))
    with pytest.raises(ValueError):
        confidence_intervals(_manual_cov([1.0]), 1.5)


def test_marks_consistent_with_intervals(series):
    c = asymp_cov(fit_lse(series), series)
    ci = confidence_intervals(c, 0.9)
    for mark, lo, hi in zip(ci.marks(), ci.lower, ci.upper):
        assert (mark == "+") == (lo > 0)
        assert (mark == "-") == (hi < 0)


def test_chi2_tail():
    for df in (1, 3, 24):
        for x in (0.5, 10.0, 40.0):
            assert chi2_sf(x, df) == pytest.approx(stats.chi2.sf(x, df), rel=1e-10)
    assert chi2_sf(0.0, 5) == 1.0


def test_spec_test_null_mean():
    model = random_model(3, 2, seed=51)
    st = np.array([specification_test(simulate(model, 2000, seed=r)).statistic for r in range(500)])
    assert abs(st.mean() - 24) < 0.15 * 24


def test_spec_test_rejects_mixture():
    phi = mixture_phi(3, 2, 0.5, seed=3)
    X = simulate_var1(phi, CovarianceSpec.identity(), 3, 2, 2000, seed=1)
    assert specification_test(X).p_value < 1e-6


def test_lse_cov_needs_nonsingular_h():
    X = MatrixSeries(np.zeros((10, 2, 2)))
    f = fit_lse(simulate(random_model(2, 2, seed=1), 50, seed=1))
    with pytest.raises(NumericError):
        asymp_cov_lse(f, X)
