"""Eigendecomposition and PCA baselines."""

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from qrfactors.baselines import (eigen_ratio_order, evd_s_matrix,
                                 evd_spectrum, fit_evd, fit_pca, ic_p)
from qrfactors.covariance import build_augmented, sample_autocov
from qrfactors.factor_rrqr import fit_rrqr
from qrfactors.simgen import gen_sim1, subspace_error
from qrfactors.tsdata import TimeSeries


def _panel(seed, k=6, n=80):
    return TimeSeries(np.random.default_rng(seed).standard_normal((k, n)))


def test_s_is_the_augmented_gram_matrix():
    ts = _panel(101)
    s = evd_s_matrix(ts, lag_lo=1, lag_hi=3)
    m = build_augmented(ts, lag_lo=1, lag_hi=3).matrix
    assert_allclose(s, m @ m.T, rtol=1e-10)


def test_s_is_symmetric_psd():
    ts = _panel(102)
    s = evd_s_matrix(ts)
    assert_allclose(s, s.T, atol=1e-14)
    lam = np.linalg.eigvalsh(s)
    assert lam.min() >= -1e-10 * lam.max()


def test_spectrum_contract():
    ts = _panel(103)
    spectrum = evd_spectrum(ts)
    lam = spectrum.eigenvalues
    assert (np.diff(lam) <= 0).all() and (lam >= 0).all()
    u = spectrum.eigenvectors
    assert np.linalg.norm(u.T @ u - np.eye(u.shape[1])) <= 1e-10
    # each vector's largest-magnitude entry is positive
    for col in u.T:
        assert col[np.argmax(np.abs(col))] > 0
    want = lam[:-1] / lam[1:]
    assert_allclose(spectrum.ratios, want, rtol=1e-12)


def test_eigen_ratio_order_picks_largest_gap():
    # ratios 2, 50, 1.11 -> the gap after the second eigenvalue
    assert eigen_ratio_order([100.0, 50.0, 1.0, 0.9], p_cap=3) == 2


def test_eigen_ratio_order_zero_tail():
    assert eigen_ratio_order([5.0, 0.0, 0.0], p_cap=2) == 1


def test_eigen_ratio_order_cap_validation():
    with pytest.raises(ValueError):
        eigen_ratio_order([3.0, 1.0], p_cap=2)


def _noiseless_two_factor(seed, k=10, n=500):
    rng = np.random.default_rng(seed)
    h = rng.uniform(-2.0, 2.0, size=(k, 2))
    x = np.empty((2, n))
    innov = rng.standard_normal((2, n))
    x[:, 0] = innov[:, 0]
    for t in range(1, n):
        x[:, t] = 0.8 * x[:, t - 1] + innov[:, t]
    return TimeSeries(h @ x), h


def test_fit_evd_recovers_noiseless_span():
    ts, h = _noiseless_two_factor(104)
    fit = fit_evd(ts)
    assert fit.p_hat == 2
    assert subspace_error(fit.q_hat, np.linalg.qr(h)[0]) <= 1e-8


def test_fit_evd_and_fit_rrqr_agree_on_clean_data():
    ts, _ = _noiseless_two_factor(105)
    span_gap = subspace_error(fit_evd(ts).q_hat, fit_rrqr(ts).q_hat)
    assert span_gap <= 1e-8


def test_fit_evd_contract():
    data = gen_sim1(k=12, n=300, seed=106)
    fit = fit_evd(data.y)
    assert fit.method == "EVD"
    assert fit.p_hat == 1
    assert np.linalg.norm(fit.q_hat.T @ fit.q_hat - np.eye(1)) <= 1e-10
    assert fit.diagnostics["lambda_top"] >= fit.diagnostics["lambda_tail"]
    assert fit_evd(data.y, p_override=2).p_hat == 2


def test_fit_evd_scale_invariance():
    data = gen_sim1(k=10, n=250, seed=107)
    base = fit_evd(data.y)
    for c in (1e-3, 1e4):
        scaled = fit_evd(TimeSeries(c * data.y.values))
        assert scaled.p_hat == base.p_hat
        assert_allclose(scaled.q_hat, base.q_hat, atol=1e-8)


# ------------------------------------------------------------------
# information-criterion PCA


def test_ic_penalty_arithmetic():
    ts = _panel(108, k=5, n=50)
    lam = np.linalg.eigvalsh(sample_autocov(ts, 0).matrix)[::-1]
    for p in (1, 3):
        v = lam[p:].sum() / 5
        penalty = p * ((5 + 50) / (5 * 50)) * math.log(5 * 50 / (5 + 50))
        assert_allclose(ic_p(ts, p), math.log(v) + penalty, rtol=1e-12)


def test_ic_perfect_fit_is_minus_infinity():
    ts = _panel(109, k=4, n=60)
    assert ic_p(ts, 4) == float("-inf")


def test_ic_p_bounds():
    ts = _panel(110, k=4, n=60)
    with pytest.raises(ValueError):
        ic_p(ts, 0)
    with pytest.raises(ValueError):
        ic_p(ts, 5)


def test_fit_pca_sigma2_is_trailing_eigen_sum():
    ts = _panel(111, k=8, n=120)
    fit = fit_pca(ts)
    lam = np.linalg.eigvalsh(sample_autocov(ts, 0).matrix)[::-1]
    assert_allclose(fit.diagnostics["sigma2_hat"], lam[fit.p_hat:].sum(),
                    rtol=1e-10)
    assert fit.diagnostics["ic"] == ic_p(ts, fit.p_hat)


def test_fit_pca_default_cap_stays_below_full_rank():
    # at full rank the criterion is -inf and would win unconditionally
    ts = _panel(112, k=5, n=30)
    assert fit_pca(ts).p_hat <= 4


def test_fit_pca_strong_factor():
    # factor variance dwarfs the noise so the top eigenvector pins the span
    rng = np.random.default_rng(113)
    h = rng.uniform(-2.0, 2.0, size=(60, 1))
    x = 50.0 * rng.standard_normal((1, 2000))
    y = TimeSeries(h @ x + 0.1 * rng.standard_normal((60, 2000)))
    fit = fit_pca(y)
    assert fit.p_hat == 1
    assert subspace_error(fit.q_hat, h / np.linalg.norm(h)) <= 1e-3


def test_fit_pca_override_and_validation():
    ts = _panel(114, k=6, n=40)
    assert fit_pca(ts, p_override=3).p_hat == 3
    with pytest.raises(ValueError):
        fit_pca(ts, p_max=0)
    with pytest.raises(ValueError):
        fit_pca(ts, p_max=7)
    with pytest.raises(ValueError):
        fit_pca(ts, p_override=7)
