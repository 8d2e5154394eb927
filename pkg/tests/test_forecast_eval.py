"""AR fitting, error metrics, and the rolling forecast loop."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from qrfactors.factor_rrqr import FactorModelFit, fit_rrqr
from qrfactors.forecast_eval import (ArModel, forecast_error,
                                     forecast_one_step, rmse,
                                     rmse_conventional, rolling_eval,
                                     yule_walker)
from qrfactors.simgen import gen_sim1
from qrfactors.tsdata import TimeSeries

from oracles import brute_series_autocov


# ------------------------------------------------------------------
# Yule-Walker


def test_yule_walker_recovers_ar1():
    rng = np.random.default_rng(201)
    x = np.empty(20_000)
    x[0] = 0.0
    for t in range(1, x.size):
        x[t] = 0.9 * x[t - 1] + rng.standard_normal()
    model = yule_walker(x, order=1)
    assert model.order == 1
    assert abs(model.coeffs[0] - 0.9) < 0.05
    # innovation variance of the generating recursion
    assert abs(model.noise_var - 1.0) < 0.1


def test_yule_walker_white_noise_coeffs_are_small():
    rng = np.random.default_rng(202)
    model = yule_walker(rng.standard_normal(20_000), order=3)
    assert np.abs(model.coeffs).max() < 0.05


def test_yule_walker_solves_the_autocovariance_system():
    # same equations assembled by hand from the scalar-loop oracle
    rng = np.random.default_rng(203)
    x = np.cumsum(rng.standard_normal(200)) * 0.1 + rng.standard_normal(200)
    order = 3
    cov = np.array([brute_series_autocov(x, l) for l in range(order + 1)])
    toep = np.array([[cov[abs(i - j)] for j in range(order)]
                     for i in range(order)])
    want = np.linalg.solve(toep, cov[1:])
    model = yule_walker(x, order)
    assert_allclose(model.coeffs, want, rtol=1e-8)
    assert model.noise_var >= 0.0


def test_yule_walker_input_validation():
    rng = np.random.default_rng(204)
    with pytest.raises(ValueError):
        yule_walker(rng.standard_normal(10), order=0)
    with pytest.raises(ValueError):
        yule_walker(rng.standard_normal(10), order=6)   # > n // 2


def test_ar_model_validation():
    with pytest.raises(ValueError):
        ArModel(order=2, coeffs=(0.5,), noise_var=1.0)
    with pytest.raises(ValueError):
        ArModel(order=1, coeffs=(0.5,), noise_var=-1.0)


# ------------------------------------------------------------------
# one-step forecasting


def _rank_one_fit(k=4):
    q = np.zeros((k, 1))
    q[0, 0] = 1.0
    return FactorModelFit(method="RRQR", p_hat=1, q_hat=q,
                          factors=np.zeros((1, 10)))


def test_forecast_one_step_hand_arithmetic():
    fit = _rank_one_fit()
    ar = [ArModel(order=2, coeffs=(0.5, 0.25), noise_var=1.0)]
    hist = np.array([[1.0, 2.0, 3.0, 4.0]])
    # newest first: 0.5 * 4 + 0.25 * 3 = 2.75, mapped through q
    got = forecast_one_step(fit, ar, hist)
    assert_allclose(got, [2.75, 0.0, 0.0, 0.0], atol=1e-14)


def test_forecast_rank_zero_warns_and_returns_zero():
    q = np.zeros((3, 0))
    fit = FactorModelFit(method="RRQR", p_hat=0, q_hat=q,
                         factors=np.zeros((0, 5)))
    with pytest.warns(UserWarning):
        got = forecast_one_step(fit, [], np.zeros((0, 5)))
    assert_allclose(got, 0.0, atol=1e-16)


def test_forecast_one_step_validation():
    fit = _rank_one_fit()
    ar = [ArModel(order=3, coeffs=(0.1, 0.1, 0.1), noise_var=1.0)]
    with pytest.raises(ValueError, match="history"):
        forecast_one_step(fit, ar, np.array([[1.0, 2.0]]))   # too short
    with pytest.raises(ValueError, match="rows"):
        forecast_one_step(fit, ar, np.zeros((2, 5)))
    with pytest.raises(ValueError, match="AR models"):
        forecast_one_step(fit, [], np.zeros((1, 5)))


# ------------------------------------------------------------------
# error metrics


def _unit_fit(recon_value):
    return FactorModelFit(method="RRQR", p_hat=1, q_hat=np.array([[1.0]]),
                          factors=np.array([[recon_value]]))


def test_rmse_single_cell_arithmetic():
    # reconstruction 3, truth 1: sqrt(|3-1| / 1) = sqrt(2)
    fit = _unit_fit(3.0)
    got = rmse(fit, np.array([[1.0]]), np.array([[1.0]]))
    assert_allclose(got, np.sqrt(2.0), rtol=1e-14)


def test_rmse_conventional_single_cell():
    fit = _unit_fit(3.0)
    got = rmse_conventional(fit, np.array([[1.0]]), np.array([[1.0]]))
    assert_allclose(got, 2.0, rtol=1e-14)


def test_rmse_zero_on_perfect_fit():
    fit = _unit_fit(5.0)
    truth_h = np.array([[1.0]])
    truth_x = np.array([[5.0]])
    assert rmse(fit, truth_h, truth_x) == 0.0
    assert rmse_conventional(fit, truth_h, truth_x) == 0.0


def test_rmse_shape_mismatch():
    fit = _unit_fit(1.0)
    with pytest.raises(ValueError, match="shape"):
        rmse(fit, np.eye(2), np.ones((2, 5)))


def test_forecast_error_hand_arithmetic():
    # one time step, K=4, residual (1,1,1,1): 4^{-1/2} * 2 = 1
    preds = np.zeros((4, 1))
    actuals = np.ones((4, 1))
    assert_allclose(forecast_error(preds, actuals), 1.0, rtol=1e-14)


def test_forecast_error_averages_over_time():
    preds = np.zeros((1, 4))
    actuals = np.array([[1.0, 2.0, 3.0, 4.0]])
    assert_allclose(forecast_error(preds, actuals), 2.5, rtol=1e-14)


def test_forecast_error_zero_iff_equal():
    rng = np.random.default_rng(205)
    x = rng.standard_normal((3, 7))
    assert forecast_error(x, x) == 0.0
    assert forecast_error(x, x + 1e-3) > 0.0


def test_forecast_error_row_permutation_invariant():
    rng = np.random.default_rng(206)
    preds, actuals = rng.standard_normal((2, 5, 8))
    perm = rng.permutation(5)
    assert_allclose(forecast_error(preds[perm], actuals[perm]),
                    forecast_error(preds, actuals), rtol=1e-13)


def test_forecast_error_rejects_empty_and_mismatched():
    with pytest.raises(ValueError):
        forecast_error(np.zeros((2, 0)), np.zeros((2, 0)))
    with pytest.raises(ValueError):
        forecast_error(np.zeros((2, 3)), np.zeros((2, 4)))


# ------------------------------------------------------------------
# rolling evaluation


def test_rolling_eval_single_refit_matches_manual_composition():
    # stride >= eval_len collapses the loop to one fitted window
    data = gen_sim1(k=6, n=450, seed=207)
    window, eval_len, ar_order = 300, 150, 5
    report = rolling_eval(data.y, "rrqr", window=window, refit_stride=eval_len,
                          ar_order=ar_order, eval_len=eval_len)
    assert len(report.per_window) == 1
    assert report.p_hat_mean == report.per_window[0].p_hat

    vals = data.y.values
    w0 = data.y.N - eval_len - window
    wvals = vals[:, w0:w0 + window]
    wmean = wvals.mean(axis=1, keepdims=True)
    fit = fit_rrqr(TimeSeries(wvals))
    ar = [yule_walker(row, ar_order) for row in fit.factors]
    preds = []
    for t in range(w0 + window, data.y.N):
        hist = fit.q_hat.T @ (vals[:, w0:t] - wmean)
        preds.append(forecast_one_step(fit, ar, hist) + wmean[:, 0])
    fe = forecast_error(np.column_stack(preds), vals[:, w0 + window:])
    assert_allclose(report.fe, fe, rtol=1e-12)


def test_rolling_eval_methods_and_records():
    data = gen_sim1(k=8, n=700, seed=208)
    report = rolling_eval(data.y, "evd", window=400, refit_stride=100,
                          ar_order=4, eval_len=300)
    assert report.method == "evd"
    assert len(report.per_window) == 3
    starts = [w.start for w in report.per_window]
    assert starts == sorted(starts)
    assert report.p_hat_mean == 1.0
    assert report.fe > 0.0
    assert report.rmse_mean > 0.0


def test_rolling_eval_rejects_short_series():
    data = gen_sim1(k=5, n=120, seed=209)
    with pytest.raises(ValueError):
        rolling_eval(data.y, "rrqr", window=100, eval_len=50)


def test_rolling_eval_rejects_unknown_method():
    data = gen_sim1(k=5, n=900, seed=210)
    with pytest.raises(ValueError, match="method"):
        rolling_eval(data.y, "arima", window=500, eval_len=400)


def test_rolling_eval_constant_series_errors():
    ts = TimeSeries(np.ones((4, 900)))
    with pytest.raises(ValueError):
        rolling_eval(ts, "rrqr", window=500, eval_len=300)
