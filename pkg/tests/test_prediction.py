import warnings

import numpy as np
import pytest
from scipy import stats

from climcd.prediction import (
    LinearFitSummary,
    TrendRegressor,
    crossing_cap,
    crossing_cc,
    crossing_estimate,
    predict_cd,
)


def summary_with_t(t, n=124, sigma=1.0, M=158875.0):
    b = t * sigma / np.sqrt(M)
    return LinearFitSummary(0.0, b, sigma, n, 1962.5, M, 2024.0)


def test_cd_half_at_fitted_value(rng):
    x = np.arange(30.0)
    fit = LinearFitSummary.from_data(x, 2 + 0.1 * x + rng.normal(size=30))
    cd = predict_cd(fit, 40.0)
    assert float(np.interp(fit.mean_at(40.0), cd.grid, cd.cdf)) == pytest.approx(0.5, abs=1e-12)
    assert cd.median == pytest.approx(fit.mean_at(40.0))


def test_large_n_at_mean():
    fit = LinearFitSummary(3.0, 0.1, 2.0, 10**6, 0.0, 1e9)
    cd = predict_cd(fit, 0.0)
    assert cd.quantile(0.95) - 3.0 == pytest.approx(1.645 * 2.0, abs=1e-2)
    assert 3.0 - cd.quantile(0.05) == pytest.approx(1.645 * 2.0, abs=1e-2)


def test_predictive_quantiles_monte_carlo():
    # repeated-sampling oracle: the 0.05/0.95 CD quantiles must cover a fresh
    # observation with the nominal frequencies
    rng = np.random.default_rng(8)
    n, reps = 10, 20000
    x = np.arange(n, dtype=float)
    x_new = 13.0
    Y = 1.0 + 0.4 * x[None, :] + rng.normal(size=(reps, n))
    y_new = 1.0 + 0.4 * x_new + rng.normal(size=reps)
    xc = x - x.mean()
    b = Y @ xc / (xc @ xc)
    a = Y.mean(axis=1)
    res = Y - a[:, None] - b[:, None] * xc[None, :]
    s = np.sqrt((res**2).sum(axis=1) / (n - 2))
    below_lo = below_hi = 0
    for k in range(reps):
        fit = LinearFitSummary(a[k], b[k], s[k], n, x.mean(), xc @ xc)
        cd = predict_cd(fit, x_new)
        below_lo += y_new[k] < cd.quantile(0.05)
        below_hi += y_new[k] < cd.quantile(0.95)
    se = np.sqrt(0.05 * 0.95 / reps)
    assert abs(below_lo / reps - 0.05) < 4 * se
    assert abs(below_hi / reps - 0.95) < 4 * se


def test_crossing_zero_at_estimate():
    fit = summary_with_t(3.0)
    cc = crossing_cc(fit, 1.5, np.linspace(2025, 3000, 500))
    x_hat = crossing_estimate(fit, 1.5)
    assert cc.point_estimate == pytest.approx(x_hat)
    assert cc(x_hat) == 0.0


def test_cap_values():
    cap, _ = crossing_cap(summary_with_t(1.501, n=124))
    assert cap == pytest.approx(0.864, abs=2e-3)
    cap, t = crossing_cap(summary_with_t(3.598, n=124))
    assert cap == pytest.approx(1 - 2 * stats.t.sf(3.598, 122), abs=1e-12)
    assert 1 - cap == pytest.approx(4.7e-4, abs=2e-5)
    assert crossing_cap(LinearFitSummary(0.0, 0.0, 1.0, 20, 0.0, 10.0))[0] == 0.0


def test_cap_is_supremum_on_wide_grid():
    fit = summary_with_t(1.501)
    grid = np.linspace(2025, 2025 + 1e7, 20001)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        cc = crossing_cc(fit, 1.5, grid)
    cap, _ = crossing_cap(fit)
    # beyond the estimate the curve climbs towards the cap and never passes it
    right = cc.level[cc.grid >= cc.point_estimate]
    assert np.all(np.diff(right) >= -1e-12)
    assert right.max() <= cap + 1e-12
    assert right.max() == pytest.approx(cap, abs=1e-3)
    iv = cc.interval(0.9)
    assert iv.upper == np.inf


def test_crossing_errors():
    with pytest.raises(ValueError, match="positive"):
        crossing_cc(LinearFitSummary(0.0, -0.1, 1.0, 20, 0.0, 10.0), 1.0, np.linspace(0, 10, 11))
    fit = summary_with_t(3.0)
    with pytest.raises(ValueError, match="already reached"):
        crossing_cc(fit, -1.0, np.linspace(2025, 2100, 50))
    with pytest.warns(RuntimeWarning, match="horizon"):
        crossing_cc(fit, 5.0, np.linspace(2025, 2100, 50))


def test_trend_regressor_degree_one_matches_summary(rng):
    x = np.arange(1901, 2025, dtype=float)
    y = 0.01 * (x - 1960) + rng.normal(0, 0.5, x.size)
    est = TrendRegressor().fit(x, y)
    ref = LinearFitSummary.from_data(x, y)
    assert est.summary_.bhat == pytest.approx(ref.bhat)
    assert est.sigma_ == pytest.approx(ref.sigmahat)
    assert est.predict_cd(2030.0).quantile(0.9) == pytest.approx(predict_cd(ref, 2030.0).quantile(0.9))
    assert est.crossing_cap()[0] == pytest.approx(crossing_cap(ref)[0])
    grid = np.linspace(2025, 2300, 1101)
    a = est.crossing_cc(1.5, grid)
    b = crossing_cc(ref, 1.5, grid)
    assert a.point_estimate == pytest.approx(b.point_estimate, abs=1e-8)
    np.testing.assert_allclose(a(np.linspace(2030, 2290, 27)), b(np.linspace(2030, 2290, 27)), atol=1e-10)


def test_quadratic_extension(rng):
    x = np.arange(100, dtype=float)
    y = 0.001 * (x - 50) ** 2 + rng.normal(0, 0.3, 100)
    est = TrendRegressor(degree=2).fit(x, y)
    B = np.vander(x - x.mean(), 3, increasing=True)
    coef = np.linalg.lstsq(B, y, rcond=None)[0]
    np.testing.assert_allclose(est.coef_, coef, atol=1e-10)
    cap, t = est.crossing_cap()
    s2 = np.sum((y - B @ coef) ** 2) / 97
    t_ref = coef[2] / np.sqrt(s2 * np.linalg.inv(B.T @ B)[2, 2])
    assert t == pytest.approx(t_ref)
    # far out the squared pivot approaches the leading-coefficient t^2
    far = est.crossing_level(10.0, [1e7])[0]
    assert far == pytest.approx(cap, abs=1e-6)
    cc = est.crossing_cc(4.0, np.linspace(100, 400, 601))
    assert cc(cc.point_estimate) == 0.0
    assert est.predict([cc.point_estimate])[0] == pytest.approx(4.0, abs=1e-8)


def test_trend_regressor_validation():
    with pytest.raises(ValueError, match="degree"):
        TrendRegressor(degree=0).fit(np.arange(10.0), np.arange(10.0))
    assert TrendRegressor(degree=3).get_params() == {"degree": 3}
