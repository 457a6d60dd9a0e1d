import numpy as np
import pytest
from scipy import stats

from climcd.gls_ar import GlsArModel, fit_mle, simulate_ar1
from climcd.monitoring import (
    ar1_coefficient,
    inflation_factor,
    loglik_bridge,
    mean_bridge,
    param_bridges,
    scan_fits,
    simulate_null_quantiles,
    slope_bridge,
)


def naive_slope_bridge(x, y, i0):
    n = x.size
    coef = np.polyfit(x, y, 1)
    sigma = np.sqrt(np.sum((y - np.polyval(coef, x)) ** 2) / (n - 2))
    out = []
    for tau in range(i0, n - i0 + 1):
        xl, xr = x[:tau], x[tau:]
        bl = np.polyfit(xl, y[:tau], 1)[0]
        br = np.polyfit(xr, y[tau:], 1)[0]
        ml = np.sum((xl - xl.mean()) ** 2)
        mr = np.sum((xr - xr.mean()) ** 2)
        out.append((br - bl) / (sigma * np.sqrt(1 / ml + 1 / mr)))
    return np.array(out)


def test_slope_bridge_matches_naive(rng):
    x = np.arange(1900, 1980, dtype=float)
    y = 0.02 * x + rng.normal(size=x.size)
    br = slope_bridge(x, y, 10, years=x.astype(int))
    np.testing.assert_allclose(br.values, naive_slope_bridge(x, y, 10), rtol=1e-8, atol=1e-10)
    assert br.years[0] == 1909
    assert br.window == (10 / 80, 1 - 10 / 80)


def test_slope_bridge_degenerate():
    x = np.arange(40.0)
    with pytest.raises(ValueError, match="zero"):
        slope_bridge(x, 2 + 0.5 * x)


def test_mean_bridge_is_welch_scan(rng):
    x = rng.normal(size=60)
    br = mean_bridge(x, 8, 0.0)
    ref = [stats.ttest_ind(x[t:], x[:t], equal_var=False).statistic for t in range(8, 53)]
    np.testing.assert_allclose(br.values, ref, rtol=1e-10)
    scaled = mean_bridge(x, 8, 0.422)
    np.testing.assert_allclose(scaled.values * inflation_factor(0.422), br.values, rtol=1e-12)


def test_inflation_factor():
    assert inflation_factor(0.422) == pytest.approx(np.sqrt(1.422 / 0.578), rel=1e-14)
    assert inflation_factor(0.422) == pytest.approx(1.5685, abs=1e-4)
    assert inflation_factor(0.0) == 1.0
    with pytest.raises(ValueError):
        inflation_factor(1.0)


def test_ar1_coefficient(rng):
    x = simulate_ar1(np.arange(5000), 0.6, rng)
    assert ar1_coefficient(x) == pytest.approx(0.6, abs=0.04)


def _lagged_model(rng, n, rho=0.4, rho2=None):
    t = np.arange(n)
    X = np.column_stack([np.ones(n), rng.normal(size=n), rng.normal(size=n)])
    noise = simulate_ar1(t, rho, rng)
    if rho2 is not None:
        noise[n // 2 :] = simulate_ar1(t[n // 2 :], rho2, rng)
    return X, X @ [1.0, 0.5, 0.2] + noise, t


def test_loglik_bridge_against_refits(rng):
    X, y, t = _lagged_model(rng, 60)
    t = np.delete(np.arange(63), [20, 21, 40])
    br = loglik_bridge(X, y, t, i0=15)
    full = fit_mle(GlsArModel(X, t), y)
    for j in (0, 10, 30):
        tau = int(br.taus[j])
        sub = fit_mle(GlsArModel(X[:tau], t[:tau]), y[:tau])
        want = (sub.loglik_max - tau / 60 * full.loglik_max) / (np.sqrt(60) * np.sqrt(0.5))
        assert br.values[j] == pytest.approx(want, abs=1e-6)
    assert br.values[-1] == 0.0
    assert br.years[-1] == t[-1]


def test_param_bridges_end_at_zero(rng):
    X, y, t = _lagged_model(rng, 80)
    scan = scan_fits(X, y, t, 12)
    bridges = param_bridges(X, y, t, scan=scan)
    assert [b.label for b in bridges] == ["beta0", "beta1", "beta2", "sigma", "rho"]
    assert all(b.values[-1] == 0.0 for b in bridges)
    assert loglik_bridge(X, y, t, scan=scan).values[-1] == 0.0


def test_scan_min_length_validation(rng):
    X, y, t = _lagged_model(rng, 40)
    with pytest.raises(ValueError):
        scan_fits(X, y, t, 4)


def test_null_quantiles_reproducible_and_monotone():
    a = simulate_null_quantiles("weighted", 0.05, paths=10_000, seed=4)
    b = simulate_null_quantiles("weighted", 0.05, paths=10_000, seed=4)
    assert a.quantiles == b.quantiles
    wider = simulate_null_quantiles("weighted", 0.15, paths=10_000, seed=4)
    assert wider.critical_value(0.95) < a.critical_value(0.95)
    assert 0 < a.p_value(a.critical_value(0.95)) <= 0.051
    with pytest.raises(ValueError):
        simulate_null_quantiles("weighted", 0.05, paths=500)
    with pytest.raises(ValueError):
        simulate_null_quantiles("weighted", (0.1, 1.0), paths=10_000)
    with pytest.raises(ValueError):
        simulate_null_quantiles("nonsense", 0.05, paths=10_000)


def test_plain_bridge_quantile_near_kolmogorov():
    nq = simulate_null_quantiles("bridge", (1e-3, 1.0), paths=20_000, seed=2)
    # discretisation biases the maximum slightly downwards
    assert nq.critical_value(0.95) == pytest.approx(1.358, abs=0.03)


def test_mean_bridge_power():
    rng = np.random.default_rng(12)
    reps, n, hits = 200, 200, 0
    for _ in range(reps):
        x = rng.normal(size=n)
        x[n // 2 :] += 2.0
        hits += mean_bridge(x, 10, 0.0).max_abs > 3.18
    assert hits / reps >= 0.95


def test_rho_change_flags_rho_bridge():
    rng = np.random.default_rng(21)
    null = simulate_null_quantiles("bridge", (0.05, 1.0), paths=10_000, seed=1)
    crit = null.critical_value(0.95)
    rho_hits = beta_hits = 0
    reps = 30
    for _ in range(reps):
        X, y, t = _lagged_model(rng, 300, 0.2, 0.8)
        bridges = {b.label: b for b in param_bridges(X, y, t, i0=15)}
        rho_hits += bridges["rho"].max_abs > crit
        beta_hits += bridges["beta1"].max_abs > crit
    assert rho_hits > beta_hits
    assert rho_hits / reps > 0.5


def test_bridge_test_and_csv(rng):
    x = np.arange(100.0)
    br = slope_bridge(x, 0.01 * x + rng.normal(size=100), 10, years=np.arange(1900, 2000))
    null = simulate_null_quantiles(br.null_kind, br.window, paths=10_000)
    res = br.test(null)
    assert set(res) >= {"max_abs", "argmax", "critical_value", "exceeded", "p_value"}
    text = br.to_csv()
    assert text.splitlines()[0] == "tau,year,value"
    assert len(text.splitlines()) == br.taus.size + 1
