import numpy as np
import pytest

from climcd.segmented import (
    SegmentedRegressor,
    bootstrap_break_test,
    compare_trends,
    fit_segmented,
    linear_loglik,
    profile_loglik,
    scan_profile,
)


def kkt_oracle(x, y, tau):
    """Constrained least squares via the KKT system on (a_L, b_L, a_R, b_R)."""
    xbar = x.mean()
    dx = x - xbar
    c = x[tau - 1] + 0.5 - xbar
    left = np.arange(x.size) < tau
    D = np.zeros((x.size, 4))
    D[left, 0], D[left, 1] = 1.0, dx[left]
    D[~left, 2], D[~left, 3] = 1.0, dx[~left]
    g = np.array([1.0, c, -1.0, -c])
    K = np.zeros((5, 5))
    K[:4, :4] = 2 * D.T @ D
    K[:4, 4] = g
    K[4, :4] = g
    sol = np.linalg.solve(K, np.r_[2 * D.T @ y, 0.0])
    theta = sol[:4]
    rss = float(np.sum((y - D @ theta) ** 2))
    n = x.size
    return theta, -0.5 * n * (np.log(2 * np.pi * rss / n) + 1)


def broken(rng, n=124, tau=62, bL=0.005, bR=0.04, sigma=0.5):
    x = np.arange(1901, 1901 + n, dtype=float)
    k = x[tau - 1] + 0.5
    mean = np.where(x <= k, bL * (x - k), bR * (x - k))
    return x, mean + sigma * rng.normal(size=n)


def test_profile_matches_kkt_oracle(rng):
    for _ in range(10):
        x, y = broken(rng, n=40, tau=int(rng.integers(8, 33)))
        for tau in (5, 17, 30):
            ll, coef = profile_loglik(x, y, tau, return_coef=True)
            theta, ll_ref = kkt_oracle(x, y, tau)
            assert ll == pytest.approx(ll_ref, abs=1e-9)
            np.testing.assert_allclose([coef["a_L"], coef["b_L"], coef["a_R"], coef["b_R"]], theta, atol=1e-9)


def test_scan_matches_pointwise(rng):
    x, y = broken(rng, n=50, tau=25)
    taus, prof = scan_profile(x, y, 10)
    assert taus[0] == 10 and taus[-1] == 40
    np.testing.assert_allclose(prof, [profile_loglik(x, y, int(t)) for t in taus], atol=1e-9)
    Y = np.column_stack([y, y[::-1]])
    _, both = scan_profile(x, Y, 10)
    np.testing.assert_allclose(both[:, 0], prof, atol=1e-10)


def test_exact_broken_line():
    x = np.arange(60, dtype=float)
    k = x[29] + 0.5
    y = np.where(x <= k, 1 + 0.1 * (x - k), 1 + 0.5 * (x - k))
    assert profile_loglik(x, y, 30) == np.inf
    fit = fit_segmented(x, y, 10)
    assert fit.tau == 30 and "exact_fit" in fit.flags
    assert fit.b_L == pytest.approx(0.1) and fit.b_R == pytest.approx(0.5)


def test_continuity_at_knot(rng):
    x, y = broken(rng)
    f = fit_segmented(x, y)
    c = f.knot - f.xbar
    assert f.a_L + f.b_L * c == pytest.approx(f.a_R + f.b_R * c, abs=1e-10)
    est = SegmentedRegressor().fit(x, y)
    eps = 1e-9
    assert est.predict([f.knot - eps])[0] == pytest.approx(est.predict([f.knot + eps])[0], abs=1e-6)


def test_min_size_checks(rng):
    x, y = broken(rng, n=20, tau=10)
    with pytest.raises(ValueError):
        fit_segmented(x, y, 10)
    with pytest.raises(ValueError):
        fit_segmented(x, y, 1)
    with pytest.raises(ValueError):
        fit_segmented(x[::-1], y, 5)


def test_ties_go_to_smallest_tau(monkeypatch):
    import climcd.segmented as seg

    x = np.arange(30, dtype=float)
    flat = lambda x, Y, i0: (np.arange(i0, x.size - i0 + 1), np.zeros(x.size - 2 * i0 + 1))  # noqa: E731
    monkeypatch.setattr(seg, "scan_profile", flat)
    assert seg.fit_segmented(x, np.sin(x), 5).tau == 5


def test_linear_data_aic_penalty():
    rng = np.random.default_rng(3)
    gaps = []
    for _ in range(100):
        x = np.arange(120, dtype=float)
        y = 0.02 * x + rng.normal(size=120)
        c = compare_trends(x, y)
        gaps.append(c["linear"]["aic"] - c["segmented"]["aic"])
    # the segmented model pays 2 * 2 extra dimensions and gains little
    assert np.mean(np.array(gaps) > 0) > 0.6
    assert 0.0 < np.median(gaps) < 4.0


def test_break_data_beats_linear_and_quadratic(rng):
    x, y = broken(rng, tau=95, bL=0.0, bR=0.08, sigma=0.2)
    c = compare_trends(x, y)
    ll_seg = c["segmented"]["loglik_max"]
    assert ll_seg - c["linear"]["loglik_max"] > 10
    assert ll_seg - c["quadratic"]["loglik_max"] > 3
    assert linear_loglik(x, y, 1) == pytest.approx(c["linear"]["loglik_max"])


def test_bootstrap_break_test(rng):
    x, y = broken(rng, sigma=0.2)
    out = bootstrap_break_test(x, y, n_boot=199, rng=1)
    assert out["p_value"] == pytest.approx(1 / 200)
    x0 = np.arange(124.0)
    out0 = bootstrap_break_test(x0, 0.01 * x0 + rng.normal(size=124), n_boot=199, rng=1)
    assert out0["p_value"] > 0.01


def test_estimator_api(rng):
    x, y = broken(rng)
    est = SegmentedRegressor(min_size=15)
    assert est.get_params() == {"min_size": 15}
    est.fit(x.reshape(-1, 1), y)
    assert est.aic_ == est.result_.aic
    assert 15 <= est.result_.tau <= 124 - 15
    d = est.result_.to_dict()
    assert d["dim"] == 5 and d["break_year"] == x[d["tau"] - 1]
