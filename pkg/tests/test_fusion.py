import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from climcd.confidence import ConfidenceCurve, cc_from_cd
from climcd.fusion import (
    SourceCC,
    chisq_sd_cd,
    fuse,
    nonparam_quantile_cd,
    normal_conversion,
    normal_prior_cd,
    normal_quantile_cc,
    source_from_cd,
)

GRID = np.linspace(1, 15, 1001)


def normal_source(mu, s, grid):
    return source_from_cd("n", normal_prior_cd(mu, s, grid))


def test_conversion_values():
    g = np.array([0.0, 1.0, 2.0])
    cc = ConfidenceCurve(g, np.array([0.95, 0.0, 1.0]), 1.0)
    out = normal_conversion(cc)
    assert out[1] == 0.0
    assert out[0] == pytest.approx(-1.9207, abs=1e-4)
    assert out[2] == -np.inf


def test_conversion_of_normal_cc_is_quadratic():
    g = np.linspace(-3, 3, 61)
    src = normal_source(0.4, 0.8, g)
    ell = normal_conversion(src.curve)
    mask = np.abs(g - 0.4) < 2.5
    np.testing.assert_allclose(ell[mask], -0.5 * (g[mask] - 0.4) ** 2 / 0.8**2, atol=1e-8)


def test_two_identical_normals():
    g = np.linspace(-6, 6, 2401)
    s = 1.2
    fused = fuse([normal_source(0.0, s, g), normal_source(0.0, s, g)], g)
    iv = fused.interval(0.9)
    half = stats.norm.ppf(0.95) * s / np.sqrt(2)
    assert iv.lower == pytest.approx(-half, abs=2e-3)
    assert iv.upper == pytest.approx(half, abs=2e-3)


def test_single_source_idempotent():
    g = np.linspace(-4, 4, 801)
    src = normal_source(0.3, 1.0, g)
    fused = fuse([src], g)
    mask = src.curve.level < 0.999999
    np.testing.assert_allclose(fused.level[mask], src.curve.level[mask], atol=1e-9)


def test_chisq_intervals_illustration_a():
    a = chisq_sd_cd(3.33, 6, GRID)
    b = chisq_sd_cd(5.55, 6, GRID)
    assert a.quantile(0.025) == pytest.approx(2.15, abs=0.01)
    assert a.quantile(0.975) == pytest.approx(7.33, abs=0.01)
    assert b.quantile(0.025) == pytest.approx(3.58, abs=0.01)
    assert b.quantile(0.975) == pytest.approx(12.22, abs=0.01)
    fused = fuse([source_from_cd("a", a), source_from_cd("b", b)], GRID).interval(0.95)
    assert fused.lower == pytest.approx(3.35, abs=0.05)
    assert fused.upper == pytest.approx(7.85, abs=0.05)


def test_chisq_median():
    sh, m = 2.0, 9
    med = sh * np.sqrt(m / stats.chi2.ppf(0.5, m))
    cd = chisq_sd_cd(sh, m, np.linspace(0.5, 6, 11))
    assert cd.quantile(0.5) == pytest.approx(med)
    assert float(stats.chi2.sf(m * sh**2 / med**2, m)) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        chisq_sd_cd(2.0, 9, np.linspace(-1, 1, 5))


def test_fuse_errors():
    g = np.linspace(0, 1, 11)
    a = SourceCC("a", ConfidenceCurve(g, np.where(g < 0.5, 0.2, 1.0), 0.2))
    b = SourceCC("b", ConfidenceCurve(g, np.where(g > 0.5, 0.2, 1.0), 0.8))
    with pytest.raises(ValueError, match="disjoint"):
        fuse([a, b], g)
    with pytest.raises(ValueError, match="cover"):
        fuse([a], np.linspace(-1, 1, 11))


def test_nonparam_quantile_cd_below_minimum():
    rng = np.random.default_rng(1)
    y = rng.normal(size=15)
    cd = nonparam_quantile_cd(y, 0.75, np.array([y.min() - 1.0]))
    assert cd.cdf[0] == pytest.approx(0.5 * 0.25**15)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-100, 100), min_size=10, max_size=40, unique=True), st.floats(0.05, 0.95))
def test_nonparam_cd_monotone(sample, q):
    y = np.sort(sample)
    grid = np.unique(np.r_[y, (y[1:] + y[:-1]) / 2, y[0] - 1, y[-1] + 1])
    cd = nonparam_quantile_cd(y, q, grid)
    assert np.all(np.diff(cd.cdf) >= -1e-15)
    assert 0 <= cd.cdf[0] and cd.cdf[-1] <= 1


def test_nonparam_coverage():
    rng = np.random.default_rng(4)
    truth = stats.expon.ppf(0.75)
    hits, reps = 0, 2000
    grid = np.linspace(0, 12, 2401)
    for _ in range(reps):
        y = rng.exponential(size=20)
        cd = nonparam_quantile_cd(y, 0.75, grid)
        c = float(np.interp(truth, grid, cd.cdf))
        hits += 0.05 <= c <= 0.95
    assert abs(hits / reps - 0.90) <= 0.04


def test_normal_prior():
    g = np.linspace(0, 15, 3001)
    cd = normal_prior_cd(7.5, 1.25, g)
    assert cd.quantile(0.05) == pytest.approx(5.44, abs=0.005)
    assert cd.quantile(0.95) == pytest.approx(9.56, abs=0.005)
    assert float(np.interp(7.5, g, cd.cdf)) == pytest.approx(0.5)
    d = 1.7
    c = np.interp([7.5 + d, 7.5 - d], g, cd.cdf)
    assert c.sum() == pytest.approx(1.0, abs=1e-6)
    with pytest.raises(ValueError):
        normal_prior_cd(0, 0, g)


def test_normal_quantile_cc(rng):
    y = rng.normal(10, 2, size=40)
    est = y.mean() + stats.norm.ppf(0.9) * y.std()
    g = np.sort(np.r_[np.linspace(8, 16, 401), est])
    cc = normal_quantile_cc(y, 0.9, g)
    assert cc.point_estimate == pytest.approx(est)
    assert cc(est) == pytest.approx(0.0, abs=1e-4)
    iv = cc.interval(0.9)
    assert iv.lower < est < iv.upper


def test_cc_from_chisq_cd_is_source():
    src = source_from_cd("x", chisq_sd_cd(3.33, 6, GRID))
    assert src.curve.label == "x"
    np.testing.assert_allclose(src.curve.level, np.abs(1 - 2 * cc_from_cd(src.curve.cd).cd.cdf))
