"""Fusion of independent confidence curves for a common focus parameter.

Each source curve is turned into a pseudo log-likelihood through the
chi-squared(1) quantile (``l = -G1^{-1}(cc) / 2``), the contributions are
summed, and the fused curve is read back through the deviance and ``G1``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import optimize, stats

from ._validation import check_vector
from .confidence import ConfidenceCurve, ConfidenceDistribution, cc_from_cd, deviance_to_cc, profile_cc


@dataclass
class SourceCC:
    label: str
    curve: ConfidenceCurve


def normal_conversion(cc):
    """Pseudo log-likelihood on the curve's grid; levels of 1 map to ``-inf``."""
    level = np.clip(np.asarray(cc.level, dtype=float), 0.0, 1.0)
    with np.errstate(over="ignore"):
        out = -0.5 * stats.chi2.ppf(level, 1)
    return np.where(level >= 1.0, -np.inf, out)


def _on_grid(curve, grid):
    g = curve.grid
    span = g[-1] - g[0]
    tol = 1e-9 * max(span, 1.0)
    if grid[0] < g[0] - tol or grid[-1] > g[-1] + tol:
        raise ValueError(f"source {curve.label!r} does not cover the fusion grid")
    return np.interp(grid, g, curve.level)


def fuse(sources, grid):
    """Fused confidence curve from two or more sources."""
    grid = np.asarray(grid, dtype=float)
    if len(sources) < 1:
        raise ValueError("need at least one source")
    total = np.zeros_like(grid)
    for src in sources:
        curve = src.curve if isinstance(src, SourceCC) else src
        level = _on_grid(curve, grid)
        total = total + normal_conversion(ConfidenceCurve(grid, level, curve.point_estimate))
    if not np.any(np.isfinite(total)):
        raise ValueError("sources have disjoint support; the fused likelihood is -inf everywhere")
    k = int(np.nanargmax(np.where(np.isfinite(total), total, -np.inf)))
    D = np.where(np.isfinite(total), 2.0 * (total[k] - total), np.inf)
    level = np.where(np.isfinite(D), deviance_to_cc(D), 1.0)
    return ConfidenceCurve(grid, level, grid[k], label="fused")


def chisq_sd_cd(sigma_hat, m, grid):
    """CD for a standard deviation from ``sigma_hat`` with ``m`` degrees of freedom.

    ``C(sigma) = 1 - G_m(m sigma_hat^2 / sigma^2)``.
    """
    if not sigma_hat > 0 or m < 1:
        raise ValueError("need sigma_hat > 0 and m >= 1")
    grid = np.asarray(grid, dtype=float)
    if np.any(grid <= 0):
        raise ValueError("grid for a standard deviation must be positive")
    cdf = stats.chi2.sf(m * sigma_hat**2 / grid**2, m)
    return ConfidenceDistribution(grid, cdf, ppf=lambda u: sigma_hat * np.sqrt(m / stats.chi2.ppf(1.0 - u, m)))


def nonparam_quantile_cd(sample, q, grid):
    """Half-corrected binomial CD for the ``q``-quantile.

    With ``k = #{y_i <= gamma}``, ``C(gamma) = P(Bin(n, q) < k) + P(Bin(n, q) = k) / 2``,
    a step function rising at the order statistics.
    """
    y = np.sort(check_vector(sample, "sample", 10))
    if not 0.0 < q < 1.0:
        raise ValueError("q must lie in (0, 1)")
    grid = np.asarray(grid, dtype=float)
    n = y.size
    k = np.searchsorted(y, grid, side="right")
    cdf = stats.binom.cdf(k - 1, n, q) + 0.5 * stats.binom.pmf(k, n, q)
    return ConfidenceDistribution(grid, cdf)


def normal_prior_cd(mean, sd, grid):
    if not sd > 0:
        raise ValueError("sd must be positive")
    grid = np.asarray(grid, dtype=float)
    return ConfidenceDistribution(grid, stats.norm.cdf(grid, mean, sd), ppf=lambda u: stats.norm.ppf(u, mean, sd))


def normal_quantile_loglik(sample, q, gamma):
    """Normal log-likelihood for the ``q``-quantile ``gamma = xi + z_q sigma``, maximised over sigma."""
    y = np.asarray(sample, dtype=float)
    z = stats.norm.ppf(q)
    n = y.size

    def neg(log_s):
        s = np.exp(log_s)
        r = y - gamma + z * s
        return n * log_s + 0.5 * float(r @ r) / s**2

    s0 = np.log(max(y.std(), 1e-8))
    res = optimize.minimize_scalar(neg, bounds=(s0 - 5, s0 + 5), method="bounded", options={"xatol": 1e-10})
    return -res.fun - 0.5 * n * np.log(2 * np.pi)


def normal_quantile_cc(sample, q, grid):
    """Profile-deviance curve for a quantile of a normal sample."""
    y = check_vector(sample, "sample", 3)
    xi, s = y.mean(), y.std()
    est = xi + stats.norm.ppf(q) * s
    ll_max = float(np.sum(stats.norm.logpdf(y, xi, s)))
    return profile_cc(lambda g: normal_quantile_loglik(y, q, g), grid, loglik_max=ll_max, point_estimate=est)


def source_from_cd(label, cd):
    curve = cc_from_cd(cd)
    curve.label = label
    return SourceCC(label, curve)
