"""Generalized-Pareto exceedances and season-maximum exceedance probabilities.

Exceedances follow ``G(y) = 1 - (1 - a y / sigma)^(1/a)`` for ``y > 0``; for
``a > 0`` the support ends at ``sigma / a``. With a Poisson(``lam``) number of
events per season the chance that the season maximum reaches ``y0`` is
``p = 1 - exp(-lam (1 - a y0 / sigma)^(1/a))``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from ._validation import check_vector
from .confidence import deviance_to_cc, profile_cc

A_ZERO = 1e-8
A_RANGE = (-2.0, 0.999)
GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class SeasonModel:
    lam: float
    y0: float
    transform_offset: float | None = None

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("season rate must be positive")
        if not self.y0 > 0:
            raise ValueError("threshold must be positive on the exceedance scale")

    @classmethod
    def from_counts(cls, n_events, n_seasons, y0, transform_offset=None):
        return cls(n_events / n_seasons, y0, transform_offset)


@dataclass
class GpdFit:
    a: float
    sigma: float
    n: int
    loglik_max: float
    support_ok: bool
    flags: list = field(default_factory=list)

    def to_dict(self):
        return {
            "a": self.a,
            "sigma": self.sigma,
            "n": self.n,
            "loglik_max": self.loglik_max,
            "support_ok": self.support_ok,
            "flags": list(self.flags),
        }


def transform(raw, offset):
    """``y = offset - r``; all transformed values must be positive."""
    r = check_vector(raw, "raw")
    y = offset - r
    if np.any(y <= 0):
        raise ValueError("all raw values must lie strictly below the offset")
    return y


def gpd_loglik(a, sigma, y):
    """Log-likelihood; ``-inf`` outside the support or for ``sigma <= 0``."""
    y = np.asarray(y, dtype=float)
    if not sigma > 0:
        return -np.inf
    n = y.size
    if abs(a) < A_ZERO:
        return float(-n * np.log(sigma) - y.sum() / sigma)
    u = 1.0 - a * y / sigma
    if np.any(u <= 0):
        return -np.inf
    return float(-n * np.log(sigma) + (1.0 / a - 1.0) * np.sum(np.log(u)))


def gpd_survival(a, sigma, y):
    y = np.asarray(y, dtype=float)
    if abs(a) < A_ZERO:
        return np.exp(-y / sigma)
    u = np.clip(1.0 - a * y / sigma, 0.0, None)
    with np.errstate(divide="ignore"):
        return np.where(u > 0, np.exp(np.log(np.where(u > 0, u, 1.0)) / a), 0.0)


def gpd_quantile(a, sigma, u):
    u = np.asarray(u, dtype=float)
    if abs(a) < A_ZERO:
        return -sigma * np.log1p(-u)
    return sigma / a * (1.0 - np.exp(a * np.log1p(-u)))


def season_exceed_prob(a, sigma, season):
    """Probability that a season's maximum reaches ``season.y0``."""
    tail = float(gpd_survival(a, sigma, season.y0))
    return float(-np.expm1(-season.lam * tail))


def _sigma_profile(a, y):
    """``max_sigma l(a, sigma)`` for fixed ``a``."""
    ymax = y.max()
    floor = a * ymax if a > 0 else 0.0
    scale = max(y.mean(), 1e-12)

    def neg(v):
        return -gpd_loglik(a, floor + np.exp(v), y)

    lo, hi = np.log(scale) - 12.0, np.log(scale) + 6.0
    vs = np.linspace(lo, hi, 25)
    vals = np.array([neg(v) for v in vs])
    i = int(np.argmin(vals))
    res = optimize.minimize_scalar(
        neg, bounds=(vs[max(i - 1, 0)], vs[min(i + 1, vs.size - 1)]), method="bounded", options={"xatol": 1e-12}
    )
    if res.fun > vals[i]:
        return floor + np.exp(vs[i]), -vals[i]
    return floor + np.exp(res.x), -res.fun


def gpd_fit(y):
    """Maximum likelihood for ``(a, sigma)`` with ``a`` restricted to ``(-2, 1)``.

    ``sigma`` is profiled out for each ``a`` (respecting ``sigma > a max(y)``
    when ``a > 0``) and the profile is maximised over ``a``.
    """
    y = check_vector(y, "y", 2)
    if np.any(y <= 0):
        raise ValueError("exceedances must be positive")
    if y.size < 20:
        warnings.warn("fewer than 20 exceedances; estimates will be unstable", RuntimeWarning, stacklevel=2)

    def prof(a):
        return _sigma_profile(a, y)[1]

    grid = np.linspace(A_RANGE[0], A_RANGE[1], 61)
    vals = np.array([prof(a) for a in grid])
    i = int(np.nanargmax(vals))
    res = optimize.minimize_scalar(
        lambda a: -prof(a),
        bounds=(grid[max(i - 1, 0)], grid[min(i + 1, grid.size - 1)]),
        method="bounded",
        options={"xatol": 1e-10},
    )
    a = float(res.x) if -res.fun >= vals[i] else float(grid[i])
    sigma, ll = _sigma_profile(a, y)
    flags = []
    if a > A_RANGE[1] - 1e-3 or a < A_RANGE[0] + 1e-3:
        flags.append("shape_at_boundary")
    support = bool(np.all(1.0 - a * y / sigma > 0)) if abs(a) >= A_ZERO else True
    return GpdFit(a=a, sigma=float(sigma), n=int(y.size), loglik_max=float(ll), support_ok=support, flags=flags)


def sigma_for_prob(a, p0, season):
    """Scale giving season exceedance probability ``p0`` at shape ``a``."""
    alpha0 = -np.log1p(-p0)
    ratio = alpha0 / season.lam
    if not 0.0 < ratio < 1.0:
        return np.nan
    log_r = np.log(ratio)
    if abs(a) < A_ZERO:
        return season.y0 / -log_r
    return a * season.y0 / -np.expm1(a * log_r)


def _golden_max(f, lo, hi, tol=1e-10, max_iter=200):
    c = hi - GOLDEN * (hi - lo)
    d = lo + GOLDEN * (hi - lo)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if hi - lo < tol:
            break
        if fc >= fd:
            hi, d, fd = d, c, fc
            c = hi - GOLDEN * (hi - lo)
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + GOLDEN * (hi - lo)
            fd = f(d)
    x = 0.5 * (lo + hi)
    return x, f(x)


def profile_loglik_p(y, p0, season, n_starts=20):
    """``max {l(a, sigma): p(a, sigma) = p0}`` as ``(loglik, a)``.

    ``sigma`` is eliminated through the constraint; the remaining search over
    ``a`` starts from ``n_starts`` grid points and refines the best bracket by
    golden-section search.
    """
    y = np.asarray(y, dtype=float)

    def f(a):
        s = sigma_for_prob(a, p0, season)
        if not np.isfinite(s) or s <= 0:
            return -np.inf
        return gpd_loglik(a, s, y)

    starts = np.linspace(A_RANGE[0], A_RANGE[1], n_starts)
    vals = np.array([f(a) for a in starts])
    if not np.any(np.isfinite(vals)):
        return -np.inf, np.nan
    best_val, best_a = -np.inf, np.nan
    order = np.argsort(vals)[::-1]
    for i in order[:3]:
        if not np.isfinite(vals[i]):
            continue
        lo, hi = starts[max(i - 1, 0)], starts[min(i + 1, n_starts - 1)]
        a, v = _golden_max(f, lo, hi)
        if v < vals[i]:
            a, v = starts[i], vals[i]
        if v > best_val:
            best_val, best_a = v, a
    return float(best_val), float(best_a)


def profile_cc_p(y, season, p_grid, fit=None):
    """Wilks confidence curve for the season exceedance probability.

    Grid points where the constraint has no feasible ``(a, sigma)`` get
    confidence level 1.
    """
    y = check_vector(y, "y")
    p_grid = np.asarray(p_grid, dtype=float)
    if np.any((p_grid <= 0) | (p_grid >= 1)):
        raise ValueError("p grid must lie inside (0, 1)")
    fit = gpd_fit(y) if fit is None else fit
    p_hat = season_exceed_prob(fit.a, fit.sigma, season)
    prof = np.array([profile_loglik_p(y, p, season)[0] for p in p_grid])
    ll_max = max(fit.loglik_max, float(np.nanmax(prof)))
    # an estimate off the grid (e.g. p = 0 when y0 is beyond the fitted support) is pinned to the nearest end
    p_hat = float(np.clip(p_hat, p_grid[0], p_grid[-1]))
    return profile_cc(prof, p_grid, loglik_max=ll_max, point_estimate=p_hat, label="p")


def wilks_level(y, season, p0, fit=None):
    """Confidence level ``G1(deviance)`` at a single ``p0``."""
    fit = gpd_fit(y) if fit is None else fit
    lp, _ = profile_loglik_p(y, p0, season)
    if not np.isfinite(lp):
        return 1.0
    return float(deviance_to_cc(2.0 * (max(fit.loglik_max, lp) - lp)))


def shock_barometer(cc_p):
    """Curve for ``100 (1 - p)``; confidence levels are carried over."""
    return cc_p.reparametrize(lambda p: 100.0 * (1.0 - np.asarray(p, dtype=float)), label="shock barometer")


def simulate_gpd(a, sigma, size, rng):
    return gpd_quantile(a, sigma, rng.uniform(size=size))


class GPDEstimator:
    """Thin estimator wrapper: ``fit(y)`` then probabilities and curves."""

    def __init__(self, season=None):
        self.season = season

    def get_params(self, deep=True):
        return {"season": self.season}

    def set_params(self, **params):
        for k, v in params.items():
            setattr(self, k, v)
        return self

    def fit(self, y):
        self.y_ = check_vector(y, "y")
        self.result_ = gpd_fit(self.y_)
        self.a_, self.sigma_ = self.result_.a, self.result_.sigma
        return self

    def score(self, y=None):
        y = self.y_ if y is None else y
        return gpd_loglik(self.a_, self.sigma_, y)

    def exceed_prob(self, season=None):
        return season_exceed_prob(self.a_, self.sigma_, season or self.season)

    def cc_p(self, p_grid, season=None):
        return profile_cc_p(self.y_, season or self.season, p_grid, fit=self.result_)
