"""Confidence distributions for future observations and barrier-crossing years.

Straight-line regression ``y = a + b (x - xbar) + sigma eps`` with i.i.d.
normal errors. A future observation has a Student-t pivot; the year ``x0`` at
which the mean line reaches a threshold ``y0`` gets a confidence curve from the
squared pivot ``{y0 - a_hat - b_hat (x0 - xbar)}^2 / var``, which is F(1, m)
distributed at the true ``x0``. Its supremum stays below one unless the slope is
clearly non-zero, so high-level intervals may contain infinity.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import optimize, stats
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_vector
from .confidence import ConfidenceCurve, ConfidenceDistribution
from .series import center


@dataclass(frozen=True)
class LinearFitSummary:
    """Least-squares line in centred form; ``sigmahat`` uses divisor ``n - 2``."""

    ahat: float
    bhat: float
    sigmahat: float
    n: int
    xbar: float
    M_n: float
    x_last: float | None = None

    def __post_init__(self):
        if self.n - 2 < 1:
            raise ValueError("need at least 3 observations")
        if not self.sigmahat > 0:
            raise ValueError("residual sd must be positive")
        if not self.M_n > 0:
            raise ValueError("covariate sum of squares must be positive")

    @property
    def m(self):
        return self.n - 2

    @property
    def t_stat(self):
        return np.sqrt(self.M_n) * self.bhat / self.sigmahat

    @classmethod
    def from_data(cls, x, y):
        x = check_vector(x, "x", 3)
        y = check_vector(y, "y", 3)
        if x.shape != y.shape:
            raise ValueError("x and y must have equal length")
        cov = center(x)
        dx = x - cov.xbar
        b = float(dx @ y) / cov.M_n
        a = float(y.mean())
        r = y - a - b * dx
        sigma = np.sqrt(float(r @ r) / (x.size - 2))
        return cls(a, b, sigma, x.size, cov.xbar, cov.M_n, float(x.max()))

    def mean_at(self, x):
        return self.ahat + self.bhat * (np.asarray(x, dtype=float) - self.xbar)


def _default_grid(center_value, scale, size=401, width=6.0):
    return np.linspace(center_value - width * scale, center_value + width * scale, size)


def predict_cd(fit, x_new, grid=None):
    """CD for a new observation at covariate value ``x_new``."""
    loc = float(fit.mean_at(x_new))
    scale = fit.sigmahat * np.sqrt(1.0 + 1.0 / fit.n + (x_new - fit.xbar) ** 2 / fit.M_n)
    if grid is None:
        grid = _default_grid(loc, scale)
    grid = np.asarray(grid, dtype=float)
    cdf = stats.t.cdf((grid - loc) / scale, fit.m)
    return ConfidenceDistribution(grid, cdf, ppf=lambda u: loc + scale * stats.t.ppf(u, fit.m))


def crossing_statistic(fit, y0, x0):
    x0 = np.asarray(x0, dtype=float)
    num = (y0 - fit.mean_at(x0)) ** 2
    den = fit.sigmahat**2 * (1.0 / fit.n + (x0 - fit.xbar) ** 2 / fit.M_n)
    return num / den


def crossing_cap(fit):
    """``(cap, t_n)``: the limit of the crossing curve and the slope t-statistic.

    ``cap = F_{1,m}(t_n^2) = 1 - p*`` with ``p*`` the two-sided p-value of the
    zero-slope test.
    """
    t = float(fit.t_stat)
    return float(stats.f.cdf(t**2, 1, fit.m)), t


def crossing_estimate(fit, y0):
    if fit.bhat <= 0:
        raise ValueError("crossing year needs a positive estimated slope")
    return fit.xbar + (y0 - fit.ahat) / fit.bhat


def crossing_cc(fit, y0, x0_grid, allow_reached=False, horizon=None):
    """Confidence curve for the year at which the mean line reaches ``y0``.

    The curve's limit as ``x0`` grows is recorded as ``upper_limit`` so that
    intervals above that level report an infinite upper end.
    """
    if fit.bhat <= 0:
        raise ValueError("crossing year needs a positive estimated slope")
    if not allow_reached and fit.x_last is not None and y0 <= fit.mean_at(fit.x_last):
        raise ValueError("threshold already reached by the fitted line at the last observed year")
    grid = np.asarray(x0_grid, dtype=float)
    level = stats.f.cdf(crossing_statistic(fit, y0, grid), 1, fit.m)
    x_hat = crossing_estimate(fit, y0)
    cap, _ = crossing_cap(fit)
    lo, hi = (grid[0], grid[-1]) if horizon is None else horizon
    if not lo <= x_hat <= hi:
        warnings.warn(
            f"estimated crossing year {x_hat:.1f} outside the horizon [{lo:g}, {hi:g}]", RuntimeWarning, stacklevel=2
        )
    # the curve touches zero at x_hat; put it on the grid
    if grid[0] < x_hat < grid[-1] and not np.any(grid == x_hat):
        k = np.searchsorted(grid, x_hat)
        grid = np.insert(grid, k, x_hat)
        level = np.insert(level, k, 0.0)
    return ConfidenceCurve(grid, level, x_hat, upper_limit=cap, label="crossing year")


class TrendRegressor(RegressorMixin, BaseEstimator):
    """Polynomial trend in the centred covariate with i.i.d. normal errors.

    ``degree=1`` is the straight line; higher degrees give the natural
    extensions of the prediction and crossing curves, evaluated on grids.
    """

    def __init__(self, degree=1):
        self.degree = degree

    def _basis(self, x):
        dx = np.asarray(x, dtype=float).ravel() - self.xbar_
        return np.vander(dx, self.degree + 1, increasing=True)

    def fit(self, X, y):
        if not isinstance(self.degree, (int, np.integer)) or self.degree < 1:
            raise ValueError("degree must be a positive integer")
        x = check_vector(np.asarray(X, dtype=float).ravel(), "x", self.degree + 3)
        y = check_vector(y, "y", self.degree + 3)
        if x.shape != y.shape:
            raise ValueError("x and y must have equal length")
        self.xbar_ = float(x.mean())
        B = self._basis(x)
        coef, *_ = np.linalg.lstsq(B, y, rcond=None)
        r = y - B @ coef
        self.n_ = x.size
        self.df_ = x.size - self.degree - 1
        self.coef_ = coef
        self.sigma_ = float(np.sqrt(r @ r / self.df_))
        self.xtx_inv_ = np.linalg.inv(B.T @ B)
        self.x_last_ = float(x.max())
        rss = float(r @ r)
        n = x.size
        self.loglik_ = -0.5 * n * (np.log(2 * np.pi * rss / n) + 1.0)
        self.aic_ = 2 * self.loglik_ - 2 * (self.degree + 2)
        self.n_features_in_ = 1
        if self.degree == 1:
            self.summary_ = LinearFitSummary(
                float(coef[0]), float(coef[1]), self.sigma_, n, self.xbar_, float(((x - self.xbar_) ** 2).sum()), self.x_last_
            )
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        return self._basis(X) @ self.coef_

    def _leverage(self, x):
        B = self._basis(x)
        return np.einsum("ij,jk,ik->i", B, self.xtx_inv_, B)

    def predict_cd(self, x_new, grid=None):
        check_is_fitted(self, "coef_")
        loc = float(self.predict([x_new])[0])
        scale = self.sigma_ * np.sqrt(1.0 + self._leverage([x_new])[0])
        if grid is None:
            grid = _default_grid(loc, scale)
        grid = np.asarray(grid, dtype=float)
        df = self.df_
        return ConfidenceDistribution(
            grid, stats.t.cdf((grid - loc) / scale, df), ppf=lambda u: loc + scale * stats.t.ppf(u, df)
        )

    def crossing_level(self, y0, x0):
        x0 = np.atleast_1d(np.asarray(x0, dtype=float))
        stat = (y0 - self.predict(x0)) ** 2 / (self.sigma_**2 * self._leverage(x0))
        return stats.f.cdf(stat, 1, self.df_)

    def crossing_cc(self, y0, x0_grid):
        """Crossing curve on a grid; the estimate is the first grid crossing after the data."""
        check_is_fitted(self, "coef_")
        grid = np.asarray(x0_grid, dtype=float)
        level = self.crossing_level(y0, grid)
        gap = self.predict(grid) - y0
        future = grid >= self.x_last_
        idx = np.flatnonzero(future[:-1] & (np.sign(gap[:-1]) != np.sign(gap[1:])))
        if idx.size == 0:
            raise ValueError("fitted trend does not reach the threshold inside the grid")
        k = idx[0]
        x_hat = optimize.brentq(lambda v: float(self.predict([v])[0] - y0), grid[k], grid[k + 1])
        if not np.any(grid == x_hat):
            j = np.searchsorted(grid, x_hat)
            grid = np.insert(grid, j, x_hat)
            level = np.insert(level, j, 0.0)
        return ConfidenceCurve(grid, level, x_hat, upper_limit=self.crossing_cap()[0], label="crossing year")

    def crossing_cap(self):
        """Limit of the crossing curve as ``x0`` grows, with the leading-term t-ratio.

        The squared pivot tends to the squared t-ratio of the highest-degree
        coefficient, so for ``degree=1`` this is the slope test.
        """
        check_is_fitted(self, "coef_")
        d = self.degree
        t = float(self.coef_[d] / (self.sigma_ * np.sqrt(self.xtx_inv_[d, d])))
        return float(stats.f.cdf(t**2, 1, self.df_)), t
