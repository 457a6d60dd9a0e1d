"""Confidence distributions and confidence curves on tabulated grids."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from ._validation import check_level

DEFAULT_GRID_SIZE = 401


@dataclass
class ConfidenceInterval:
    lower: float
    upper: float
    level: float
    includes_infinity: bool = False
    truncated_lower: bool = False
    truncated_upper: bool = False

    def __iter__(self):
        yield self.lower
        yield self.upper

    def __contains__(self, value):
        return self.lower <= value <= self.upper

    def to_dict(self):
        return {
            "level": self.level,
            "lower": _json_float(self.lower),
            "upper": _json_float(self.upper),
            "includes_infinity": self.includes_infinity,
            "truncated_lower": self.truncated_lower,
            "truncated_upper": self.truncated_upper,
        }


def _json_float(x):
    if np.isposinf(x):
        return "inf"
    if np.isneginf(x):
        return "-inf"
    return float(x)


@dataclass
class ConfidenceDistribution:
    """Non-decreasing map from focus values to ``[0, 1]``.

    ``ppf`` may carry an exact quantile function; otherwise quantiles are read
    off the table by linear interpolation.
    """

    grid: np.ndarray
    cdf: np.ndarray
    ppf: object = field(default=None, repr=False)

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        self.cdf = np.asarray(self.cdf, dtype=float)
        if self.grid.shape != self.cdf.shape or self.grid.ndim != 1:
            raise ValueError("grid and cdf must be 1-d arrays of equal length")
        if self.grid.size == 0:
            raise ValueError("empty grid")
        if np.any(np.diff(self.grid) <= 0):
            raise ValueError("grid must be strictly increasing")
        if np.any((self.cdf < 0) | (self.cdf > 1)):
            raise ValueError("cdf values must lie in [0, 1]")
        if np.any(np.diff(self.cdf) < -1e-12):
            raise ValueError("cdf must be non-decreasing")

    def quantile(self, u):
        if self.ppf is not None:
            return float(self.ppf(u))
        c = self.cdf
        k = np.flatnonzero(c >= u)
        if k.size == 0:
            return np.inf
        j = k[0]
        if j == 0:
            return float(self.grid[0]) if c[0] == u else -np.inf
        if c[j] == c[j - 1]:
            return float(self.grid[j])
        return float(np.interp(u, c[j - 1 : j + 1], self.grid[j - 1 : j + 1]))

    def interval(self, level):
        level = check_level(level)
        lo = self.quantile(0.5 * (1.0 - level))
        hi = self.quantile(0.5 * (1.0 + level))
        return ConfidenceInterval(lo, hi, level, includes_infinity=bool(np.isinf(lo) or np.isinf(hi)))

    @property
    def median(self):
        return self.quantile(0.5)


@dataclass
class ConfidenceCurve:
    """Tabulated confidence curve.

    ``lower_limit`` / ``upper_limit`` record the limiting confidence level as
    the focus parameter tends to minus / plus infinity, when it is known to
    stay below 1. Levels at or above such a limit give intervals that reach
    infinity on that side.
    """

    grid: np.ndarray
    level: np.ndarray
    point_estimate: float
    lower_limit: float | None = None
    upper_limit: float | None = None
    label: str = ""
    cd: ConfidenceDistribution | None = field(default=None, repr=False)

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        self.level = np.asarray(self.level, dtype=float)
        if self.grid.ndim != 1 or self.grid.shape != self.level.shape:
            raise ValueError("grid and level must be 1-d arrays of equal length")
        if self.grid.size == 0:
            raise ValueError("empty grid")
        if np.any(np.diff(self.grid) <= 0):
            raise ValueError("grid must be strictly increasing")
        if np.any((self.level < -1e-12) | (self.level > 1 + 1e-12)):
            raise ValueError("confidence levels must lie in [0, 1]")
        self.level = np.clip(self.level, 0.0, 1.0)
        self.point_estimate = float(self.point_estimate)

    @property
    def cap(self):
        """Supremum of the curve, including known limits at infinity."""
        limits = [v for v in (self.lower_limit, self.upper_limit) if v is not None]
        return float(max([self.level.max(), *limits]))

    def __call__(self, x):
        return np.interp(x, self.grid, self.level)

    def interval(self, level):
        """Hull of ``{focus: cc(focus) <= level}`` with linear interpolation."""
        level = check_level(level)
        g, L = self.grid, self.level
        inside = np.flatnonzero(L <= level)
        if inside.size == 0:
            return ConfidenceInterval(self.point_estimate, self.point_estimate, level)
        i, j = inside[0], inside[-1]
        truncated_lower = truncated_upper = False
        infinite = False
        if i > 0:
            lo = float(np.interp(level, [L[i], L[i - 1]], [g[i], g[i - 1]]))
        elif self.lower_limit is not None and level >= self.lower_limit:
            lo, infinite = -np.inf, True
        else:
            lo, truncated_lower = float(g[0]), True
        if j < g.size - 1:
            hi = float(np.interp(level, [L[j], L[j + 1]], [g[j], g[j + 1]]))
        elif self.upper_limit is not None and level >= self.upper_limit:
            hi, infinite = np.inf, True
        else:
            hi, truncated_upper = float(g[-1]), True
        return ConfidenceInterval(lo, hi, level, infinite, truncated_lower, truncated_upper)

    def reparametrize(self, func, label=None):
        """Curve for ``func(focus)``, ``func`` strictly monotone.

        Confidence levels are carried over unchanged.
        """
        new = np.asarray(func(self.grid), dtype=float)
        pe = float(func(self.point_estimate))
        lo_lim, hi_lim = self.lower_limit, self.upper_limit
        level = self.level
        if new[-1] < new[0]:
            new, level = new[::-1], level[::-1]
            lo_lim, hi_lim = hi_lim, lo_lim
        if np.any(np.diff(new) <= 0):
            raise ValueError("transform must be strictly monotone on the grid")
        return ConfidenceCurve(new, level.copy(), pe, lo_lim, hi_lim, label if label is not None else self.label)

    def to_csv(self, path=None, header=("focus", "level")):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for x, c in zip(self.grid, self.level):
            w.writerow([repr(float(x)), repr(float(c))])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        return text

    @classmethod
    def from_csv(cls, path, label=""):
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
        if len(rows) < 3:
            raise ValueError(f"{path}: a curve needs a header and at least 2 rows")
        data = np.array([[float(a), float(b)] for a, b in rows[1:]])
        order = np.argsort(data[:, 0])
        data = data[order]
        pe = float(data[np.argmin(data[:, 1]), 0])
        return cls(data[:, 0], data[:, 1], pe, label=label)

    def to_dict(self, levels=(0.5, 0.9, 0.95)):
        return {
            "label": self.label,
            "point_estimate": float(self.point_estimate),
            "cap": float(self.cap),
            "grid": [float(self.grid[0]), float(self.grid[-1]), int(self.grid.size)],
            "intervals": [self.interval(lv).to_dict() for lv in levels],
        }


def cc_from_cd(cd):
    """``|1 - 2 C|``, with the point estimate at the median of the CD."""
    level = np.abs(1.0 - 2.0 * cd.cdf)
    med = cd.median
    if not np.isfinite(med):
        med = float(cd.grid[np.argmin(level)])
    return ConfidenceCurve(cd.grid.copy(), level, med, cd=cd)


def deviance_to_cc(deviance):
    return stats.chi2.cdf(np.maximum(deviance, 0.0), 1)


def profile_cc(profile_loglik, focus_grid, loglik_max=None, point_estimate=None, label=""):
    """Wilks confidence curve ``G_1(2 {l_max - l_prof})``.

    ``profile_loglik`` is a callable or an array of values on ``focus_grid``.
    The maximum of the tabulated profile must be interior to the grid.
    """
    grid = np.asarray(focus_grid, dtype=float)
    if grid.size < 3:
        raise ValueError("focus grid needs at least 3 points")
    if callable(profile_loglik):
        values = np.array([profile_loglik(g) for g in grid], dtype=float)
    else:
        values = np.asarray(profile_loglik, dtype=float)
        if values.shape != grid.shape:
            raise ValueError("profile values must match the grid")
    finite = np.isfinite(values)
    if not finite.any():
        raise ValueError("profile log-likelihood is not finite anywhere on the grid")
    if np.ptp(values[finite]) == 0.0:
        raise ValueError("flat profile log-likelihood")
    k = int(np.nanargmax(np.where(finite, values, -np.inf)))
    if point_estimate is None and (k == 0 or k == grid.size - 1):
        raise ValueError("profile maximum lies on the grid boundary; widen the grid")
    if point_estimate is not None and not grid[0] <= point_estimate <= grid[-1]:
        raise ValueError("point estimate lies outside the focus grid; widen the grid")
    top = values[k] if loglik_max is None else max(float(loglik_max), values[k])
    D = np.where(finite, 2.0 * (top - values), np.inf)
    level = np.where(finite, deviance_to_cc(D), 1.0)
    pe = grid[k] if point_estimate is None else point_estimate
    return ConfidenceCurve(grid, level, pe, label=label)


def signed_root(values, grid, estimate, loglik_max):
    """``sign(focus - estimate) * sqrt(deviance)`` on the grid."""
    D = np.maximum(2.0 * (loglik_max - np.asarray(values, dtype=float)), 0.0)
    return np.sign(np.asarray(grid, dtype=float) - estimate) * np.sqrt(D)


def _rho_grid(fit, size):
    n = fit.model.n
    z = np.arctanh(fit.rho)
    half = 6.0 / np.sqrt(max(n - fit.model.p, 1))
    return np.tanh(np.linspace(z - half, z + half, size))


def cd_rho(fit, rho_values, calibrate=None, n_boot=200, seed=0):
    """Confidence distribution for the AR coefficient, evaluated at ``rho_values``.

    The plain version is ``Phi`` of the signed likelihood root. With
    ``calibrate="bootstrap"`` the root is centred and scaled by its mean and
    standard deviation over ``n_boot`` parametric bootstrap replicates drawn
    from the fitted model, which removes most of the small-sample bias of the
    AR estimate.
    """
    from .gls_ar import bootstrap_rho_roots

    rho_values = np.atleast_1d(np.asarray(rho_values, dtype=float))
    prof = np.array([fit.profile_loglik_rho(r) for r in rho_values])
    r = signed_root(prof, rho_values, fit.rho, fit.loglik_max)
    if calibrate is None:
        return stats.norm.cdf(r)
    if calibrate != "bootstrap":
        raise ValueError(f"unknown calibration {calibrate!r}")
    roots = bootstrap_rho_roots(fit, n_boot, np.random.default_rng(seed))
    mu, sd = float(np.mean(roots)), float(np.std(roots, ddof=1))
    return stats.norm.cdf((r - mu) / sd)


def cc_rho(fit, rho_grid=None, calibrate=None, n_boot=200, seed=0):
    """Confidence curve for the AR(1) coefficient of a fitted :class:`GlsArFit`.

    Without calibration this is the Wilks curve of the profile log-likelihood
    in ``rho``.
    """
    if fit.rho_fixed:
        raise ValueError("rho was held fixed in this fit")
    grid = _rho_grid(fit, DEFAULT_GRID_SIZE) if rho_grid is None else np.asarray(rho_grid, dtype=float)
    if np.any(np.abs(grid) >= 1):
        raise ValueError("rho grid must lie inside (-1, 1)")
    if calibrate is None:
        return profile_cc(
            fit.profile_loglik_rho, grid, loglik_max=fit.loglik_max, point_estimate=fit.rho, label="rho"
        )
    C = cd_rho(fit, grid, calibrate, n_boot, seed)
    cd = ConfidenceDistribution(grid, np.maximum.accumulate(C))
    curve = cc_from_cd(cd)
    curve.label = "rho"
    return curve
