"""Independent reference computations for the exceedance model."""

import numpy as np
from scipy import optimize


def density_term(a, sigma, y, rel=1e-6):
    """log g(y) via a central difference of the survival function."""

    def S(v):
        if abs(a) < 1e-12:
            return np.exp(-v / sigma)
        return (1.0 - a * v / sigma) ** (1.0 / a)

    h = rel * sigma
    return np.log((S(y - h) - S(y + h)) / (2 * h))


def season_prob_mc(a, sigma, lam, y0, seasons, rng, chunk=200_000):
    """Fraction of simulated seasons whose largest exceedance reaches y0."""
    hits = 0
    done = 0
    while done < seasons:
        m = min(chunk, seasons - done)
        counts = rng.poisson(lam, size=m)
        total = int(counts.sum())
        u = rng.uniform(size=total)
        y = sigma / a * (1.0 - (1.0 - u) ** a) if a != 0 else -sigma * np.log1p(-u)
        owner = np.repeat(np.arange(m), counts)
        mx = np.full(m, -np.inf)
        np.maximum.at(mx, owner, y)
        hits += int(np.sum(mx >= y0))
        done += m
    p = hits / seasons
    return p, np.sqrt(p * (1 - p) / seasons)


def _p(a, sigma, lam, y0):
    u = 1.0 - a * y0 / sigma
    if u <= 0:
        return 0.0
    return 1.0 - np.exp(-lam * u ** (1.0 / a))


def _ll(a, sigma, y):
    u = 1.0 - a * y / sigma
    if sigma <= 0 or np.any(u <= 0):
        return -np.inf
    return -y.size * np.log(sigma) + (1.0 / a - 1.0) * np.sum(np.log(u))


def constrained_grid_max(y, lam, y0, p0, a_lo=-1.5, a_hi=0.95, n_a=2001):
    """Maximise the likelihood over {(a, sigma): p(a, sigma) = p0} by brute force.

    For each shape on a fine grid the scale is found numerically so that the
    exceedance probability equals ``p0``; the best grid cell is then refined.
    """

    def sigma_of(a):
        f = lambda s: _p(a, s, lam, y0) - p0  # noqa: E731
        lo = a * y0 * (1 + 1e-12) if a > 0 else 1e-8
        hi = 1.0
        while f(hi) < 0:
            hi *= 2
            if hi > 1e6:
                return np.nan
        if f(lo) > 0:
            return np.nan
        return optimize.brentq(f, lo, hi, xtol=1e-15, rtol=1e-14, maxiter=500)

    def prof(a):
        if abs(a) < 1e-6:
            a = 1e-6
        s = sigma_of(a)
        return -np.inf if not np.isfinite(s) else _ll(a, s, y)

    grid = np.linspace(a_lo, a_hi, n_a)
    vals = np.array([prof(a) for a in grid])
    k = int(np.argmax(vals))
    lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, n_a - 1)]
    res = optimize.minimize_scalar(lambda a: -prof(a), bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
    return max(vals[k], -res.fun)
