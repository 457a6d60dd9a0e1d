"""Monitoring bridges for parameter constancy and their simulated null laws.

Slope and mean scans converge under no change to the weighted Brownian bridge
``W0(s) / sqrt(s (1 - s))`` over a window ``[eps, 1 - eps]``; the
log-likelihood-maxima and per-parameter bridges converge to the plain
Brownian bridge.
"""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field

import numpy as np

from ._validation import check_min_size, check_vector
from .gls_ar import (
    RHO_BOUND,
    GlsArModel,
    _concentrated,
    _maximise_rho_scalar,
    fit_mle,
)

logger = logging.getLogger(__name__)
LOG2PI = np.log(2.0 * np.pi)

WEIGHTED_KINDS = {"slope", "mean", "weighted"}
PLAIN_KINDS = {"loglik", "parameter", "bridge", "unweighted"}
KAPPA_NORMAL = np.sqrt(0.5)
NULL_CHUNK = 2000


@dataclass
class NullQuantiles:
    """Simulated quantiles of ``max |V(s)|`` over a window."""

    kind: str
    window: tuple
    quantiles: dict
    paths: int
    seed: int
    steps: int
    maxima: np.ndarray = field(repr=False)

    def critical_value(self, level=0.95):
        if level in self.quantiles:
            return self.quantiles[level]
        return float(np.quantile(self.maxima, level))

    def p_value(self, max_abs):
        return float((1 + np.sum(self.maxima >= max_abs)) / (self.paths + 1))

    def to_dict(self):
        return {
            "kind": self.kind,
            "window": [float(w) for w in self.window],
            "quantiles": {str(k): float(v) for k, v in self.quantiles.items()},
            "paths": self.paths,
            "seed": self.seed,
            "steps": self.steps,
        }


@dataclass
class BridgeProcess:
    taus: np.ndarray
    values: np.ndarray
    kind: str
    n: int
    window: tuple
    years: np.ndarray | None = None
    label: str = ""

    def __post_init__(self):
        finite = self.values[np.isfinite(self.values)]
        if finite.size == 0:
            raise ValueError("bridge has no finite values")

    @property
    def max_abs(self):
        return float(np.nanmax(np.abs(self.values)))

    @property
    def argmax(self):
        k = int(np.nanargmax(np.abs(self.values)))
        return int(self.taus[k]) if self.years is None else self.years[k]

    @property
    def holes(self):
        return self.taus[~np.isfinite(self.values)]

    @property
    def null_kind(self):
        return "weighted" if self.kind in WEIGHTED_KINDS else "bridge"

    def test(self, null, level=0.95):
        crit = null.critical_value(level)
        return {
            "max_abs": self.max_abs,
            "argmax": _py(self.argmax),
            "critical_value": float(crit),
            "level": level,
            "exceeded": bool(self.max_abs > crit),
            "p_value": null.p_value(self.max_abs),
        }

    def to_csv(self, path=None):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["tau", "year", "value"])
        years = self.years if self.years is not None else [""] * self.taus.size
        for t, yr, v in zip(self.taus, years, self.values):
            w.writerow([int(t), _py(yr), repr(float(v))])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        return text


def _py(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    return v


def _window(i0, n, plain):
    return (i0 / n, 1.0) if plain else (i0 / n, 1.0 - i0 / n)


def _prefix(v):
    return np.concatenate([[0.0], np.cumsum(v)])


def slope_bridge(x, y, i0=10, years=None):
    """Scan of standardised left/right slope differences.

    ``sigma`` is the full-data residual sd (divisor ``n - 2``).
    """
    x = check_vector(x, "x")
    y = check_vector(y, "y")
    n = x.size
    i0 = check_min_size(i0, n)
    xc = x - x.mean()
    yc = y - y.mean()
    b = float(xc @ yc) / float(xc @ xc)
    r = yc - b * xc
    sigma = np.sqrt(float(r @ r) / (n - 2))
    if sigma <= 1e-12 * max(1.0, float(np.abs(y).max())):
        raise ValueError("residual sd is zero; the data lie exactly on a line")
    Sx, Sy, Sxx, Sxy = _prefix(xc), _prefix(yc), _prefix(xc * xc), _prefix(xc * yc)
    taus = np.arange(i0, n - i0 + 1)
    nl = taus.astype(float)
    nr = n - nl
    ML = Sxx[taus] - Sx[taus] ** 2 / nl
    MR = (Sxx[n] - Sxx[taus]) - (Sx[n] - Sx[taus]) ** 2 / nr
    if np.any(ML <= 0) or np.any(MR <= 0):
        raise ValueError("covariate constant on one side of a candidate break")
    bL = (Sxy[taus] - Sx[taus] * Sy[taus] / nl) / ML
    bR = ((Sxy[n] - Sxy[taus]) - (Sx[n] - Sx[taus]) * (Sy[n] - Sy[taus]) / nr) / MR
    values = (bR - bL) / (sigma * np.sqrt(1.0 / ML + 1.0 / MR))
    return BridgeProcess(taus, values, "slope", n, _window(i0, n, False), _years(years, taus))


def _years(years, taus):
    if years is None:
        return None
    years = np.asarray(years)
    return years[taus - 1]


def ar1_coefficient(x):
    """Lag-one autocorrelation ``(1/n) sum e_{t-1} e_t`` of the standardised series."""
    x = check_vector(x, "x", 3)
    e = x - x.mean()
    sd = np.sqrt(float(e @ e) / x.size)
    e = e / sd
    return float(e[:-1] @ e[1:] / x.size)


def inflation_factor(rho):
    """``f = sqrt((1 + rho) / (1 - rho))``; ``Var(mean) ~ f^2 sigma^2 / n`` under AR(1)."""
    if not -1.0 < rho < 1.0:
        raise ValueError("rho must lie in (-1, 1)")
    return float(np.sqrt((1.0 + rho) / (1.0 - rho)))


def mean_bridge(x, i0=10, rho_hat=0.0, years=None):
    """Running two-sample t statistics deflated by the AR(1) factor."""
    x = check_vector(x, "x")
    n = x.size
    i0 = check_min_size(i0, n)
    f = inflation_factor(rho_hat)
    xc = x - x.mean()
    S, SS = _prefix(xc), _prefix(xc * xc)
    taus = np.arange(i0, n - i0 + 1)
    nl = taus.astype(float)
    nr = n - nl
    mL = S[taus] / nl
    mR = (S[n] - S[taus]) / nr
    vL = (SS[taus] - nl * mL**2) / (nl - 1)
    vR = ((SS[n] - SS[taus]) - nr * mR**2) / (nr - 1)
    if np.any(vL <= 0) or np.any(vR <= 0):
        raise ValueError("zero variance on one side of a candidate break")
    values = (mR - mL) / (np.sqrt(vL / nl + vR / nr) * f)
    return BridgeProcess(taus, values, "mean", n, _window(i0, n, False), _years(years, taus))


def _fit_prefix(model, y, tau, z_start=None):
    """Fit on the first ``tau`` rows; natural-scale estimates and loglik, or None."""
    sub = model.subset(tau)
    ys = y[:tau]
    if model.errors == "normal":
        fun = lambda z: _concentrated(sub, ys, np.tanh(z))[2]  # noqa: E731
        z = None
        if z_start is not None:
            from scipy import optimize

            lo, hi = max(z_start - 0.6, -RHO_BOUND), min(z_start + 0.6, RHO_BOUND)
            res = optimize.minimize_scalar(
                lambda v: -fun(v), bounds=(lo, hi), method="bounded", options={"xatol": 1e-9}
            )
            if res.success and lo + 1e-3 < res.x < hi - 1e-3:
                z = float(res.x)
        if z is None:
            z, _, ok = _maximise_rho_scalar(fun)
            if not ok:
                return None
        rho = float(np.tanh(z))
        beta, sigma, ll = _concentrated(sub, ys, rho)
        return np.concatenate([beta, [sigma, rho]]), ll, z
    fit = fit_mle(sub, ys)
    if not fit.converged:
        return None
    return fit.estimates, fit.loglik_max, np.arctanh(fit.rho)


def _prefix_profiles(model, y, taus, rho):
    """Concentrated normal log-likelihood and GLS fit of every prefix at one ``rho``.

    Whitening is causal, so the prefix of the whitened data is the whitened
    prefix and all prefixes follow from running cross-product sums.
    """
    p = model.p
    d = np.diff(model.times.astype(float))
    Z = np.column_stack([model.X, y])
    if rho == 0.0:
        W, log_s2 = Z, np.zeros(d.size)
    else:
        r = np.power(rho, d)
        log_s2 = np.log(-np.expm1(2.0 * d * np.log(abs(rho))))
        W = np.empty_like(Z)
        W[0] = Z[0]
        W[1:] = (Z[1:] - r[:, None] * Z[:-1]) / np.exp(0.5 * log_s2)[:, None]
    S = np.cumsum(np.einsum("ik,il->ikl", W, W), axis=0)[taus - 1]
    logdet = np.concatenate([[0.0], np.cumsum(log_s2)])[taus - 1]
    Sxx, Sxy, Syy = S[:, :p, :p], S[:, :p, p], S[:, p, p]
    beta = np.linalg.solve(Sxx, Sxy[..., None])[..., 0]
    Q = Syy - np.einsum("tk,tk->t", Sxy, beta)
    m = taus.astype(float)
    with np.errstate(divide="ignore", invalid="ignore"):
        ll = -0.5 * m * np.log(Q / m) - 0.5 * logdet - 0.5 * m * (1.0 + LOG2PI)
    return np.where(Q > 0, ll, np.nan), beta, np.sqrt(np.maximum(Q, 0.0) / m)


def _scan_normal(model, y, taus, coarse=0.1, fine=0.005):
    """Prefix maximum-likelihood fits for normal errors, all prefixes at once.

    ``atanh(rho)`` is located on a coarse common grid, refined on a fine grid
    over the union of the brackets and finished by a parabolic step. Prefixes
    whose maximum sits on the coarse-grid edge are handed to the scalar search.
    """
    zc = np.arange(-RHO_BOUND, RHO_BOUND + coarse / 2, coarse)
    Lc = np.array([_prefix_profiles(model, y, taus, np.tanh(z))[0] for z in zc])
    bad = np.all(np.isnan(Lc), axis=0)
    k = np.nanargmax(np.where(np.isnan(Lc), -np.inf, Lc), axis=0)
    edge = bad | (k == 0) | (k == zc.size - 1)
    lo = zc[np.clip(k - 1, 0, zc.size - 1)]
    hi = zc[np.clip(k + 1, 0, zc.size - 1)]
    zf = np.arange(lo[~edge].min(), hi[~edge].max() + fine / 2, fine) if np.any(~edge) else zc[:1]
    Lf = np.array([_prefix_profiles(model, y, taus, np.tanh(z))[0] for z in zf])
    inside = (zf[:, None] >= lo[None, :] - 1e-12) & (zf[:, None] <= hi[None, :] + 1e-12)
    Lm = np.where(inside & np.isfinite(Lf), Lf, -np.inf)
    j = np.clip(np.argmax(Lm, axis=0), 1, zf.size - 2)
    cols = np.arange(taus.size)
    f0, f1, f2 = Lm[j - 1, cols], Lm[j, cols], Lm[j + 1, cols]
    curv = f0 - 2.0 * f1 + f2
    ok = np.isfinite(f0) & np.isfinite(f2) & (curv < 0)
    step = np.where(ok, 0.5 * (f0 - f2) / np.where(ok, curv, -1.0), 0.0)
    z_hat = zf[j] + fine * np.clip(step, -1.0, 1.0)
    return z_hat, edge


def scan_fits(X, y, times, i0=10, errors="normal"):
    """Sequential ML fits on growing prefixes ``tau = i0..n``.

    Returns ``(taus, estimates, logliks, full_fit)``; failed prefixes are
    recorded as NaN rows.
    """
    model = GlsArModel(X, times, errors)
    y = check_vector(y, "y")
    n = model.n
    if not isinstance(i0, (int, np.integer)) or i0 < model.p + 3 or i0 > n:
        raise ValueError(f"minimum length must be an integer in [{model.p + 3}, {n}]")
    full = fit_mle(model, y)
    k = len(full.estimates)
    taus = np.arange(i0, n + 1)
    est = np.full((taus.size, k), np.nan)
    lls = np.full(taus.size, np.nan)
    z = np.arctanh(full.rho)
    if errors == "normal" and taus.size > 1:
        z_hat, edge = _scan_normal(model, y, taus)
        for j, tau in enumerate(taus[:-1]):
            if edge[j]:
                continue
            sub = model.subset(int(tau))
            beta, sigma, ll = _concentrated(sub, y[:tau], float(np.tanh(z_hat[j])))
            if np.isfinite(ll):
                est[j], lls[j] = np.concatenate([beta, [sigma, np.tanh(z_hat[j])]]), ll
        est[-1], lls[-1] = full.estimates, full.loglik_max
        todo = [j for j in range(taus.size - 1) if edge[j]]
    else:
        todo = range(taus.size)
    for j in todo:
        tau = taus[j]
        if tau == n:
            est[j], lls[j] = full.estimates, full.loglik_max
            continue
        try:
            out = _fit_prefix(model, y, int(tau), z)
        except (ValueError, np.linalg.LinAlgError, RuntimeError) as exc:
            logger.info("prefix fit failed at tau=%d: %s", tau, exc)
            out = None
        if out is None:
            continue
        est[j], lls[j], z = out
    return taus, est, lls, full


def loglik_bridge(X, y, times, i0=10, errors="normal", kappa=KAPPA_NORMAL, scan=None):
    """``Z_n(tau) = {l_max,tau - (tau/n) l_max,n} / (sqrt(n) kappa)``."""
    taus, _, lls, full = scan if scan is not None else scan_fits(X, y, times, i0, errors)
    n = int(taus[-1])
    values = (lls - (taus / n) * full.loglik_max) / (np.sqrt(n) * kappa)
    values[-1] = 0.0
    return BridgeProcess(taus, values, "loglik", n, _window(int(taus[0]), n, True), np.asarray(times)[taus - 1])


def param_bridges(X, y, times, i0=10, errors="normal", scan=None):
    """One bridge per parameter: ``tau (theta_tau - theta_n) / (sqrt(n) kappa_j)``.

    ``kappa_j`` is the square root of the j-th diagonal of the inverse observed
    information per observation, from the full-data fit.
    """
    taus, est, _, full = scan if scan is not None else scan_fits(X, y, times, i0, errors)
    n = int(taus[-1])
    if full.cov is None:
        raise ValueError("full-data fit has no information matrix")
    kappa = np.sqrt(n * np.diag(full.cov))
    out = []
    for j, name in enumerate(full.names):
        vals = taus * (est[:, j] - full.estimates[j]) / (np.sqrt(n) * kappa[j])
        vals[-1] = 0.0
        out.append(
            BridgeProcess(taus, vals, "parameter", n, _window(int(taus[0]), n, True), np.asarray(times)[taus - 1], name)
        )
    return out


def _resolve_kind(kind):
    if kind in WEIGHTED_KINDS:
        return "weighted"
    if kind in PLAIN_KINDS:
        return "bridge"
    raise ValueError(f"unknown bridge kind {kind!r}")


def simulate_null_quantiles(kind, window=0.025, levels=(0.9, 0.95, 0.99), paths=100_000, seed=0, steps=2000):
    """Monte Carlo quantiles of the maximal absolute (weighted) Brownian bridge.

    ``window`` is either ``eps`` (meaning ``[eps, 1 - eps]``) or a pair
    ``(lo, hi)``. Paths are generated in fixed-size blocks from child streams
    of ``seed``, so results depend only on ``(seed, paths, steps)``.
    """
    kind = _resolve_kind(kind)
    lo, hi = (window, 1.0 - window) if np.isscalar(window) else window
    if not 0.0 < lo < hi <= 1.0:
        raise ValueError("window must satisfy 0 < lo < hi <= 1")
    if kind == "weighted" and hi >= 1.0:
        raise ValueError("weighted bridge needs hi < 1")
    if paths < 10_000:
        raise ValueError("at least 10_000 paths are required")
    s = np.arange(1, steps) / steps
    keep = (s >= lo - 1e-12) & (s <= hi + 1e-12)
    s = s[keep]
    idx = np.flatnonzero(keep)
    weight = 1.0 / np.sqrt(s * (1.0 - s)) if kind == "weighted" else np.ones_like(s)
    n_blocks = -(-paths // NULL_CHUNK)
    children = np.random.SeedSequence(seed).spawn(n_blocks)
    maxima = np.empty(paths)
    sd = np.sqrt(1.0 / steps)
    for b, child in enumerate(children):
        m = min(NULL_CHUNK, paths - b * NULL_CHUNK)
        rng = np.random.default_rng(child)
        W = np.cumsum(rng.standard_normal((m, steps)) * sd, axis=1)
        W1 = W[:, -1:]
        B = W[:, idx] - s * W1
        maxima[b * NULL_CHUNK : b * NULL_CHUNK + m] = np.max(np.abs(B) * weight, axis=1)
    qs = {float(lv): float(np.quantile(maxima, lv)) for lv in levels}
    return NullQuantiles(kind, (float(lo), float(hi)), qs, int(paths), int(seed), int(steps), maxima)
