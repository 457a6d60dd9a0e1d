"""Gaussian regression with AR(1) errors on a gapped calendar axis.

The error covariance is ``sigma^2 A_rho`` with ``A_rho[i, j] = rho**|t_i - t_j|``
in calendar time, so a gap in the record weakens the correlation across it
rather than shrinking the matrix. Two extensions are supported: a log-quadratic
variance function ``sigma_t = sigma * exp(g1 w_t + g2 w_t^2)`` and elliptical
multivariate-t errors.

The likelihood is evaluated through the exact AR(1) innovations of the gapped
series (an O(n) factorisation of ``A_rho``); a dense Cholesky route is kept for
cross-checking.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg, optimize, special
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_design, check_times, check_vector
from .series import center

logger = logging.getLogger(__name__)

ERROR_KINDS = ("normal", "hetero", "t")
RHO_BOUND = 4.0  # |atanh(rho)| limit, |rho| <= 0.99933
LOG_NU_BOUND = (-6.0, 7.0)
FD_STEP = 1e-4
LOG2PI = np.log(2.0 * np.pi)


@dataclass
class GlsArModel:
    """Design, calendar axis and error specification.

    ``w`` is the standardised covariate driving the variance function of the
    ``"hetero"`` errors; by default it is built from ``times``.
    """

    X: np.ndarray
    times: np.ndarray
    errors: str = "normal"
    w: np.ndarray | None = None
    column_names: tuple | None = None

    def __post_init__(self):
        self.X = check_design(self.X)
        n, p = self.X.shape
        self.times = check_times(self.times, n)
        if self.errors not in ERROR_KINDS:
            raise ValueError(f"errors must be one of {ERROR_KINDS}, got {self.errors!r}")
        if n <= p + 2:
            raise ValueError(f"need n > p + 2 observations, got n={n}, p={p}")
        if np.linalg.matrix_rank(self.X) < p:
            raise ValueError("design matrix is not of full column rank")
        if self.errors == "hetero" and self.w is None:
            self.w = center(self.times).w
        if self.w is not None:
            self.w = check_vector(self.w, "w")
            if self.w.shape[0] != n:
                raise ValueError("w must have one value per observation")
        if self.column_names is None:
            self.column_names = tuple(f"beta{j}" for j in range(p))

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def p(self):
        return self.X.shape[1]

    def subset(self, stop):
        """Model restricted to the first ``stop`` observations."""
        w = None if self.w is None else self.w[:stop]
        return GlsArModel(self.X[:stop], self.times[:stop], self.errors, w, self.column_names)


def correlation_matrix(times, rho):
    """Dense ``A_rho`` with entries ``rho**|t_i - t_j|``."""
    t = np.asarray(times, dtype=float)
    lag = np.abs(t[:, None] - t[None, :])
    return np.power(float(rho), lag)


def ar1_innovations(U, times, rho):
    """Whiten a unit-variance AR(1) series observed at (gapped) integer times.

    Returns the standardised innovations and ``log|A_rho|``. ``U`` may be a
    vector or a matrix whose columns are whitened independently.
    """
    if not -1.0 < rho < 1.0:
        raise ValueError(f"|rho| must be < 1, got {rho}")
    U = np.asarray(U, dtype=float)
    d = np.diff(np.asarray(times, dtype=float))
    if rho == 0.0:
        return U.copy(), 0.0
    r = np.power(rho, d)
    one_minus = -np.expm1(2.0 * d * np.log(abs(rho)))
    s = np.sqrt(one_minus)
    V = np.empty_like(U)
    V[0] = U[0]
    if U.ndim == 1:
        V[1:] = (U[1:] - r * U[:-1]) / s
    else:
        V[1:] = (U[1:] - r[:, None] * U[:-1]) / s[:, None]
    return V, float(np.sum(np.log(one_minus)))


def _scale_factors(model, gamma):
    if gamma is None:
        return np.ones(model.n)
    g1, g2 = gamma
    return np.exp(g1 * model.w + g2 * model.w**2)


def _t_const(nu, n):
    return special.gammaln(0.5 * (nu + n)) - special.gammaln(0.5 * nu) - 0.5 * n * np.log(nu * np.pi)


def loglik(model, params, y, method="whiten"):
    """Exact log-likelihood at ``params``.

    ``params`` is a mapping with keys ``beta``, ``sigma``, ``rho`` and, for the
    extended error models, ``gamma`` (pair) or ``nu``.
    """
    y = check_vector(y, "y")
    if y.shape[0] != model.n:
        raise ValueError("y length does not match the model")
    beta = np.asarray(params["beta"], dtype=float)
    sigma = float(params["sigma"])
    rho = float(params["rho"])
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    if not -1.0 < rho < 1.0:
        raise ValueError("A_rho is singular for |rho| >= 1")
    gamma = params.get("gamma") if model.errors == "hetero" else None
    scale = sigma * _scale_factors(model, gamma)
    e = (y - model.X @ beta) / scale
    n = model.n
    if method == "whiten":
        v, logdet = ar1_innovations(e, model.times, rho)
        Q = float(v @ v)
    elif method == "cholesky":
        A = correlation_matrix(model.times, rho)
        c, low = linalg.cho_factor(A, lower=True)
        logdet = 2.0 * float(np.sum(np.log(np.diag(c))))
        Q = float(e @ linalg.cho_solve((c, low), e))
    else:
        raise ValueError(f"unknown method {method!r}")
    base = -np.sum(np.log(scale)) - 0.5 * logdet
    if model.errors == "t":
        nu = float(params["nu"])
        if nu <= 0:
            raise ValueError("nu must be positive")
        return float(_t_const(nu, n) + base - 0.5 * (nu + n) * np.log1p(Q / nu))
    return float(base - 0.5 * Q - 0.5 * n * LOG2PI)


def _concentrated(model, y, rho, gamma=None, nu=None):
    """GLS beta and closed-form sigma given the correlation/shape parameters.

    The maximising sigma is ``sqrt(Q/n)`` for both normal and elliptical-t
    errors. Returns ``(beta, sigma, loglik)``.
    """
    f = _scale_factors(model, gamma) if model.errors == "hetero" else np.ones(model.n)
    Z = np.column_stack([model.X / f[:, None], y / f])
    W, logdet = ar1_innovations(Z, model.times, rho)
    Xw, yw = W[:, :-1], W[:, -1]
    beta, *_ = np.linalg.lstsq(Xw, yw, rcond=None)
    r = yw - Xw @ beta
    n = model.n
    Q = float(r @ r)
    if Q <= 0.0:
        return beta, 0.0, np.inf
    sigma = np.sqrt(Q / n)
    base = -n * np.log(sigma) - np.sum(np.log(f)) - 0.5 * logdet
    if model.errors == "t":
        ll = _t_const(nu, n) + base - 0.5 * (nu + n) * np.log1p(n / nu)
    else:
        ll = base - 0.5 * n - 0.5 * n * LOG2PI
    return beta, float(sigma), float(ll)


@dataclass
class GlsArFit:
    """Maximum-likelihood fit of a :class:`GlsArModel`.

    ``obs_info`` and ``cov`` are on the natural parameter scale, ordered as
    ``names``.
    """

    beta: np.ndarray
    sigma: float
    rho: float
    loglik_max: float
    dim: int
    names: list
    estimates: np.ndarray
    obs_info: np.ndarray | None
    cov: np.ndarray | None
    gamma: np.ndarray | None = None
    nu: float | None = None
    rho_fixed: bool = False
    converged: bool = True
    grad_norm: float = 0.0
    flags: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)
    model: GlsArModel | None = field(default=None, repr=False)
    y: np.ndarray | None = field(default=None, repr=False)

    @property
    def aic(self):
        return aic(self)

    @property
    def n(self):
        return self.model.n if self.model is not None else None

    @property
    def se(self):
        if self.cov is None:
            return np.full(len(self.names), np.nan)
        return np.sqrt(np.clip(np.diag(self.cov), 0.0, None))

    def params(self):
        out = {"beta": self.beta, "sigma": self.sigma, "rho": self.rho}
        if self.gamma is not None:
            out["gamma"] = self.gamma
        if self.nu is not None:
            out["nu"] = self.nu
        return out

    def summary(self):
        """Rows of ``(name, estimate, se, wald ratio)``."""
        se = self.se
        return [
            (name, float(est), float(s), float(est / s) if s > 0 else np.nan)
            for name, est, s in zip(self.names, self.estimates, se)
        ]

    def profile_loglik_rho(self, rho):
        """Log-likelihood maximised over all parameters except ``rho``."""
        if self.model is None:
            raise ValueError("fit does not carry its model and data")
        if self.model.errors == "normal":
            return _concentrated(self.model, self.y, float(rho))[2]
        return _fit_given_rho(self.model, self.y, float(rho), self)[2]

    def to_dict(self):
        return {
            "names": list(self.names),
            "estimates": [float(v) for v in self.estimates],
            "se": [float(v) for v in self.se],
            "loglik_max": float(self.loglik_max),
            "aic": float(self.aic),
            "dim": int(self.dim),
            "errors": self.model.errors if self.model is not None else None,
            "rho_fixed": self.rho_fixed,
            "converged": bool(self.converged),
            "grad_norm": float(self.grad_norm),
            "flags": list(self.flags),
            "metadata": self.metadata,
        }


def aic(fit_or_loglik, dim=None):
    """``2 * loglik_max - 2 * dim`` (larger is better)."""
    if dim is None:
        return 2.0 * fit_or_loglik.loglik_max - 2.0 * fit_or_loglik.dim
    return 2.0 * float(fit_or_loglik) - 2.0 * dim


def _unpack(model, phi, rho_fixed):
    """Transformed vector -> natural parameters."""
    p = model.p
    k = p
    out = {"beta": phi[:p], "sigma": np.exp(phi[k])}
    k += 1
    if rho_fixed is None:
        out["rho"] = np.tanh(phi[k])
        k += 1
    else:
        out["rho"] = rho_fixed
    if model.errors == "hetero":
        out["gamma"] = phi[k : k + 2]
        k += 2
    if model.errors == "t":
        out["nu"] = 2.0 + np.exp(phi[k])
    return out


def _pack(model, params, rho_fixed):
    phi = list(np.asarray(params["beta"], dtype=float)) + [np.log(params["sigma"])]
    names = list(model.column_names) + ["sigma"]
    jac = [1.0] * model.p + [params["sigma"]]
    if rho_fixed is None:
        phi.append(np.arctanh(params["rho"]))
        names.append("rho")
        jac.append(1.0 - params["rho"] ** 2)
    if model.errors == "hetero":
        phi.extend(params["gamma"])
        names.extend(["gamma1", "gamma2"])
        jac.extend([1.0, 1.0])
    if model.errors == "t":
        phi.append(np.log(params["nu"] - 2.0))
        names.append("nu")
        jac.append(params["nu"] - 2.0)
    return np.array(phi), names, np.array(jac)


def _fd_grad_hess(f, x, h=FD_STEP, h_grad=1e-5):
    k = x.size
    g = np.empty(k)
    H = np.empty((k, k))
    f0 = f(x)
    E = np.eye(k)
    for i in range(k):
        g[i] = (f(x + h_grad * E[i]) - f(x - h_grad * E[i])) / (2 * h_grad)
        H[i, i] = (f(x + h * E[i]) - 2 * f0 + f(x - h * E[i])) / h**2
        for j in range(i):
            H[i, j] = H[j, i] = (
                f(x + h * E[i] + h * E[j])
                - f(x + h * E[i] - h * E[j])
                - f(x - h * E[i] + h * E[j])
                + f(x - h * E[i] - h * E[j])
            ) / (4 * h**2)
    return g, H


def _finish(model, y, params, rho_fixed, flags, converged=True, metadata=None):
    ll_max = loglik(model, params, y)
    phi, names, jac = _pack(model, params, rho_fixed)
    obj = lambda v: loglik(model, _unpack(model, v, rho_fixed), y)  # noqa: E731
    grad, H = _fd_grad_hess(obj, phi)
    J_phi = -H
    # natural-scale information: J_theta = D^-1 J_phi D^-1, D = dtheta/dphi
    Dinv = 1.0 / jac
    obs_info = J_phi * Dinv[:, None] * Dinv[None, :]
    cov = None
    try:
        np.linalg.cholesky(J_phi)
        cov_phi = np.linalg.inv(J_phi)
        cov = cov_phi * jac[:, None] * jac[None, :]
    except np.linalg.LinAlgError:
        flags.append("information_not_positive_definite")
        cov = np.linalg.pinv(J_phi) * jac[:, None] * jac[None, :]
    # a shape parameter pinned at its bound is not expected to be stationary
    free = grad[:-1] if "nu_at_boundary" in flags else grad
    grad_norm = float(np.max(np.abs(free)))
    if grad_norm > 1e-4 * max(1.0, np.sqrt(model.n)):
        flags.append("not_stationary")
        converged = False
    estimates = np.concatenate(
        [
            params["beta"],
            [params["sigma"]],
            [] if rho_fixed is not None else [params["rho"]],
            params["gamma"] if "gamma" in params else [],
            [params["nu"]] if "nu" in params else [],
        ]
    )
    if rho_fixed is None and abs(params["rho"]) > 0.999:
        flags.append("rho_at_boundary")
        warnings.warn(f"AR coefficient at boundary: rho={params['rho']:.4f}", RuntimeWarning, stacklevel=3)
    return GlsArFit(
        beta=np.asarray(params["beta"], dtype=float),
        sigma=float(params["sigma"]),
        rho=float(params["rho"]),
        loglik_max=ll_max,
        dim=len(names),
        names=names,
        estimates=estimates,
        obs_info=obs_info,
        cov=cov,
        gamma=None if "gamma" not in params else np.asarray(params["gamma"], dtype=float),
        nu=params.get("nu"),
        rho_fixed=rho_fixed is not None,
        converged=converged,
        grad_norm=grad_norm,
        flags=flags,
        metadata=metadata or {},
        model=model,
        y=y,
    )


def _maximise_rho_scalar(fun, n_grid=17):
    """Maximise a function of atanh(rho): coarse grid, then bounded Brent."""
    zs = np.linspace(-RHO_BOUND, RHO_BOUND, n_grid)
    vals = np.array([fun(z) for z in zs])
    i = int(np.nanargmax(vals))
    lo = zs[max(i - 1, 0)]
    hi = zs[min(i + 1, n_grid - 1)]
    res = optimize.minimize_scalar(
        lambda z: -fun(z), bounds=(lo, hi), method="bounded", options={"xatol": 1e-10, "maxiter": 500}
    )
    if -res.fun < vals[i]:
        return zs[i], vals[i], True
    return float(res.x), float(-res.fun), bool(res.success)


def _fit_given_rho(model, y, rho, start=None):
    """Maximise over gamma / nu with rho held fixed (extended error models)."""
    if model.errors == "normal":
        beta, sigma, ll = _concentrated(model, y, rho)
        return {"beta": beta, "sigma": sigma, "rho": rho}, True, ll

    def neg(v):
        gamma, nu = _shape_from(model, v)
        return -_concentrated(model, y, rho, gamma, nu)[2]

    x0 = _shape_start(model, start)
    res = _simplex_then_newton(neg, x0)
    gamma, nu = _shape_from(model, res.x)
    beta, sigma, ll = _concentrated(model, y, rho, gamma, nu)
    params = {"beta": beta, "sigma": sigma, "rho": rho}
    if gamma is not None:
        params["gamma"] = np.asarray(gamma)
    if nu is not None:
        params["nu"] = nu
    return params, res.success, ll


def _shape_from(model, v):
    if model.errors == "hetero":
        return np.asarray(v[:2]), None
    return None, 2.0 + np.exp(np.clip(v[0], *LOG_NU_BOUND))


def _shape_start(model, start):
    if model.errors == "hetero":
        if start is not None and start.gamma is not None:
            return np.asarray(start.gamma, dtype=float)
        return np.zeros(2)
    if start is not None and start.nu is not None:
        return np.array([np.log(start.nu - 2.0)])
    return np.array([np.log(8.0)])


def _simplex_then_newton(neg, x0):
    nm = optimize.minimize(neg, x0, method="Nelder-Mead", options={"xatol": 1e-6, "fatol": 1e-9, "maxiter": 4000})
    polish = optimize.minimize(neg, nm.x, method="BFGS", options={"gtol": 1e-8})
    best = polish if polish.fun <= nm.fun else nm
    best.success = bool(nm.success or polish.success)
    return best


def fit_mle(model, y, fix_rho=None):
    """Maximum-likelihood fit over ``(beta, sigma, rho[, gamma | nu])``.

    ``beta`` and ``sigma`` are profiled in closed form. With ``fix_rho`` the AR
    coefficient is held at the given value and excluded from the parameter
    count.
    """
    y = check_vector(y, "y")
    if y.shape[0] != model.n:
        raise ValueError("y length does not match the model")
    flags = []
    beta0, *_ = np.linalg.lstsq(model.X, y, rcond=None)
    resid = y - model.X @ beta0
    if float(resid @ resid) <= 1e-24 * max(1.0, float(y @ y)):
        return _degenerate_fit(model, y, beta0, fix_rho)

    if fix_rho is not None:
        params, ok, _ = _fit_given_rho(model, y, float(fix_rho))
        return _finish(model, y, params, float(fix_rho), flags, ok)

    if model.errors == "normal":
        z, _, ok = _maximise_rho_scalar(lambda z: _concentrated(model, y, np.tanh(z))[2])
        rho = float(np.tanh(z))
        beta, sigma, _ = _concentrated(model, y, rho)
        params = {"beta": beta, "sigma": sigma, "rho": rho}
        return _finish(model, y, params, None, flags, ok)

    base = fit_mle(GlsArModel(model.X, model.times, "normal", model.w, model.column_names), y)

    def neg(v):
        gamma, nu = _shape_from(model, v[1:])
        return -_concentrated(model, y, np.tanh(np.clip(v[0], -RHO_BOUND, RHO_BOUND)), gamma, nu)[2]

    x0 = np.concatenate([[np.arctanh(base.rho)], _shape_start(model, None)])
    res = _simplex_then_newton(neg, x0)
    if not res.success:
        # restart from the simplex optimum once before giving up
        res = _simplex_then_newton(neg, res.x)
    if not np.isfinite(res.fun):
        raise RuntimeError("optimizer failed to converge")
    rho = float(np.tanh(np.clip(res.x[0], -RHO_BOUND, RHO_BOUND)))
    gamma, nu = _shape_from(model, res.x[1:])
    beta, sigma, _ = _concentrated(model, y, rho, gamma, nu)
    params = {"beta": beta, "sigma": sigma, "rho": rho}
    if gamma is not None:
        params["gamma"] = np.asarray(gamma)
    if nu is not None:
        params["nu"] = float(nu)
        if np.log(nu - 2.0) >= LOG_NU_BOUND[1] - 1e-3:
            flags.append("nu_at_boundary")
    return _finish(model, y, params, None, flags, bool(res.success))


def _degenerate_fit(model, y, beta, fix_rho):
    names = list(model.column_names) + ["sigma"] + ([] if fix_rho is not None else ["rho"])
    rho = 0.0 if fix_rho is None else float(fix_rho)
    est = np.concatenate([beta, [0.0], [] if fix_rho is not None else [rho]])
    return GlsArFit(
        beta=beta,
        sigma=0.0,
        rho=rho,
        loglik_max=np.inf,
        dim=len(names),
        names=names,
        estimates=est,
        obs_info=None,
        cov=None,
        rho_fixed=fix_rho is not None,
        converged=True,
        flags=["degenerate"],
        model=model,
        y=y,
    )


def fit_ols(model, y):
    """Ordinary least squares with i.i.d. normal errors (rho frozen at 0).

    ``sigma`` uses the ML divisor ``n``; the ``n - p`` version is reported in
    ``metadata["sigma_unbiased"]``.
    """
    y = check_vector(y, "y")
    X = model.X
    n, p = X.shape
    beta, *_ = np.linalg.lstsq(X, y, rcond=None)
    r = y - X @ beta
    rss = float(r @ r)
    names = list(model.column_names) + ["sigma"]
    meta = {"sigma_divisor": "n", "sigma_unbiased": float(np.sqrt(rss / (n - p)))}
    if rss <= 1e-24 * max(1.0, float(y @ y)):
        fit = _degenerate_fit(model, y, beta, 0.0)
        fit.metadata = meta
        return fit
    sigma = np.sqrt(rss / n)
    ll = -n * np.log(sigma) - 0.5 * n - 0.5 * n * LOG2PI
    info = np.zeros((p + 1, p + 1))
    info[:p, :p] = X.T @ X / sigma**2
    info[p, p] = 2.0 * n / sigma**2
    return GlsArFit(
        beta=beta,
        sigma=float(sigma),
        rho=0.0,
        loglik_max=float(ll),
        dim=p + 1,
        names=names,
        estimates=np.concatenate([beta, [sigma]]),
        obs_info=info,
        cov=np.linalg.inv(info),
        rho_fixed=True,
        metadata=meta,
        model=model,
        y=y,
    )


def fit_lagged(design, errors="normal"):
    """AR(1) regression of a response on two lagged covariates."""
    model = GlsArModel(design.columns, design.years, errors, column_names=design.column_names)
    return fit_mle(model, design.response)


def simulate_ar1(times, rho, rng, size=None):
    """Unit-variance stationary AR(1) noise at (gapped) integer times."""
    t = np.asarray(times, dtype=float)
    shape = (t.size,) if size is None else (size, t.size)
    z = rng.standard_normal(shape)
    u = np.empty(shape)
    u[..., 0] = z[..., 0]
    d = np.diff(t)
    r = np.power(rho, d)
    s = np.sqrt(1.0 - r**2)
    for i in range(1, t.size):
        u[..., i] = r[i - 1] * u[..., i - 1] + s[i - 1] * z[..., i]
    return u


class ARTrendRegressor(RegressorMixin, BaseEstimator):
    """Linear regression with AR(1) errors in calendar time.

    Parameters
    ----------
    errors : {"normal", "hetero", "t"}, default="normal"
        Error model. ``"hetero"`` lets the log standard deviation be
        quadratic in the standardised first covariate; ``"t"`` uses
        elliptical multivariate-t errors.
    fix_rho : float or None, default=None
        Hold the AR coefficient at this value instead of estimating it.
    fit_intercept : bool, default=True

    Attributes
    ----------
    coef_, intercept_, sigma_, rho_ : fitted values
    result_ : GlsArFit
    """

    def __init__(self, errors="normal", fix_rho=None, fit_intercept=True):
        self.errors = errors
        self.fix_rho = fix_rho
        self.fit_intercept = fit_intercept

    def _design(self, X):
        X = check_design(X)
        if self.fit_intercept:
            X = np.column_stack([np.ones(X.shape[0]), X])
        return X

    def fit(self, X, y, times=None):
        X = self._design(X)
        y = check_vector(y, "y")
        if times is None:
            times = np.arange(X.shape[0])
        names = (["intercept"] if self.fit_intercept else []) + [
            f"x{j}" for j in range(X.shape[1] - int(self.fit_intercept))
        ]
        w = None
        if self.errors == "hetero":
            w = center(X[:, int(self.fit_intercept)]).w
        model = GlsArModel(X, times, self.errors, w=w, column_names=tuple(names))
        self.result_ = fit_mle(model, y, fix_rho=self.fix_rho)
        beta = self.result_.beta
        self.intercept_ = float(beta[0]) if self.fit_intercept else 0.0
        self.coef_ = beta[1:] if self.fit_intercept else beta
        self.sigma_ = self.result_.sigma
        self.rho_ = self.result_.rho
        self.n_features_in_ = X.shape[1] - int(self.fit_intercept)
        return self

    def predict(self, X):
        check_is_fitted(self, "result_")
        return self._design(X) @ self.result_.beta

    @property
    def aic_(self):
        check_is_fitted(self, "result_")
        return self.result_.aic


def batch_concentrated_loglik(model, Y, rho):
    """Concentrated normal log-likelihood at ``rho`` for each column of ``Y``."""
    p = model.p
    W, logdet = ar1_innovations(np.column_stack([model.X, Y]), model.times, rho)
    Xw, Yw = W[:, :p], W[:, p:]
    B, *_ = np.linalg.lstsq(Xw, Yw, rcond=None)
    R = Yw - Xw @ B
    Q = np.einsum("ij,ij->j", R, R)
    n = model.n
    return -0.5 * n * np.log(Q / n) - 0.5 * logdet - 0.5 * n - 0.5 * n * LOG2PI


def bootstrap_rho_roots(fit, n_boot, rng, n_grid=61):
    """Signed likelihood roots for ``rho`` under parametric resampling.

    Replicates are drawn from the fitted normal AR(1) model; for each one the
    root is evaluated at the fitted ``rho``. The replicate maxima are located
    on a common atanh-grid with parabolic refinement, falling back to an exact
    scalar search when a maximum lands on the grid edge.
    """
    model = fit.model
    if model.errors != "normal" or fit.rho_fixed:
        raise ValueError("bootstrap calibration needs a normal-error fit with free rho")
    mean = model.X @ fit.beta
    noise = simulate_ar1(model.times, fit.rho, rng, size=n_boot)
    Y = mean[:, None] + fit.sigma * noise.T
    z0 = np.arctanh(fit.rho)
    half = 10.0 / np.sqrt(max(model.n - model.p, 1))
    zs = np.clip(np.linspace(z0 - half, z0 + half, n_grid), -RHO_BOUND, RHO_BOUND)
    zs = np.unique(zs)
    L = np.array([batch_concentrated_loglik(model, Y, np.tanh(z)) for z in zs])
    cols = np.arange(n_boot)
    k = L.argmax(axis=0)
    inner = np.clip(k, 1, zs.size - 2)
    f0, f1, f2 = L[inner - 1, cols], L[inner, cols], L[inner + 1, cols]
    h = zs[1] - zs[0]
    curv = f0 - 2.0 * f1 + f2
    safe = np.where(curv < 0, curv, -1.0)
    z_hat = zs[inner] + 0.5 * h * (f0 - f2) / safe
    l_max = f1 - 0.125 * (f0 - f2) ** 2 / safe
    edge = (k == 0) | (k == zs.size - 1) | (curv >= 0)
    for c in np.flatnonzero(edge):
        z, v, _ = _maximise_rho_scalar(lambda z, c=c: _concentrated(model, Y[:, c], np.tanh(z))[2])
        z_hat[c], l_max[c] = z, v
    l_at = batch_concentrated_loglik(model, Y, fit.rho)
    l_max = np.maximum(l_max, l_at)
    return np.sign(fit.rho - np.tanh(z_hat)) * np.sqrt(2.0 * (l_max - l_at))
