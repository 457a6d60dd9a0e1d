"""Input validation helpers shared by the estimators."""

from __future__ import annotations

import numbers

import numpy as np
from sklearn.utils.validation import check_array, column_or_1d


def check_vector(x, name="x", min_length=1):
    """Return ``x`` as a finite 1-d float array of at least ``min_length``."""
    x = column_or_1d(np.asarray(x, dtype=float), warn=False)
    if x.shape[0] < min_length:
        raise ValueError(f"{name} needs at least {min_length} values, got {x.shape[0]}")
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{name} contains non-finite values")
    return x


def check_design(X, n_rows=None):
    X = check_array(X, ensure_2d=False, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if n_rows is not None and X.shape[0] != n_rows:
        raise ValueError(f"design has {X.shape[0]} rows, expected {n_rows}")
    return X


def check_times(times, n=None):
    """Strictly increasing integer-valued calendar axis."""
    t = check_vector(times, "times")
    if n is not None and t.shape[0] != n:
        raise ValueError(f"times has length {t.shape[0]}, expected {n}")
    if not np.allclose(t, np.round(t)):
        raise ValueError("times must be integer calendar values")
    t = np.round(t)
    if np.any(np.diff(t) <= 0):
        raise ValueError("times must be strictly increasing")
    return t


def check_level(level, name="level", allow_zero=True):
    if not isinstance(level, numbers.Real):
        raise TypeError(f"{name} must be a real number")
    lo_ok = level >= 0 if allow_zero else level > 0
    if not (lo_ok and level < 1):
        raise ValueError(f"{name} must lie in {'[0' if allow_zero else '(0'}, 1), got {level}")
    return float(level)


def check_min_size(i0, n):
    if not isinstance(i0, numbers.Integral) or i0 < 2:
        raise ValueError(f"minimum piece length must be an integer >= 2, got {i0!r}")
    if n < 2 * i0 + 1:
        raise ValueError(f"series of length {n} too short for minimum piece length {i0}")
    return int(i0)
