"""Gapped annual series: ingestion, covariate centering and lagged winter covariates.

Missing observations are represented by absent rows. A gap in the record is
only visible through the ``times`` vector.
"""

from __future__ import annotations

import csv
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

MONTH_COLUMNS = [f"m{i:02d}" for i in range(1, 13)]
WINTER_MONTHS = (10, 11, 12, 1, 2)


@dataclass(frozen=True)
class GappedSeries:
    """Ordered ``(time, value)`` pairs on an integer calendar axis."""

    times: np.ndarray
    values: np.ndarray
    label: str = ""

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if t.ndim != 1 or v.shape != t.shape:
            raise ValueError("times and values must be 1-d arrays of equal length")
        if t.size < 3:
            raise ValueError(f"a series needs at least 3 observations, got {t.size}")
        if not np.allclose(t, np.round(t)):
            raise ValueError("times must be integers")
        if np.any(np.diff(t) == 0):
            raise ValueError("duplicated time values")
        if np.any(np.diff(t) < 0):
            raise ValueError("times must be strictly increasing")
        if not np.all(np.isfinite(v)):
            raise ValueError("values must be finite")
        object.__setattr__(self, "times", np.round(t).astype(np.int64))
        object.__setattr__(self, "values", v)

    def __len__(self):
        return self.times.size

    @property
    def gaps(self):
        """List of ``(first_missing, last_missing)`` year ranges."""
        d = np.diff(self.times)
        idx = np.flatnonzero(d > 1)
        return [(int(self.times[i] + 1), int(self.times[i + 1] - 1)) for i in idx]

    @classmethod
    def from_pairs(cls, times, values, label=""):
        """Build a series from unordered pairs; rows are sorted by time."""
        t = np.asarray(times, dtype=float)
        v = np.asarray(values, dtype=float)
        if t.shape != v.shape:
            raise ValueError("times and values must have equal length")
        if np.unique(t).size != t.size:
            dup = t[np.flatnonzero(np.diff(np.sort(t)) == 0)[0]]
            raise ValueError(f"duplicated time {dup:g}")
        order = np.argsort(t, kind="stable")
        return cls(t[order], v[order], label)

    def restrict(self, start=None, stop=None):
        mask = np.ones(len(self), dtype=bool)
        if start is not None:
            mask &= self.times >= start
        if stop is not None:
            mask &= self.times <= stop
        return GappedSeries(self.times[mask], self.values[mask], self.label)


@dataclass(frozen=True)
class CenteredCovariate:
    xbar: float
    M_n: float
    w: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class LaggedDesign:
    """Response with intercept and two lagged covariates, aligned by year."""

    response: np.ndarray
    columns: np.ndarray
    years: np.ndarray
    column_names: tuple = ("intercept", "x_lag1", "x_lag2")

    def __post_init__(self):
        if self.columns.ndim != 2 or self.columns.shape[1] != 3:
            raise ValueError("lagged design needs exactly 3 columns")
        if self.columns.shape[0] != self.response.shape[0] or self.years.shape[0] != self.response.shape[0]:
            raise ValueError("response, columns and years must align")
        if self.response.shape[0] < 10:
            raise ValueError(f"lagged design needs at least 10 rows, got {self.response.shape[0]}")


def _parse_float(cell):
    cell = cell.strip()
    if cell == "" or cell.upper() in {"NA", "NAN"}:
        return None
    return float(cell)


def _parse_int(cell, row_no):
    try:
        value = float(cell)
    except ValueError:
        raise ValueError(f"row {row_no}: time value {cell!r} is not an integer") from None
    if value != int(value):
        raise ValueError(f"row {row_no}: time value {cell!r} is not an integer")
    return int(value)


def load_csv(path, time_col="year", value_col="value", label=None):
    """Read one series from a comma separated file with a header row.

    Rows whose value cell is empty are dropped, which leaves a gap in the
    calendar axis. Input order does not matter.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise ValueError(f"{path}: empty file")
        for col in (time_col, value_col):
            if col not in reader.fieldnames:
                raise ValueError(f"{path}: missing column {col!r}")
        times, values = [], []
        for row_no, row in enumerate(reader, start=2):
            value = _parse_float(row[value_col] or "")
            if value is None:
                continue
            times.append(_parse_int(row[time_col], row_no))
            values.append(value)
    if len(times) < 3:
        raise ValueError(f"{path}: fewer than 3 usable rows")
    return GappedSeries.from_pairs(times, values, label or value_col)


def load_monthly_csv(path, time_col="year"):
    """Read a ``year, m01..m12`` file into a dict ``month -> GappedSeries``."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        header = next(csv.reader(fh), None)
    if header is None:
        raise ValueError(f"{path}: empty file")
    missing = [c for c in MONTH_COLUMNS if c not in header]
    if missing:
        raise ValueError(f"{path}: missing month columns {missing}")
    return {
        month: load_csv(path, time_col, col, label=col)
        for month, col in enumerate(MONTH_COLUMNS, start=1)
    }


def load_monthly_files(paths: Sequence, time_col="year", value_col="value"):
    """Twelve single-month files, January first."""
    if len(paths) != 12:
        raise ValueError(f"expected 12 monthly files, got {len(paths)}")
    return {m: load_csv(p, time_col, value_col, label=f"m{m:02d}") for m, p in enumerate(paths, start=1)}


def center(covariate):
    """Mean, sum of squared deviations and standardised values (sd with n-1)."""
    x = np.asarray(covariate, dtype=float)
    if x.ndim != 1 or x.size < 2:
        raise ValueError("covariate needs at least 2 values")
    xbar = float(x.mean())
    dev = x - xbar
    M_n = float(dev @ dev)
    if M_n <= 0.0 or np.ptp(x) == 0.0:
        raise ValueError("covariate is constant")
    sd = np.sqrt(M_n / (x.size - 1))
    return CenteredCovariate(xbar=xbar, M_n=M_n, w=dev / sd)


def winter_average_lags(monthly: Mapping[int, GappedSeries], months=WINTER_MONTHS):
    """Winter averages aligned as first and second lags.

    For target year ``t`` the first lag averages Oct-Dec of ``t-1`` with
    Jan-Feb of ``t``; the second lag is the same quantity one year earlier.
    Winters lacking any of the five months are dropped.

    Returns ``(years, x_lag1, x_lag2)``.
    """
    lookup = {}
    for m in months:
        if m not in monthly:
            raise ValueError(f"month {m} missing from monthly data")
        s = monthly[m]
        lookup[m] = dict(zip(s.times.tolist(), s.values.tolist()))
    first = min(min(d) for d in lookup.values())
    last = max(max(d) for d in lookup.values())
    winter = {}
    for t in range(first, last + 1):
        vals = []
        for m in months:
            # months after February belong to the preceding calendar year
            year = t - 1 if m > 2 else t
            v = lookup[m].get(year)
            if v is None:
                break
            vals.append(v)
        else:
            winter[t] = float(np.mean(vals))
    years = [t for t in sorted(winter) if (t - 1) in winter]
    if not years:
        raise ValueError("monthly series have no overlapping years")
    years = np.array(years, dtype=np.int64)
    x1 = np.array([winter[t] for t in years])
    x2 = np.array([winter[t - 1] for t in years])
    return years, x1, x2


def lagged_design(response: GappedSeries, years, x_lag1, x_lag2):
    """Align a response series with lagged covariates; incomplete rows are dropped."""
    cov = {int(t): (a, b) for t, a, b in zip(years, x_lag1, x_lag2)}
    rows = [(t, y, *cov[t]) for t, y in zip(response.times.tolist(), response.values) if t in cov]
    if len(rows) < 10:
        raise ValueError(f"only {len(rows)} aligned rows; at least 10 required")
    arr = np.array(rows, dtype=float)
    X = np.column_stack([np.ones(len(rows)), arr[:, 2], arr[:, 3]])
    return LaggedDesign(response=arr[:, 1], columns=X, years=arr[:, 0].astype(np.int64))
