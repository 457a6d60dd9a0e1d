"""``climcd`` command-line interface.

Each subcommand reads CSV input, writes ``<name>.json`` with a summary and,
where relevant, plain two-column CSV curves into the output directory
(``--out``, else ``$CLIMCD_OUTDIR``, else the working directory). Existing
files are only replaced with ``--force``.

Exit codes: 0 success, 1 usage or input error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .confidence import ConfidenceCurve, cc_rho
from .extremes import SeasonModel, gpd_fit, profile_cc_p, season_exceed_prob, shock_barometer, transform
from .fusion import SourceCC, chisq_sd_cd, fuse, source_from_cd
from .gls_ar import GlsArModel, fit_mle, fit_ols
from .monitoring import (
    ar1_coefficient,
    loglik_bridge,
    mean_bridge,
    param_bridges,
    scan_fits,
    simulate_null_quantiles,
    slope_bridge,
)
from .prediction import LinearFitSummary, crossing_cap, crossing_cc, predict_cd
from .segmented import bootstrap_break_test, compare_trends, fit_segmented
from .series import center, load_csv

OUTDIR_ENV = "CLIMCD_OUTDIR"
EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# ---------------------------------------------------------------- helpers


def _sha256(paths):
    h = hashlib.sha256()
    for p in paths:
        with open(p, "rb") as fh:
            h.update(fh.read())
    return h.hexdigest()


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if np.isnan(v):
            return None
        if np.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return obj


class Output:
    def __init__(self, args):
        out = args.out or os.environ.get(OUTDIR_ENV) or "."
        self.dir = Path(out)
        self.force = args.force
        self.prefix = args.prefix or args.command
        self.written = []

    def path(self, suffix):
        p = self.dir / f"{self.prefix}{suffix}"
        if p.exists() and not self.force:
            raise UsageError(f"{p} exists; pass --force to overwrite")
        return p

    def text(self, suffix, text):
        p = self.path(suffix)
        self.dir.mkdir(parents=True, exist_ok=True)
        with open(p, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        self.written.append(p.name)

    def curve(self, suffix, curve, header=("focus", "level")):
        self.text(suffix, curve.to_csv(header=header))

    def json(self, payload):
        self.text(".json", json.dumps(_clean(payload), indent=2, sort_keys=True) + "\n")


def _load(args, path=None):
    path = path or args.input
    try:
        return load_csv(path, args.time_col, args.value_col)
    except FileNotFoundError:
        raise UsageError(f"input file not found: {path}") from None
    except (ValueError, KeyError, csv.Error) as exc:
        raise UsageError(f"malformed input {path}: {exc}") from None


def _grid(lo, hi, n, name):
    if lo is None or hi is None:
        return None
    if not hi > lo or n < 3:
        raise UsageError(f"{name} grid needs lo < hi and at least 3 points")
    return np.linspace(lo, hi, n)


def _envelope(args, inputs, extra=None):
    out = {
        "command": args.command,
        "version": __version__,
        "seed": getattr(args, "seed", None),
        "input_sha256": _sha256(inputs) if inputs else None,
        "inputs": [Path(p).name for p in inputs],
    }
    if extra:
        out.update(extra)
    return out


def _trend_model(series, kind):
    cov = center(series.times)
    cols = [np.ones(len(series)), cov.w]
    names = ["a", "b"]
    if kind == "quadratic":
        cols.append(cov.w**2 - np.mean(cov.w**2))
        names.append("c")
    errors = {"ar": "normal", "quadratic": "normal", "hetero": "hetero", "terr": "t"}.get(kind, "normal")
    return GlsArModel(np.column_stack(cols), series.times, errors, column_names=names), cov


# ---------------------------------------------------------------- commands


def cmd_fit_trend(args, out):
    s = _load(args)
    model, cov = _trend_model(s, args.model)
    fit = fit_ols(model, s.values) if args.model == "ols" else fit_mle(model, s.values)
    payload = _envelope(args, [args.input], {"model": args.model, "n": len(s), "xbar": cov.xbar, "fit": fit.to_dict()})
    out.json(payload)
    return payload


def cmd_cc_rho(args, out):
    s = _load(args)
    model, _ = _trend_model(s, args.model)
    fit = fit_mle(model, s.values)
    grid = _grid(args.grid_lo, args.grid_hi, args.grid_n, "rho")
    calib = None if args.calibrate == "none" else args.calibrate
    curve = cc_rho(fit, grid, calibrate=calib, n_boot=args.n_boot, seed=args.seed)
    payload = _envelope(
        args, [args.input], {"rho_hat": fit.rho, "calibrate": args.calibrate, "curve": curve.to_dict(args.levels)}
    )
    out.curve("_curve.csv", curve, ("rho", "level"))
    out.json(payload)
    return payload


def cmd_predict(args, out):
    s = _load(args)
    fit = LinearFitSummary.from_data(s.times, s.values)
    cd = predict_cd(fit, args.x_new, _grid(args.grid_lo, args.grid_hi, args.grid_n, "prediction"))
    intervals = [{"level": lv, "lower": cd.quantile((1 - lv) / 2), "upper": cd.quantile((1 + lv) / 2)} for lv in args.levels]
    payload = _envelope(
        args, [args.input], {"x_new": args.x_new, "median": cd.median, "df": fit.m, "intervals": intervals}
    )
    out.text("_cd.csv", ConfidenceCurve(cd.grid, cd.cdf, cd.median).to_csv(header=("y", "cdf")))
    out.json(payload)
    return payload


def cmd_crossing(args, out):
    s = _load(args)
    fit = LinearFitSummary.from_data(s.times, s.values)
    lo = args.grid_lo if args.grid_lo is not None else float(s.times[-1])
    hi = args.grid_hi if args.grid_hi is not None else float(s.times[-1]) + 500.0
    grid = _grid(lo, hi, args.grid_n, "year")
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        curve = crossing_cc(fit, args.threshold, grid)
    cap, t = crossing_cap(fit)
    iv = curve.interval(args.level)
    payload = _envelope(
        args,
        [args.input],
        {
            "threshold": args.threshold,
            "estimate": curve.point_estimate,
            "interval": iv.to_dict(),
            "cap": cap,
            "slope_t": t,
            "warnings": [str(w.message) for w in caught],
        },
    )
    out.curve("_curve.csv", curve, ("year", "level"))
    out.json(payload)
    return payload


def cmd_segmented(args, out):
    s = _load(args)
    x = s.times.astype(float)
    fit = fit_segmented(x, s.values, args.min_size)
    payload = _envelope(
        args, [args.input], {"segmented": fit.to_dict(), "comparison": compare_trends(x, s.values, args.min_size)}
    )
    if args.bootstrap:
        payload["bootstrap"] = bootstrap_break_test(x, s.values, args.min_size, args.bootstrap, args.seed)
    prof = fit.profile_table(x)
    out.text("_profile.csv", "break_year,loglik\n" + "".join(f"{a!r},{b!r}\n" for a, b in prof.tolist()))
    out.json(payload)
    return payload


def cmd_monitor(args, out):
    s = _load(args)
    x = s.times.astype(float)
    i0 = args.min_size
    if args.kind == "slope":
        bridges = [slope_bridge(x, s.values, i0, s.times)]
    elif args.kind == "mean":
        rho = ar1_coefficient(s.values) if args.rho is None else args.rho
        bridges = [mean_bridge(s.values, i0, rho, s.times)]
    else:
        model, _ = _trend_model(s, "ar")
        scan = scan_fits(model.X, s.values, s.times, i0)
        if args.kind == "loglik":
            bridges = [loglik_bridge(model.X, s.values, s.times, i0, scan=scan)]
        else:
            bridges = param_bridges(model.X, s.values, s.times, i0, scan=scan)
    results = []
    for br in bridges:
        null = simulate_null_quantiles(br.null_kind, br.window, (args.level,), args.paths, args.seed)
        res = br.test(null, args.level)
        res.update({"kind": br.kind, "label": br.label, "window": list(br.window), "holes": br.holes.tolist()})
        results.append(res)
        tag = f"_{br.label}" if br.label else ""
        out.text(f"_bridge{tag}.csv", br.to_csv())
    payload = _envelope(args, [args.input], {"kind": args.kind, "min_size": i0, "results": results})
    out.json(payload)
    return payload


def _parse_chisq(spec):
    try:
        sh, m = spec.split(":")
        return float(sh), int(m)
    except ValueError:
        raise UsageError(f"--chisq expects SIGMA_HAT:DF, got {spec!r}") from None


def cmd_fuse(args, out):
    grid = _grid(args.grid_lo, args.grid_hi, args.grid_n, "fusion")
    if grid is None:
        raise UsageError("fuse needs --grid-lo and --grid-hi")
    sources = []
    for path in args.source:
        try:
            curve = ConfidenceCurve.from_csv(path, label=Path(path).stem)
        except FileNotFoundError:
            raise UsageError(f"source file not found: {path}") from None
        except ValueError as exc:
            raise UsageError(f"malformed curve {path}: {exc}") from None
        sources.append(SourceCC(curve.label, curve))
    for k, spec in enumerate(args.chisq):
        sh, m = _parse_chisq(spec)
        sources.append(source_from_cd(f"chisq{k + 1}", chisq_sd_cd(sh, m, grid)))
    if len(sources) < 2:
        raise UsageError("fuse needs at least two sources (--source or --chisq)")
    fused = fuse(sources, grid)
    payload = _envelope(
        args,
        list(args.source),
        {
            "sources": [{"label": s.label, **s.curve.to_dict(args.levels)} for s in sources],
            "fused": fused.to_dict(args.levels),
        },
    )
    for s in sources:
        if s.label.startswith("chisq"):
            out.curve(f"_{s.label}.csv", s.curve)
    out.curve("_fused.csv", fused)
    out.json(payload)
    return payload


def cmd_extremes(args, out):
    s = _load(args)
    y = transform(s.values, args.offset) if args.offset is not None else s.values
    if args.y0 is not None:
        y0 = args.y0
    elif args.raw_threshold is not None and args.offset is not None:
        y0 = args.offset - args.raw_threshold
    else:
        raise UsageError("give --y0, or --raw-threshold together with --offset")
    if args.lam is not None:
        lam = args.lam
    elif args.seasons:
        lam = y.size / args.seasons
    else:
        raise UsageError("give --seasons or --lam")
    season = SeasonModel(lam, y0, args.offset)
    fit = gpd_fit(y)
    p_hat = season_exceed_prob(fit.a, fit.sigma, season)
    grid = _grid(args.p_lo, args.p_hi, args.grid_n, "p")
    cc = profile_cc_p(y, season, grid, fit=fit)
    baro = shock_barometer(cc)
    payload = _envelope(
        args,
        [args.input],
        {
            "fit": fit.to_dict(),
            "lambda": lam,
            "y0": y0,
            "p_hat": p_hat,
            "p_curve": cc.to_dict(args.levels),
            "barometer": baro.to_dict(args.levels),
        },
    )
    out.curve("_p.csv", cc, ("p", "level"))
    out.curve("_barometer.csv", baro, ("barometer", "level"))
    out.json(payload)
    return payload


def cmd_simulate_null(args, out):
    window = args.window[0] if len(args.window) == 1 else tuple(args.window)
    nq = simulate_null_quantiles(args.kind, window, tuple(args.levels), args.paths, args.seed, args.steps)
    payload = _envelope(args, [], nq.to_dict())
    out.json(payload)
    return payload


# ---------------------------------------------------------------- parser


def _levels(text):
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad level list {text!r}") from None
    if any(not 0 < v < 1 for v in vals):
        raise argparse.ArgumentTypeError("levels must lie in (0, 1)")
    return vals


def build_parser():
    p = _Parser(prog="climcd", description="Confidence curves for climate trend questions.")
    p.add_argument("--version", action="version", version=f"climcd {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, data=True):
        sp.add_argument("--out", help=f"output directory (default ${OUTDIR_ENV} or .)")
        sp.add_argument("--prefix", help="output file prefix (default: command name)")
        sp.add_argument("--force", action="store_true", help="overwrite existing outputs")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--levels", type=_levels, default=[0.5, 0.9, 0.95])
        if data:
            sp.add_argument("--input", required=True)
            sp.add_argument("--time-col", default="year")
            sp.add_argument("--value-col", default="value")

    def grid(sp, n=401):
        sp.add_argument("--grid-lo", type=float)
        sp.add_argument("--grid-hi", type=float)
        sp.add_argument("--grid-n", type=int, default=n)

    sp = sub.add_parser("fit-trend", help="linear trend with AR(1) errors")
    common(sp)
    sp.add_argument("--model", choices=["ols", "ar", "hetero", "terr", "quadratic"], default="ar")
    sp.set_defaults(func=cmd_fit_trend)

    sp = sub.add_parser("cc-rho", help="confidence curve for the AR coefficient")
    common(sp)
    grid(sp)
    sp.add_argument("--model", choices=["ar", "hetero", "terr", "quadratic"], default="ar")
    sp.add_argument("--calibrate", choices=["none", "bootstrap"], default="none")
    sp.add_argument("--n-boot", type=int, default=200)
    sp.set_defaults(func=cmd_cc_rho)

    sp = sub.add_parser("predict", help="confidence distribution for a future observation")
    common(sp)
    grid(sp)
    sp.add_argument("--x-new", type=float, required=True)
    sp.set_defaults(func=cmd_predict)

    sp = sub.add_parser("crossing", help="confidence curve for a threshold-crossing year")
    common(sp)
    grid(sp, 2001)
    sp.add_argument("--threshold", type=float, required=True)
    sp.add_argument("--level", type=float, default=0.9)
    sp.set_defaults(func=cmd_crossing)

    sp = sub.add_parser("segmented", help="broken-line trend with scanned break")
    common(sp)
    sp.add_argument("--min-size", type=int, default=10)
    sp.add_argument("--bootstrap", type=int, default=0, help="bootstrap replicates for the break test")
    sp.set_defaults(func=cmd_segmented)

    sp = sub.add_parser("monitor", help="change monitoring bridges")
    common(sp)
    sp.add_argument("--kind", choices=["slope", "mean", "loglik", "parameter"], default="slope")
    sp.add_argument("--min-size", type=int, default=10)
    sp.add_argument("--rho", type=float, help="AR coefficient for the mean bridge (default: estimated)")
    sp.add_argument("--paths", type=int, default=100_000)
    sp.add_argument("--level", type=float, default=0.95)
    sp.set_defaults(func=cmd_monitor)

    sp = sub.add_parser("fuse", help="fuse independent confidence curves")
    common(sp, data=False)
    grid(sp, 1001)
    sp.add_argument("--source", action="append", default=[], help="two-column curve CSV (focus, level)")
    sp.add_argument("--chisq", action="append", default=[], help="SIGMA_HAT:DF standard-deviation source")
    sp.set_defaults(func=cmd_fuse)

    sp = sub.add_parser("extremes", help="GPD exceedances and season exceedance probability")
    common(sp)
    sp.add_argument("--offset", type=float, help="transform raw values as offset - raw")
    sp.add_argument("--y0", type=float, help="threshold on the exceedance scale")
    sp.add_argument("--raw-threshold", type=float, help="threshold on the raw scale")
    sp.add_argument("--seasons", type=int, help="number of seasons (lambda = n / seasons)")
    sp.add_argument("--lam", type=float, help="events per season")
    sp.add_argument("--p-lo", type=float, default=1e-4)
    sp.add_argument("--p-hi", type=float, default=0.6)
    sp.add_argument("--grid-n", type=int, default=300)
    sp.set_defaults(func=cmd_extremes)

    sp = sub.add_parser("simulate-null", help="simulated null quantiles of bridge maxima")
    common(sp, data=False)
    sp.add_argument("--kind", choices=["weighted", "bridge", "slope", "mean", "loglik", "parameter"], default="weighted")
    sp.add_argument("--window", type=float, nargs="+", default=[0.025], help="EPS or LO HI")
    sp.add_argument("--paths", type=int, default=100_000)
    sp.add_argument("--steps", type=int, default=2000)
    sp.set_defaults(func=cmd_simulate_null)
    return p


def run(argv=None):
    """Run one command; returns the exit code."""
    try:
        args = build_parser().parse_args(argv)
        if getattr(args, "window", None) is not None and len(args.window) > 2:
            raise UsageError("--window takes one or two values")
        out = Output(args)
        payload = args.func(args, out)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, ArithmeticError, np.linalg.LinAlgError, RuntimeError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    print(json.dumps({"written": out.written, "command": payload["command"]}, sort_keys=True))
    return EXIT_OK


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
