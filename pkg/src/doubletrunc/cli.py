"""Command-line front end.

Subcommands::

    doubletrunc fit      --input FILE            NPMLE, ECDF and sampling probability
    doubletrunc test     --input FILE --seed S   bootstrap test of ignorable sampling bias
    doubletrunc simulate --preset table1         Monte Carlo rejection-rate table
    doubletrunc validate --input FILE            check a dataset export

Exit codes: 0 completed, 2 input error, 3 estimation failure.  Whether the
test rejects never affects the exit code.
"""
from __future__ import annotations

import argparse
import itertools
import json
import logging
import sys

import numpy as np

from . import io as dio
from .biastest import bias_test_with_se, bootstrap_test
from .estimators import DEFAULT_MAX_ITER, DEFAULT_TOL, ecdf, fit_npmle, npmle_cdf, sampling_curve
from .exceptions import EstimationError, InputError
from .simulate import (TABLE1_GAMMAS, McScenario, TargetLaw, analytic_g, count_discards,
                       run_monte_carlo, table1_scenarios)

log = logging.getLogger("doubletrunc")

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_ESTIMATION = 3

FIT_COLUMNS = ("row", "x", "u", "v", "f_weight", "k_weight", "g_at_x")
TEST_COLUMNS = ("n", "n_dropped", "d_n", "p_value", "b_requested", "b_used", "alpha_n", "seed")
SIM_COLUMNS = ("model", "rho", "sigma", "n", "target", "gamma", "rejection_rate",
               "trials", "trials_used", "trials_discarded", "mean_b_used", "b", "seed", "status")


class FitFailed(EstimationError):
    def __init__(self, message, diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics


def _diag_dict(fit, diag):
    return {"status": diag.status.value, "iterations": fit.iterations,
            "final_delta": diag.final_delta, "degenerate_indices": list(diag.degenerate_indices),
            "reason": diag.reason}


def _fit_or_fail(sample, args):
    fit, diag = fit_npmle(sample, tol=args.tol, max_iter=args.max_iter)
    if not diag.ok:
        raise FitFailed(f"NPMLE not computable: {diag.status.value}", _diag_dict(fit, diag))
    return fit, diag


def _curves(sample, fit):
    pts = np.unique(sample.x)
    curve = sampling_curve(fit, sample)
    return {
        "F_n": (pts, npmle_cdf(fit, sample)(pts)),
        "F_n_star": (pts, ecdf(sample)(pts)),
        "G_n": (pts, curve.values),
        "G_null": (pts, np.full(pts.size, fit.alpha_n)),
    }


def cmd_fit(args):
    sample = dio.read_dataset(args.input)
    fit, diag = _fit_or_fail(sample, args)
    rows = [{"row": i, "x": x, "u": u, "v": v, "f_weight": f, "k_weight": k, "g_at_x": g}
            for i, (x, u, v, f, k, g) in enumerate(zip(sample.x, sample.u, sample.v,
                                                       fit.f_weights, fit.k_weights, fit.g_at_x))]
    if args.format == "csv":
        text = dio.dumps_csv(rows, FIT_COLUMNS)
    else:
        text = dio.dumps_json({
            "version": dio.REPORT_VERSION, "command": "fit",
            "n": sample.n, "n_dropped": sample.n_dropped,
            "alpha_n": fit.alpha_n, "truncation_rate": 1.0 - fit.alpha_n,
            "tol": args.tol, "max_iter": args.max_iter,
            "diagnostics": _diag_dict(fit, diag), "observations": rows,
        })
    dio.emit(text, args.out)
    if args.plot_data:
        dio.emit(dio.dumps_csv(dio.plot_rows(_curves(sample, fit)), dio.PLOT_COLUMNS), args.plot_data)
    log.info("fit: n=%d dropped=%d 1-alpha_n=%.4f", sample.n, sample.n_dropped, 1.0 - fit.alpha_n)
    return EXIT_OK


def cmd_test(args):
    sample = dio.read_dataset(args.input)
    fit, _ = _fit_or_fail(sample, args)
    se = None
    if args.se_ratio:
        report, se = bias_test_with_se(sample, args.b, args.seed, tol=args.tol,
                                       max_iter=args.max_iter, fit=fit, workers=args.workers)
    else:
        report = bootstrap_test(sample, args.b, args.seed, tol=args.tol, max_iter=args.max_iter,
                                fit=fit, workers=args.workers)
    summary = {"n": sample.n, "n_dropped": sample.n_dropped, "d_n": report.d_n,
               "p_value": report.p_value, "b_requested": report.b_requested,
               "b_used": report.b_used, "alpha_n": report.alpha_n, "seed": report.seed}
    if args.format == "csv":
        text = dio.dumps_csv([summary], TEST_COLUMNS)
    else:
        body = {"version": dio.REPORT_VERSION, "command": "test", **summary,
                "tol": args.tol, "max_iter": args.max_iter,
                "bootstrap_stats": report.bootstrap_stats}
        if se is not None:
            body["se_ratio"] = {"points": se.points, "ratio": se.ratio, "b": se.b}
        text = dio.dumps_json(body)
    dio.emit(text, args.out)
    if args.plot_data:
        series = _curves(sample, fit)
        if se is not None:
            series["se_ratio"] = (se.points, se.ratio)
        dio.emit(dio.dumps_csv(dio.plot_rows(series), dio.PLOT_COLUMNS), args.plot_data)
    log.info("test: D_n=%.4f p=%.4f (B used %d of %d)", report.d_n, report.p_value,
             report.b_used, report.b_requested)
    return EXIT_OK


def _listify(value):
    return list(value) if isinstance(value, (list, tuple)) else [value]


def _scenarios_from(args):
    if args.preset == "table1":
        grid = dict(model=["M1", "M2"], n=[100, 200], sigma=[1.0, 0.5], rho=[1.0, 2.0, 6.0])
        defaults = dict(trials=1000, b=500)
    elif args.preset == "smoke":
        grid = dict(model=["M1", "M2"], n=[100], sigma=[1.0, 0.5], rho=[1.0, 2.0, 6.0])
        defaults = dict(trials=50, b=200)
    else:
        grid = dict(model=["M1"], n=[100], sigma=[1.0], rho=[1.0])
        defaults = dict(trials=1000, b=500)
    settings = dict(defaults, seed=0, gammas=list(TABLE1_GAMMAS), target="uniform")
    if args.config:
        try:
            with open(args.config) as fh:
                config = json.load(fh)
        except (OSError, ValueError) as exc:
            raise InputError(f"cannot read config {args.config}: {exc}") from exc
        for key in ("model", "n", "sigma", "rho"):
            if key in config:
                grid[key] = _listify(config[key])
        for key in ("trials", "b", "seed", "gammas", "target"):
            if key in config:
                settings[key] = config[key]
    for key in ("model", "n", "sigma", "rho"):
        if getattr(args, key) is not None:
            grid[key] = getattr(args, key)
    for key in ("trials", "b", "seed", "gammas", "target"):
        if getattr(args, key) is not None:
            settings[key] = getattr(args, key)
    target = TargetLaw.parse(str(settings["target"]))
    try:
        return [McScenario(m, float(r), float(s), int(n), target, tuple(settings["gammas"]),
                           int(settings["b"]), int(settings["trials"]), int(settings["seed"]),
                           args.tol, args.max_iter)
                for m, n, s, r in itertools.product(grid["model"], grid["n"], grid["sigma"], grid["rho"])]
    except ValueError as exc:
        raise InputError(str(exc)) from exc


def _fig1_series(scenarios, points=99):
    x = np.linspace(0.0, 1.0, points + 2)[1:-1]
    keys = sorted({(sc.model, sc.rho, sc.sigma_c) for sc in scenarios})
    return {f"{m}/rho={r:g}/sigma={s:g}": (x, analytic_g(m, x, r, s)) for m, r, s in keys}


def cmd_simulate(args):
    if args.preset == "fig1":
        grid = table1_scenarios(trials=1, b=1, ns=(100,))
        rows = dio.plot_rows(_fig1_series(grid))
        text = dio.dumps_csv(rows, dio.PLOT_COLUMNS) if args.format == "csv" else \
            dio.dumps_json({"version": dio.REPORT_VERSION, "command": "simulate", "preset": "fig1",
                            "curves": rows})
        dio.emit(text, args.out)
        return EXIT_OK
    scenarios = _scenarios_from(args)
    rows = []
    for sc in scenarios:
        base = {"model": sc.model, "rho": sc.rho, "sigma": sc.sigma_c, "n": sc.n,
                "target": str(sc.target), "trials": sc.trials, "b": sc.b, "seed": sc.seed}
        if args.discards_only:
            d = count_discards(sc, workers=args.workers)
            rows.append({**base, "gamma": None, "rejection_rate": None,
                         "trials_used": sc.trials - d, "trials_discarded": d,
                         "mean_b_used": None, "status": "discards-only"})
            continue
        try:
            res = run_monte_carlo(sc, workers=args.workers)
        except EstimationError as exc:
            log.warning("cell %s failed: %s", base, exc)
            rows.extend({**base, "gamma": g, "rejection_rate": None, "trials_used": 0,
                         "trials_discarded": sc.trials, "mean_b_used": None, "status": "failed"}
                        for g in sc.gammas)
            continue
        rows.extend({**base, "gamma": g, "rejection_rate": res.rejection_rate[g],
                     "trials_used": res.trials_used, "trials_discarded": res.trials_discarded,
                     "mean_b_used": res.mean_b_used, "status": "ok"} for g in sc.gammas)
        log.info("%s rho=%g sigma=%g n=%d: %s (discarded %d)", sc.model, sc.rho, sc.sigma_c, sc.n,
                 res.rejection_rate, res.trials_discarded)
    if args.format == "csv":
        text = dio.dumps_csv(rows, SIM_COLUMNS)
    else:
        text = dio.dumps_json({"version": dio.REPORT_VERSION, "command": "simulate",
                               "preset": args.preset, "cells": rows})
    dio.emit(text, args.out)
    if args.plot_data:
        dio.emit(dio.dumps_csv(dio.plot_rows(_fig1_series(scenarios)), dio.PLOT_COLUMNS), args.plot_data)
    return EXIT_OK


def cmd_validate(args):
    sample = dio.read_dataset(args.input)
    fit, diag = fit_npmle(sample, tol=args.tol, max_iter=args.max_iter)
    summary = {"n": sample.n, "n_dropped": sample.n_dropped,
               "npmle": _diag_dict(fit, diag)}
    dio.emit(dio.dumps_json(summary), args.out)
    return EXIT_OK


def _positive_int(text):
    val = int(text)
    if val < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return val


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=float, default=DEFAULT_TOL, help="convergence tolerance (default 1e-8)")
    common.add_argument("--max-iter", type=_positive_int, default=DEFAULT_MAX_ITER)
    common.add_argument("--out", default=None, help="output file (default stdout)")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--plot-data", default=None, help="write long-format plot data (series,x,value)")
    common.add_argument("--workers", type=_positive_int, default=1)
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="doubletrunc", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", parents=[common], help="NPMLE and ECDF of a dataset")
    p.add_argument("--input", required=True)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("test", parents=[common], help="bootstrap test of ignorable sampling bias")
    p.add_argument("--input", required=True)
    p.add_argument("--b", type=_positive_int, default=500)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--se-ratio", action="store_true", help="also report bootstrap SE ratios")
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("simulate", parents=[common], help="Monte Carlo rejection rates")
    p.add_argument("--preset", choices=("table1", "smoke", "fig1"), default=None)
    p.add_argument("--config", default=None, help="JSON file with grid keys and settings")
    p.add_argument("--model", nargs="+", choices=("M1", "M2"), default=None)
    p.add_argument("--rho", nargs="+", type=float, default=None)
    p.add_argument("--sigma", nargs="+", type=float, default=None)
    p.add_argument("--n", nargs="+", type=_positive_int, default=None)
    p.add_argument("--trials", type=_positive_int, default=None)
    p.add_argument("--b", type=_positive_int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--gammas", nargs="+", type=float, default=None)
    p.add_argument("--target", default=None, help="uniform, beta(1,0.5) or beta(0.5,1)")
    p.add_argument("--discards-only", action="store_true",
                   help="count trials whose NPMLE fails, skipping the bootstrap")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("validate", parents=[common], help="check a dataset export")
    p.add_argument("--input", required=True)
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except InputError as exc:
        _error_record(exc)
        return EXIT_INPUT
    except EstimationError as exc:
        _error_record(exc, getattr(exc, "diagnostics", None))
        return EXIT_ESTIMATION


def _error_record(exc, diagnostics=None):
    record = {"error": type(exc).__name__, "message": str(exc)}
    if diagnostics is not None:
        record["diagnostics"] = diagnostics
    sys.stderr.write(dio.dumps_json(record))


if __name__ == "__main__":
    sys.exit(main())
