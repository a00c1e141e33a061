"""Command-line entry point: ``panelcp {test,simulate,critical-values}``."""

import argparse
from dataclasses import replace
import json
import sys

import numpy as np

from . import __version__
from .covariance import CorrelationStructure, KernelSpec, build_lambda, fit_covariance
from .datagen import AR1, IID, parse_process
from .errors import (
    DegenerateDataError,
    EstimationError,
    InvalidDataError,
    ParameterError,
    UnsupportedHorizonError,
)
from .harness import PRESETS, emit_table, load_grid, run_experiment
from .limit import StatisticKind, build_null
from .report import read_panel_csv, report_json, report_text, run_test

EXIT_OK, EXIT_INPUT, EXIT_DEGENERATE, EXIT_INTERNAL = 0, 1, 2, 3


def _kernel(args):
    return KernelSpec(args.kernel, args.bandwidth)


def _add_common(p, seed=0):
    p.add_argument("--alpha", type=float, default=0.05, help="significance level (default 0.05)")
    p.add_argument("--kernel", choices=["parzen", "bartlett"], default="parzen")
    p.add_argument("--bandwidth", type=float, default=2.0, help="kernel window h (default 2)")
    p.add_argument("--weights", choices=["t2"], default="t2",
                   help="weight sequence of the change-point estimator")
    p.add_argument("--seed", type=int, default=seed)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="panelcp",
        description="Change-point tests for short panels (CUSUM and ratio statistics).",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("test", help="test a CSV panel for a common change in means")
    p.add_argument("--input", required=True, help="CSV file, one row per panel")
    _add_common(p)
    p.add_argument("--statistics", default="ratio,cusum",
                   help="comma-separated subset of ratio,cusum")
    p.add_argument("--null-draws", type=int, default=2000)
    p.add_argument("--format", choices=["text", "json-report"], default="text")
    p.add_argument("--output", help="also write the JSON report to this file")

    p = sub.add_parser("simulate", help="Monte Carlo size/power study")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", help="TOML experiment grid")
    src.add_argument("--preset", choices=sorted(PRESETS))
    p.add_argument("--full", action="store_true",
                   help="with --preset: 5000 replications and 2000 null draws")
    p.add_argument("--replications", type=int, help="override the replication count")
    p.add_argument("--null-draws", type=int, help="override the null sample size")
    p.add_argument("--seed", type=int, help="override the master seed")
    p.add_argument("--alpha", type=float)
    p.add_argument("--kernel", choices=["parzen", "bartlett"])
    p.add_argument("--bandwidth", type=float)
    p.add_argument("--weights", choices=["t2"])
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--format", choices=["csv", "markdown", "json-report"], default="csv")
    p.add_argument("--output", help="write the table here instead of stdout")

    p = sub.add_parser("critical-values", help="simulate critical values of the limit laws")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--input", help="estimate the structure from this CSV panel")
    src.add_argument("--horizon", type=int, help="use a known structure on this horizon")
    p.add_argument("--structure", default="iid", help="iid or ar1(phi), used with --horizon")
    _add_common(p)
    p.add_argument("--null-draws", type=int, default=2000)
    p.add_argument("--format", choices=["csv", "markdown", "json-report"], default="csv")
    return parser


def _write(text, path=None):
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_test(args):
    data, _ = read_panel_csv(args.input)
    kinds = [k.strip() for k in args.statistics.split(",") if k.strip()]
    for k in kinds:
        if k not in ("ratio", "cusum"):
            raise ParameterError(f"unknown statistic {k!r}")
    report = run_test(data, kinds, _kernel(args), args.weights, args.alpha,
                      args.null_draws, args.seed)
    if args.output:
        _write(report_json(report), args.output)
    _write(report_json(report) if args.format == "json-report" else report_text(report))


def cmd_simulate(args):
    if args.preset:
        full = args.full
        grid = PRESETS[args.preset](
            replications=5000 if full else 2000,
            null_draws=2000 if full else 1000,
        )
    else:
        grid = load_grid(args.config)
    overrides = {
        "replications": args.replications,
        "null_draws": args.null_draws,
        "seed": args.seed,
        "alpha": args.alpha,
        "weights": args.weights,
    }
    grid = replace(grid, **{k: v for k, v in overrides.items() if v is not None})
    if args.kernel is not None or args.bandwidth is not None:
        grid = replace(grid, kernel=KernelSpec(args.kernel or grid.kernel.kind,
                                               args.bandwidth or grid.kernel.bandwidth))
    table = run_experiment(grid, jobs=args.jobs)
    _write(emit_table(table, args.format), args.output)


def _structure(text, T):
    proc = parse_process(text)
    if isinstance(proc, IID):
        return CorrelationStructure.iid(T)
    if isinstance(proc, AR1):
        return CorrelationStructure.ar1(T, proc.phi)
    raise ParameterError("--structure accepts iid or ar1(phi)")


def cmd_critical_values(args):
    if args.input:
        data, _ = read_panel_csv(args.input)
        lam = fit_covariance(data, _kernel(args), args.weights).limit
    else:
        lam = build_lambda(_structure(args.structure, args.horizon))
    T = lam.horizon
    kinds = [StatisticKind.CUSUM] + ([StatisticKind.RATIO] if T >= 4 else [])
    rows = []
    for kind in kinds:
        null = build_null(lam, kind, args.null_draws, args.seed)
        rows.append({"kind": kind.value, "alpha": args.alpha,
                     "critical_value": null.quantile(1 - args.alpha)})
    if args.format == "json-report":
        out = json.dumps({"horizon": T, "null_draws": args.null_draws, "seed": args.seed,
                          "lambda": np.asarray(lam.matrix).tolist(),
                          "note": "cusum values are for unit sigma",
                          "critical_values": rows}, indent=2) + "\n"
    elif args.format == "markdown":
        out = "| kind | alpha | critical_value |\n|---|---|---|\n" + "".join(
            f"| {r['kind']} | {r['alpha']:g} | {r['critical_value']:.6f} |\n" for r in rows)
    else:
        out = "kind,alpha,critical_value\n" + "".join(
            f"{r['kind']},{r['alpha']:g},{r['critical_value']:.6f}\n" for r in rows)
    _write(out)


COMMANDS = {"test": cmd_test, "simulate": cmd_simulate, "critical-values": cmd_critical_values}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        COMMANDS[args.command](args)
    except (InvalidDataError, ParameterError, UnsupportedHorizonError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (DegenerateDataError, EstimationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
