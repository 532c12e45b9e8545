"""Command-line interface: ``robust-pspline fit`` and ``robust-pspline simulate``.

Exit codes: 0 success, 2 usage or input error, 3 numerical failure.
"""

import argparse
import csv
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from .exceptions import RobustSplineError
from .fitter import FitConfig, fit
from .loss import HUBER_C, TUKEY_C, LossSpec
from .simulate import ERROR_LAWS, ESTIMATORS, FUNCTIONS, SimConfig, report_table, run_monte_carlo

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERIC = 3

# upper edges of the low / mid weight buckets
BUCKET_EDGES = (0.33, 0.66)

_SCALE_ALIASES = {"iqr": "iqr", "mad": "mad", "diff": "diff_median", "gasser": "gasser"}


class _UsageError(Exception):
    pass


def weight_bucket(w):
    """``low`` for (0, 0.33], ``mid`` for (0.33, 0.66], ``high`` for (0.66, 1].

    A weight of exactly zero (possible with Tukey's loss) is ``low``.
    """
    if w <= BUCKET_EDGES[0]:
        return "low"
    if w <= BUCKET_EDGES[1]:
        return "mid"
    return "high"


def read_xy(path, xcol, ycol):
    """Read two numeric columns; returns ``(xs, ys, n_skipped)``."""
    path = Path(path)
    if not path.is_file():
        raise _UsageError(f"input file not found: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        cols = reader.fieldnames or []
        for c in (xcol, ycol):
            if c not in cols:
                raise _UsageError(f"column {c!r} not in {path} (have {cols})")
        xs, ys, skipped = [], [], 0
        for row in reader:
            try:
                x, y = float(row[xcol]), float(row[ycol])
            except (TypeError, ValueError):
                skipped += 1
                continue
            if not (math.isfinite(x) and math.isfinite(y)):
                skipped += 1
                continue
            xs.append(x)
            ys.append(y)
    return np.array(xs), np.array(ys), skipped


def _parse_lambda(s):
    if s == "auto":
        return "auto"
    try:
        v = float(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"lambda must be 'auto' or a number, got {s!r}") from None
    if not v >= 0:
        raise argparse.ArgumentTypeError("lambda must be non-negative")
    return v


def _csv_list(choices):
    def parse(s):
        items = [x.strip() for x in s.split(",") if x.strip()]
        bad = [x for x in items if x not in choices]
        if bad or not items:
            raise argparse.ArgumentTypeError(f"invalid choice(s) {bad or s!r}; choose from {sorted(choices)}")
        return tuple(items)

    return parse


def cmd_fit(args):
    xs, ys, skipped = read_xy(args.input, args.x, args.y)
    if skipped:
        print(f"warning: {skipped} row{'s' if skipped != 1 else ''} skipped", file=sys.stderr)
    family = args.loss.replace("-", "_")
    c = args.c if args.c is not None else (TUKEY_C if family == "tukey" else HUBER_C)
    try:
        config = FitConfig(
            loss=LossSpec(family, c), p=args.p, q=args.q, k_max=args.kmax,
            scale_method=_SCALE_ALIASES[args.scale], lam=args.lam,
        )
    except ValueError as exc:
        raise _UsageError(str(exc)) from exc
    if xs.size < config.p + 1:
        raise _UsageError(f"need at least p + 1 = {config.p + 1} valid rows, got {xs.size}")

    res = fit(xs, ys, config)

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(res.to_dict(), indent=2))
    plot = Path(args.plot) if args.plot else out.with_name(out.stem + "_plot.csv")
    with plot.open("w", newline="", encoding="utf-8") as fh:
        wr = csv.writer(fh)
        wr.writerow(["x", "y", "fitted", "residual", "weight", "weight_bucket"])
        for x, y, f, w in zip(res.x, res.y, res.fitted, res.weights):
            wr.writerow([repr(float(x)), repr(float(y)), repr(float(f)), repr(float(y - f)), repr(float(w)), weight_bucket(w)])

    print(f"sigma_hat\t{res.sigma_hat:.6g}")
    print(f"lambda_hat\t{res.lambda_hat:.6g}")
    print(f"edf\t{res.edf:.6g}")
    print(f"iterations\t{res.iterations}")
    if not res.converged:
        print("warning: IRWLS did not converge", file=sys.stderr)
    return EXIT_OK


def cmd_simulate(args):
    try:
        config = SimConfig(
            n=args.n, reps=args.reps, functions=args.functions, error_laws=args.laws,
            estimators=args.estimators, seed=args.seed, parallel_workers=args.workers,
        )
    except ValueError as exc:
        raise _UsageError(str(exc)) from exc
    print(f"seed\t{config.seed}")
    report = run_monte_carlo(config)
    table = report_table(report, args.format)
    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(report.to_json())
    if args.table:
        Path(args.table).write_text(table)
    else:
        sys.stdout.write(table)
    return EXIT_OK


def _default_workers():
    try:
        return max(1, int(os.environ.get("ROBUST_PSPLINE_WORKERS", "1")))
    except ValueError:
        return 1


def build_parser():
    parser = argparse.ArgumentParser(prog="robust-pspline", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    pf = sub.add_parser("fit", help="fit a penalized spline to two CSV columns")
    pf.add_argument("--input", required=True)
    pf.add_argument("--x", required=True, help="x column name")
    pf.add_argument("--y", required=True, help="y column name")
    pf.add_argument("--loss", default="huber", choices=["huber", "quadratic", "tukey", "smoothed-huber"])
    pf.add_argument("--c", type=float, default=None, help="tuning constant (default 1.345 / 4.685 for tukey)")
    pf.add_argument("--p", type=int, default=4, help="spline order")
    pf.add_argument("--q", type=int, default=2, help="penalty derivative order")
    pf.add_argument("--kmax", type=int, default=40)
    pf.add_argument("--scale", default="iqr", choices=sorted(_SCALE_ALIASES))
    pf.add_argument("--lambda", dest="lam", type=_parse_lambda, default="auto")
    pf.add_argument("--out", required=True, help="JSON result path")
    pf.add_argument("--plot", default=None, help="plot-data CSV path (default: <out>_plot.csv)")
    pf.set_defaults(func=cmd_fit)

    ps = sub.add_parser("simulate", help="Monte-Carlo MSE study")
    ps.add_argument("--functions", type=_csv_list(FUNCTIONS), default=tuple(FUNCTIONS))
    ps.add_argument("--laws", type=_csv_list(ERROR_LAWS + ("zero",)), default=ERROR_LAWS)
    ps.add_argument("--estimators", type=_csv_list(ESTIMATORS), default=tuple(ESTIMATORS))
    ps.add_argument("--n", type=int, default=100)
    ps.add_argument("--reps", type=int, default=200)
    ps.add_argument("--seed", type=int, default=0)
    ps.add_argument("--workers", type=int, default=_default_workers())
    ps.add_argument("--format", default="markdown", choices=["tsv", "markdown", "json"])
    ps.add_argument("--out", default=None, help="JSON report path")
    ps.add_argument("--table", default=None, help="write the table here instead of stdout")
    ps.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (RobustSplineError, ArithmeticError) as exc:
        print(f"fit failed: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
