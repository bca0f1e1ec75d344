"""Command-line interface.

Three subcommands:

  bench     -- Monte Carlo benchmark of the estimation methods on a chosen
               generator, emitting a bias/sd/RMSE table (tsv or json)
  estimate  -- per-method TDC estimates for a two-column CSV of observations
  curve     -- diagnostic curves (plug-in MSE, optimal-threshold map,
               inter-threshold correlation, calibration/map crossing) as TSV

Exit codes: 0 success, 1 runtime failure, 2 usage or data-validation error.
Randomized commands take --seed and default to the fixed seed 20210 so runs
are reproducible by default.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys

import numpy as np

from .copulas import DomainError, make_copula
from .empirical import pseudo_sample
from .harness import ExperimentSpec, emit_table, run_experiment, table_rows
from .selection import (
    METHOD_ALIASES,
    METHODS,
    calibrate_theta,
    DegenerateLikelihoodError,
    default_grid,
    estimate_method,
    optimal_threshold,
    optimal_threshold_inverse,
    select_simple_plugin,
    ThresholdRangeError,
)
from . import mse as _mse

DEFAULT_SEED = 20210

_GENERATORS = ("gumbel", "clayton", "survival-clayton", "survival-gumbel", "gaussian", "student")


class UsageError(Exception):
    pass


def _parse_methods(text: str) -> tuple[str, ...]:
    out = []
    for token in text.split(","):
        token = token.strip()
        if not token:
            continue
        name = METHOD_ALIASES.get(token, token)
        if name not in METHODS:
            raise UsageError(f"unknown method {token!r}; choose from "
                             f"{', '.join(METHODS)} or aliases 1-6")
        out.append(name)
    if not out:
        raise UsageError("no methods given")
    return tuple(out)


def _build_generator(args) -> object:
    params = {}
    if args.theta is not None:
        params["theta"] = args.theta
    if args.rho is not None:
        params["rho"] = args.rho
    if args.nu is not None:
        params["nu"] = args.nu
    try:
        return make_copula(args.generator, **params)
    except KeyError as exc:
        raise UsageError(f"generator {args.generator!r} needs parameter {exc}") from exc
    except DomainError as exc:
        raise UsageError(str(exc)) from exc


def read_pairs_csv(path: str, col_x="0", col_y="1"):
    """Read two numeric columns from a CSV file (optional header row).

    Columns are selected by zero-based index or, when a header is present,
    by name.  Malformed values are reported with their file line number.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        rows = [row for row in reader if row and any(cell.strip() for cell in row)]
    if not rows:
        raise UsageError(f"{path}: empty file")

    def is_number(cell):
        try:
            float(cell)
            return True
        except ValueError:
            return False

    header = None
    start = 0
    if not all(is_number(c) for c in rows[0]):
        header = [c.strip() for c in rows[0]]
        start = 1

    def resolve(col):
        col = str(col)
        if col.lstrip("-").isdigit():
            return int(col)
        if header is None:
            raise UsageError(f"column {col!r} requested by name but file has no header")
        if col not in header:
            raise UsageError(f"column {col!r} not found; header is {header}")
        return header.index(col)

    ix, iy = resolve(col_x), resolve(col_y)
    xs, ys = [], []
    for lineno, row in enumerate(rows[start:], start=start + 1):
        if max(ix, iy) >= len(row):
            raise UsageError(f"{path}: line {lineno}: expected at least "
                             f"{max(ix, iy) + 1} columns, got {len(row)}")
        try:
            x = float(row[ix])
            y = float(row[iy])
        except ValueError as exc:
            raise UsageError(f"{path}: line {lineno}: {exc}") from exc
        if not (math.isfinite(x) and math.isfinite(y)):
            raise UsageError(f"{path}: line {lineno}: non-finite value")
        xs.append(x)
        ys.append(y)
    return np.array(xs), np.array(ys)


def write_pairs_csv(path: str, x, y, header=("x", "y")):
    """Write two aligned columns as CSV; the reader round-trips this exactly."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        if header:
            writer.writerow(header)
        for xi, yi in zip(np.asarray(x), np.asarray(y)):
            writer.writerow([repr(float(xi)), repr(float(yi))])


def _write_out(text: str, out: str | None):
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)


def _cmd_bench(args) -> int:
    methods = _parse_methods(args.methods)
    generator = _build_generator(args)
    sizes = [int(tok) for tok in str(args.n).split(",") if tok.strip()]
    results = []
    for n in sizes:
        spec = ExperimentSpec(
            generator=generator,
            n=n,
            seed=args.seed,
            reps=args.reps,
            tail=args.tail,
            methods=methods,
            family=args.family,
            label=args.label or args.generator,
        )
        results.append(run_experiment(spec, workers=args.workers))
    _write_out(emit_table(table_rows(results), args.format), args.out)
    return 0


def _cmd_estimate(args) -> int:
    methods = _parse_methods(args.methods)
    x, y = read_pairs_csv(args.input, args.col_x, args.col_y)
    if args.log_returns:
        if np.any(x <= 0) or np.any(y <= 0):
            raise UsageError("--log-returns requires strictly positive levels")
        x = np.diff(np.log(x))
        y = np.diff(np.log(y))
    selection_methods = {"plateau", "plugin", "twostep", "avg_minavg", "avg_joint"}
    if x.size < 50 and (selection_methods & set(methods)):
        raise UsageError(f"need at least 50 observations for threshold selection, got {x.size}")
    if x.size < 2:
        raise UsageError("need at least 2 observations")
    sample = pseudo_sample(x, y)
    rho = float(np.corrcoef(x, y)[0, 1])
    tails = ["lower", "upper"] if args.tail == "both" else [args.tail]
    lines = ["method\t" + "\t".join(tails) + "\trho"]
    for m in methods:
        cells = [m]
        for tail in tails:
            res = estimate_method(sample, tail, m, family=args.family)
            cells.append(f"{res.estimate:.6f}")
        cells.append(f"{rho:.6f}")
        lines.append("\t".join(cells))
    _write_out("\n".join(lines) + "\n", args.out)
    return 0


def _sample_for_curve(args):
    if args.input:
        x, y = read_pairs_csv(args.input, args.col_x, args.col_y)
    else:
        generator = _build_generator(args)
        rng = np.random.default_rng(args.seed)
        x, y = generator.sample(args.n, rng)
    return pseudo_sample(x, y)


def _cmd_curve(args) -> int:
    family = args.family or ("clayton" if args.tail == "lower" else "gumbel")
    if args.kind == "phi":
        if family == "clayton":
            thetas = np.geomspace(0.05, 20.0, args.points)
        else:
            thetas = 1.0 + np.geomspace(0.01, 19.0, args.points)
        lines = ["theta\tthreshold"]
        for t in thetas:
            frac = optimal_threshold(family, float(t), args.n, args.tail, m=args.m)
            lines.append(f"{t:.8g}\t{frac:.8g}")
    elif args.kind == "rho":
        generator = _build_generator(args)
        i = args.i
        lines = ["j\tcorrelation"]
        for j in range(1, args.n):
            if j % args.stride and j != i:
                continue
            rho = _mse.threshold_correlation(generator, args.n, i, j)
            lines.append(f"{j}\t{rho:.8g}")
    elif args.kind == "mse":
        sample = _sample_for_curve(args)
        res = select_simple_plugin(sample, args.tail, family)
        ranks = res.diagnostics["ranks"]
        curve = res.diagnostics["mse_curve"]
        thetas = res.diagnostics["theta_curve"]
        lines = ["rank\tlog_mse\ttheta"]
        for r, c, t in zip(ranks, curve, thetas):
            if np.isfinite(c):
                lines.append(f"{int(r)}\t{math.log(c):.8g}\t{t:.8g}")
    else:  # crossing
        sample = _sample_for_curve(args)
        n = sample.n
        lines = ["rank\tcalibrated_theta\tmap_theta"]
        for r in default_grid(n, args.tail)[:: args.stride]:
            try:
                theta = calibrate_theta(sample, int(r), args.tail, family)
            except DegenerateLikelihoodError:
                continue
            try:
                mapped = optimal_threshold_inverse(family, r / n, n, args.tail)
            except ThresholdRangeError:
                continue
            lines.append(f"{int(r)}\t{theta:.8g}\t{mapped:.8g}")
    _write_out("\n".join(lines) + "\n", args.out)
    return 0


def _add_generator_flags(p):
    p.add_argument("--generator", choices=_GENERATORS, help="data-generating copula")
    p.add_argument("--theta", type=float, help="Clayton/Gumbel parameter")
    p.add_argument("--rho", type=float, help="Gaussian/Student correlation")
    p.add_argument("--nu", type=float, help="Student degrees of freedom")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="taildep",
        description="Tail dependence coefficient estimation and benchmarking.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    b = sub.add_parser("bench", help="Monte Carlo benchmark of estimation methods")
    _add_generator_flags(b)
    b.add_argument("--n", default="500,1000,2000",
                   help="comma-separated sample sizes (default tables' sizes)")
    b.add_argument("--reps", type=int, default=100, help="replications per size")
    b.add_argument("--tail", choices=("lower", "upper"), default="upper")
    b.add_argument("--methods", default="1,2,3,4,5,6")
    b.add_argument("--family", choices=("clayton", "gumbel"),
                   help="plug-in family override (default: by tail)")
    b.add_argument("--seed", type=int, default=DEFAULT_SEED)
    b.add_argument("--workers", type=int, default=1)
    b.add_argument("--label", help="dataset label for the table")
    b.add_argument("--format", choices=("tsv", "json"), default="tsv")
    b.add_argument("--out", help="output path (default stdout)")
    b.set_defaults(func=_cmd_bench)

    e = sub.add_parser("estimate", help="estimate TDCs from a two-column CSV")
    e.add_argument("--input", required=True, help="CSV path")
    e.add_argument("--col-x", default="0", help="column index or name (default 0)")
    e.add_argument("--col-y", default="1", help="column index or name (default 1)")
    e.add_argument("--tail", choices=("lower", "upper", "both"), default="both")
    e.add_argument("--methods", default="1,2,3,4,5,6")
    e.add_argument("--family", choices=("clayton", "gumbel"),
                   help="plug-in family override (default: by tail)")
    e.add_argument("--log-returns", action="store_true",
                   help="difference the logs of each column first")
    e.add_argument("--out", help="output path (default stdout)")
    e.set_defaults(func=_cmd_estimate)

    c = sub.add_parser("curve", help="export diagnostic curves as TSV")
    c.add_argument("--kind", choices=("mse", "phi", "rho", "crossing"), required=True)
    _add_generator_flags(c)
    c.add_argument("--input", help="CSV sample for mse/crossing curves")
    c.add_argument("--col-x", default="0")
    c.add_argument("--col-y", default="1")
    c.add_argument("--n", type=int, default=1000)
    c.add_argument("--tail", choices=("lower", "upper"), default="lower")
    c.add_argument("--family", choices=("clayton", "gumbel"))
    c.add_argument("--m", type=int, default=1, help="window length for phi curves")
    c.add_argument("--i", type=int, default=1, help="pivot rank for rho curves")
    c.add_argument("--points", type=int, default=40, help="theta grid size for phi curves")
    c.add_argument("--stride", type=int, default=10, help="rank stride for rho/crossing")
    c.add_argument("--seed", type=int, default=DEFAULT_SEED)
    c.add_argument("--out", help="output path (default stdout)")
    c.set_defaults(func=_cmd_curve)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failure
        print(f"failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
