"""Command-line reports: ``freevis <subcommand> ...``.

Exit status: 0 on success, 1 when a self-check finds a mismatch, 2 on bad
arguments, 3 when a computation would exceed the memory budget.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from fractions import Fraction
from typing import Any, Sequence, TextIO

from . import __version__
from .densities import (ENUMERATION_LIMIT, expected_gcd_series, is_test_element_rank2,
                        spherical_series, test_element_series, visible_series)
from .errors import BUDGET_ENV, DEFAULT_BUDGET, ResourceBudgetError
from .lattice import (INFINITY, ZETA2, GcdClassSet, count_in_ball, gcd_class_set_density,
                      zeta)
from .sampler import AbelianPredicate, mc_annular_estimate, mc_sphere_estimate
from .spectrum import build_count_table, histogram_by_enumeration, llt_sup_error, second_moment, tail_mass

SUBCOMMANDS = ("lattice-density", "zeta", "group-series", "test-elements", "llt-check",
               "expected-gcd", "sample", "oracle-check")


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------- formatting


def decimal(x: Any) -> str:
    if x is None:
        return ""
    return f"{float(x):.12g}"


def exact(x: Any) -> str:
    if x is None:
        return ""
    return str(Fraction(x)) if isinstance(x, (Fraction, int)) else decimal(x)


def parse_class_set(text: str) -> GcdClassSet:
    """``"1,2"``, ``"2,3,inf"``, ``"all"``, ``">=2"`` or ``">=2,inf"``."""
    parts = [p.strip() for p in text.split(",") if p.strip()]
    if not parts:
        raise ConfigError(f"empty gcd-class set {text!r}")
    infinity = "inf" in parts
    parts = [p for p in parts if p != "inf"]
    if parts == ["all"]:
        return GcdClassSet.all_finite() if not infinity else GcdClassSet.all_except(infinity=True)
    if len(parts) == 1 and parts[0].startswith(">="):
        try:
            return GcdClassSet.at_least(int(parts[0][2:]), infinity=infinity)
        except ValueError:
            raise ConfigError(f"bad gcd-class set {text!r}") from None
    try:
        ts = [int(p) for p in parts]
    except ValueError:
        raise ConfigError(f"bad gcd-class set {text!r}") from None
    if any(t < 1 for t in ts):
        raise ConfigError("gcd classes must be positive")
    return GcdClassSet.of(*ts, infinity=infinity)


class Report:
    """Collects rows and renders them as csv, json or plot-data."""

    def __init__(self, config: dict, columns: list[str], plot: tuple[str, str] | None = None):
        self.config = config
        self.columns = columns
        self.rows: list[dict] = []
        self.plot = plot
        self.extra: dict = {}
        self.reference: float | None = None
        self.failed = False

    def add(self, **row: Any) -> None:
        self.rows.append(row)

    def render(self, fmt: str, out: TextIO) -> None:
        if fmt == "json":
            payload = {"config": self.config, "rows": self.rows, **self.extra}
            out.write(json.dumps(payload, indent=2, sort_keys=False) + "\n")
            return
        out.write("# config: " + json.dumps(self.config, sort_keys=True) + "\n")
        if fmt == "csv":
            writer = csv.DictWriter(out, fieldnames=self.columns, lineterminator="\n", extrasaction="ignore")
            writer.writeheader()
            for row in self.rows:
                writer.writerow({c: _cell(row.get(c)) for c in self.columns})
        elif fmt == "plot-data":
            if self.plot is None:
                raise ConfigError("this subcommand has no plot-data layout")
            x, y = self.plot
            out.write(f"# {x} {y}\n")
            for row in self.rows:
                if row.get(y) is not None:
                    out.write(f"{_cell(row[x])} {_cell(row[y])}\n")
        else:
            raise ConfigError(f"unknown format {fmt!r}")


def _cell(v: Any) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return decimal(v)
    return str(v)


def gnuplot_script(data_path: str, x: str, y: str, title: str, reference: float | None) -> str:
    lines = [
        "set terminal pngcairo size 900,600",
        f"set output '{os.path.splitext(data_path)[0]}.png'",
        f"set xlabel '{x}'",
        f"set ylabel '{y}'",
        f"set title '{title}'",
        "set key top right",
    ]
    plot = f"plot '{data_path}' using 1:2 with linespoints title '{y}'"
    if reference is not None:
        plot += f", {reference!r} with lines dashtype 2 title 'limit'"
    lines.append(plot)
    return "\n".join(lines) + "\n"


def _progress(quiet: bool, label: str):
    if quiet:
        return None

    def report(n: int) -> None:
        if n % 25 == 0:
            print(f"{label}: n={n}", file=sys.stderr, flush=True)

    return report


# ---------------------------------------------------------------- subcommands


def cmd_lattice_density(args: argparse.Namespace) -> Report:
    if args.set is not None:
        classes = parse_class_set(args.set)
    else:
        if args.t < 1:
            raise ConfigError("--t must be positive")
        classes = GcdClassSet.of(args.t)
    if args.r < 1:
        raise ConfigError("--r must be at least 1")
    if args.steps < 1:
        raise ConfigError("--steps must be positive")
    p = INFINITY if args.p in ("inf", "infinity") else float(args.p)
    if p < 1:
        raise ConfigError("--p must be in [1, inf]")
    theory = gcd_class_set_density(args.k, classes)
    config = _config(args, set=str(classes), p=args.p)
    report = Report(config, ["r", "hits", "total", "density_exact", "density", "theoretical", "abs_error"],
                    plot=("r", "density"))
    radii = sorted({max(1, round(args.r * i / args.steps)) for i in range(1, args.steps + 1)})
    for r in radii:
        hits, total = count_in_ball(args.k, p, r, classes, method=args.method, budget=args.budget)
        dens = Fraction(hits, total)
        report.add(r=r, hits=hits, total=total, density_exact=str(dens), density=float(dens),
                   theoretical=theory, abs_error=abs(float(dens) - theory))
    report.reference = theory
    return report


def cmd_zeta(args: argparse.Namespace) -> Report:
    if args.k < 2:
        raise ConfigError("--k must be at least 2")
    if args.eps <= 0:
        raise ConfigError("--eps must be positive")
    report = Report(_config(args), ["k", "eps", "zeta", "closed_form"])
    report.add(k=args.k, eps=args.eps, zeta=zeta(args.k, args.eps),
               closed_form=ZETA2 if args.k == 2 else None)
    return report


def _series_report(args: argparse.Namespace, series, target: str) -> Report:
    config = _config(args, target=target)
    report = Report(config, ["n", "s_exact", "s", "Q_exact", "Q", "ball_exact", "ball", "limit", "abs_error"],
                    plot=("n", "Q"))
    for row in series.rows():
        q = row["Q"]
        report.add(n=row["n"], s_exact=exact(row["s"]), s=float(row["s"]),
                   Q_exact=exact(q), Q=None if q is None else float(q),
                   ball_exact=exact(row["ball"]), ball=float(row["ball"]),
                   limit=series.limit,
                   abs_error=None if q is None or series.limit is None else abs(float(q) - series.limit))
    report.reference = series.limit
    return report


def cmd_group_series(args: argparse.Namespace) -> Report:
    _check_n_max(args)
    target = args.set
    if target == "test-elements":
        if args.k != 2:
            raise ConfigError("test elements are only classified for k = 2")
        table = build_count_table(2, args.n_max, budget=args.budget, progress=_progress(args.quiet, "count table"))
        series = test_element_series(args.n_max, "hybrid", table=table)
        return _series_report(args, series, target)
    table = build_count_table(args.k, args.n_max, budget=args.budget, progress=_progress(args.quiet, "count table"))
    if target == "visible":
        series = visible_series(table, 1)
    elif target == "t-visible":
        series = visible_series(table, args.t)
        target = f"{args.t}-visible"
    else:
        classes = parse_class_set(target)
        series = spherical_series(table, classes, limit=gcd_class_set_density(args.k, classes))
    return _series_report(args, series, target)


def cmd_test_elements(args: argparse.Namespace) -> Report:
    _check_n_max(args)
    args.k = 2
    if args.mode == "exact" and args.n_max > ENUMERATION_LIMIT:
        raise ResourceBudgetError(f"exact mode enumerates spheres; --n-max must be <= {ENUMERATION_LIMIT}")
    table = None
    if args.mode == "hybrid":
        table = build_count_table(2, args.n_max, budget=args.budget, progress=_progress(args.quiet, "count table"))
    series = test_element_series(args.n_max, args.mode, table=table, progress=_progress(args.quiet, "enumerate"))
    return _series_report(args, series, f"test-elements ({args.mode})")


def cmd_llt_check(args: argparse.Namespace) -> Report:
    ns = sorted(set(args.n))
    if not ns or ns[0] < 2:
        raise ConfigError("--n values must be at least 2")
    sigma2 = args.sigma2 if args.sigma2 is not None else 1.0 / (args.k - 1)
    if sigma2 <= 0:
        raise ConfigError("--sigma2 must be positive")
    table = build_count_table(args.k, ns[-1], budget=args.budget, progress=_progress(args.quiet, "count table"))
    report = Report(_config(args, sigma2=sigma2),
                    ["n", "sup_error", "second_moment_exact", "moment_ratio", "tail_c", "tail_mass"],
                    plot=("n", "sup_error"))
    for n in ns:
        m2 = second_moment(table, n)
        report.add(n=n, sup_error=llt_sup_error(table, n, sigma2), second_moment_exact=exact(m2),
                   moment_ratio=float(m2 / n), tail_c=args.c, tail_mass=float(tail_mass(table, n, args.c)))
    report.reference = 0.0
    return report


def cmd_expected_gcd(args: argparse.Namespace) -> Report:
    _check_n_max(args)
    table = build_count_table(args.k, args.n_max, budget=args.budget, progress=_progress(args.quiet, "count table"))
    report = Report(_config(args), ["n", "T_prime_exact", "T_prime", "T_exact", "T"], plot=("n", "T"))
    for n, tp, t in expected_gcd_series(table):
        report.add(n=n, T_prime_exact=exact(tp), T_prime=float(tp), T_exact=exact(t), T=float(t))
    report.reference = None
    return report


def _named_predicate(name: str):
    if name == "visible":
        return AbelianPredicate(GcdClassSet.of(1), "visible")
    if name.startswith("t-visible:"):
        t = int(name.split(":", 1)[1])
        if t < 1:
            raise ConfigError("t must be positive")
        return AbelianPredicate(GcdClassSet.of(t), name)
    if name == "all":
        return AbelianPredicate(GcdClassSet.all_except(infinity=True), "all")
    if name == "test-elements":
        return is_test_element_predicate
    if name.startswith("set:"):
        return AbelianPredicate(parse_class_set(name[4:]), name)
    raise ConfigError(f"unknown predicate {name!r}")


def is_test_element_predicate(w) -> bool:
    return is_test_element_rank2(w).is_test


is_test_element_predicate.name = "test-elements"  # type: ignore[attr-defined]


def cmd_sample(args: argparse.Namespace) -> Report:
    try:
        predicate = _named_predicate(args.predicate)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if args.predicate == "test-elements" and args.k != 2:
        raise ConfigError("test elements are only classified for k = 2")
    if args.samples < 2:
        raise ConfigError("--samples must be at least 2")
    if args.mode == "annular":
        if args.n < 2:
            raise ConfigError("--n must be at least 2 for the annular estimate")
        if args.samples % 2:
            raise ConfigError("--samples must be even for the annular estimate")
        est = mc_annular_estimate(args.k, args.n, predicate, args.samples, seed=args.seed,
                                  workers=args.threads, name=args.predicate)
    else:
        if args.n < 1:
            raise ConfigError("--n must be positive")
        est = mc_sphere_estimate(args.k, args.n, predicate, args.samples, seed=args.seed,
                                 workers=args.threads, name=args.predicate)
    report = Report(_config(args), ["n", "samples", "estimate", "se", "seed", "predicate"])
    d = est.to_json()
    report.add(**{c: d[c] for c in ("n", "samples", "estimate", "se", "seed", "predicate")})
    report.extra = {"result": {c: d[c] for c in ("n", "samples", "estimate", "se", "seed", "predicate")}}
    return report


def cmd_oracle_check(args: argparse.Namespace) -> Report:
    _check_n_max(args)
    if args.n_max > ENUMERATION_LIMIT:
        raise ResourceBudgetError(f"enumeration limited to --n-max <= {ENUMERATION_LIMIT}")
    table = build_count_table(args.k, args.n_max, budget=args.budget)
    report = Report(_config(args), ["n", "cells_checked", "mismatches", "ok"])
    for n in range(1, args.n_max + 1):
        hist = histogram_by_enumeration(args.k, n)
        dp = dict(table.support(n))
        keys = set(hist) | set(dp)
        bad = sum(1 for z in keys if hist.get(z, 0) != dp.get(z, 0))
        report.add(n=n, cells_checked=len(keys), mismatches=bad, ok=bad == 0)
        if not args.quiet:
            print(f"oracle-check: n={n} mismatches={bad}", file=sys.stderr, flush=True)
    report.failed = any(not r["ok"] for r in report.rows)
    return report


COMMANDS = {
    "lattice-density": cmd_lattice_density,
    "zeta": cmd_zeta,
    "group-series": cmd_group_series,
    "test-elements": cmd_test_elements,
    "llt-check": cmd_llt_check,
    "expected-gcd": cmd_expected_gcd,
    "sample": cmd_sample,
    "oracle-check": cmd_oracle_check,
}


def _check_n_max(args: argparse.Namespace) -> None:
    if args.n_max < 1:
        raise ConfigError("--n-max must be at least 1")


def _config(args: argparse.Namespace, **extra: Any) -> dict:
    skip = {"func", "output", "plot_script", "quiet"}
    cfg = {k.replace("_", "-"): v for k, v in sorted(vars(args).items()) if k not in skip}
    cfg.update(extra)
    cfg["version"] = __version__
    return cfg


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("csv", "json", "plot-data"), default="csv")
    common.add_argument("--output", "-o", help="write the report here instead of stdout")
    common.add_argument("--plot-script", help="also write a gnuplot script for the plot-data output")
    common.add_argument("--threads", type=int, default=os.cpu_count() or 1, help="worker cap")
    common.add_argument("--budget", type=int, default=None,
                        help=f"memory budget in array cells (default ${BUDGET_ENV} or {DEFAULT_BUDGET})")
    common.add_argument("--quiet", "-q", action="store_true", help="suppress progress on stderr")

    parser = argparse.ArgumentParser(prog="freevis", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("lattice-density", parents=[common], help="visible point densities in Z^k")
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--t", type=int, default=1)
    p.add_argument("--set", help="gcd-class set, e.g. '1,2', '>=2', 'all' (overrides --t)")
    p.add_argument("--r", type=float, default=1000)
    p.add_argument("--steps", type=int, default=10)
    p.add_argument("--p", default="inf", help="norm: 1, 2, ..., or inf")
    p.add_argument("--method", choices=("auto", "scan", "mobius"), default="auto")

    p = sub.add_parser("zeta", parents=[common], help="Riemann zeta at an integer")
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--eps", type=float, default=1e-12)

    p = sub.add_parser("group-series", parents=[common], help="exact spherical/annular/ball series")
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--set", default="visible",
                   help="'visible', 't-visible' (with --t), 'test-elements' or a gcd-class set like '1,2'")
    p.add_argument("--t", type=int, default=1)
    p.add_argument("--n-max", type=int, default=200)

    p = sub.add_parser("test-elements", parents=[common], help="test-element density series in F_2")
    p.add_argument("--n-max", type=int, default=200)
    p.add_argument("--mode", choices=("hybrid", "exact"), default="hybrid")

    p = sub.add_parser("llt-check", parents=[common], help="local limit theorem comparison")
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--n", type=int, nargs="+", default=[40, 80, 160])
    p.add_argument("--sigma2", type=float, default=None)
    p.add_argument("--c", type=float, default=3.0, help="radius for the tail-mass column")

    p = sub.add_parser("expected-gcd", parents=[common], help="mean coordinate gcd T_n")
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--n-max", type=int, default=100)

    p = sub.add_parser("sample", parents=[common], help="Monte Carlo estimates")
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--predicate", default="visible",
                   help="visible, t-visible:T, test-elements, all, or set:SPEC")
    p.add_argument("--mode", choices=("annular", "sphere"), default="annular")

    p = sub.add_parser("oracle-check", parents=[common], help="DP versus brute-force enumeration")
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--n-max", type=int, default=10)
    return parser


def run(argv: Sequence[str] | None = None, stdout: TextIO | None = None) -> int:
    stdout = sys.stdout if stdout is None else stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if getattr(args, "k", 2) < 2:
        print("error: --k must be at least 2", file=sys.stderr)
        return 2
    if args.threads < 1:
        print("error: --threads must be positive", file=sys.stderr)
        return 2
    try:
        report = COMMANDS[args.command](args)
        buf = io.StringIO()
        report.render(args.format, buf)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ResourceBudgetError as exc:
        print(f"resource budget exceeded: {exc}", file=sys.stderr)
        return 3
    text = buf.getvalue()
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        stdout.write(text)
    if args.plot_script:
        if args.format != "plot-data" or not args.output or report.plot is None:
            print("error: --plot-script needs --format plot-data and --output", file=sys.stderr)
            return 2
        x, y = report.plot
        with open(args.plot_script, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(gnuplot_script(args.output, x, y, args.command, report.reference))
    return 1 if report.failed else 0


def main() -> None:
    sys.exit(run())
