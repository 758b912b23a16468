"""Command-line interface: ``ffgp {sweep,finite,scan,scaling,bounds}``.

Every subcommand writes CSV (header plus one line per record) to ``--output``
or standard output.  Reals are printed with 17 significant digits.  Options
may also come from a ``key = value`` file given with ``--config``; command
line flags take precedence.  Failures exit with status 2 and a single line
``ffgp: error: <kind>: <message>`` on standard error.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import logging
import math
import sys
from typing import Iterable, Sequence

import numpy as np

from . import __version__
from .analysis import Quantity, ThermoEvaluator, critical_scan, five_point, scaling_fit
from .concurrence import concurrence_closed
from .correlators import METHODS, CorrelationSet, phase_from_p3
from .errors import FitError, InputError, IntegrandError, UnphysicalInputError
from .finite import (
    ORACLE_MAX_SITES,
    check_bounds,
    correlations_finite,
    diagonalize,
    many_body_oracle,
    site_gp,
)
from .model import ModelParams, build_couplings, neighbor
from .quadrature import DEFAULT_POINTS, QuadratureSpec

SWEEP_COLUMNS = (
    "d", "gamma", "lambda", "p3", "p11", "p22", "p33", "c_one", "c_two", "c",
    "gamma_g", "d1_cII", "d2_cII", "d1_gp", "d2_gp", "quad_error",
)


class CliError(Exception):
    def __init__(self, kind: str, message: str):
        super().__init__(message)
        self.kind = kind


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # one line instead of usage + message
        raise CliError("usage", message)


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def _csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buffer.getvalue()


def _emit(text: str, path: str) -> None:
    if path == "-":
        sys.stdout.write(text)
        return
    try:
        with open(path, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
    except OSError as exc:
        raise CliError("output", f"cannot write {path}: {exc.strerror}") from exc


def _summary_path(args) -> str | None:
    if args.summary:
        return args.summary
    return None if args.output == "-" else args.output + ".summary.txt"


def _emit_summary(args, text: str) -> None:
    path = _summary_path(args)
    if path is None:
        sys.stderr.write(text)
    else:
        _emit(text, path)


# ----------------------------------------------------------------------------
# validation helpers


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise CliError("invalid-config", message)


def _lambda_grid(args) -> np.ndarray:
    _require(math.isfinite(args.lambda_start) and math.isfinite(args.lambda_end), "lambda range must be finite")
    _require(args.lambda_end >= args.lambda_start, "lambda-end must not be below lambda-start")
    _require(args.steps >= 1, "steps must be at least 1")
    _require(args.steps == 1 or args.lambda_end > args.lambda_start, "an empty lambda range needs steps = 1")
    return np.linspace(args.lambda_start, args.lambda_end, args.steps)


def _model(args, lam: float = 0.0) -> ModelParams:
    try:
        return ModelParams(args.dim, args.gamma, lam)
    except InputError as exc:
        raise CliError("invalid-config", str(exc)) from exc


def _quadrature(args) -> QuadratureSpec | None:
    if args.method != "grid":
        return None
    points = args.grid if args.grid is not None else DEFAULT_POINTS[args.dim]
    try:
        spec = QuadratureSpec(points, args.refine, args.tol)
        spec.descending_sizes()
    except InputError as exc:
        raise CliError("invalid-config", str(exc)) from exc
    return spec


def _quantities(name: str) -> list[Quantity]:
    return list(Quantity) if name == "both" else [Quantity(name)]


# ----------------------------------------------------------------------------
# subcommands


def cmd_sweep(args) -> None:
    _model(args)
    grid = _lambda_grid(args)
    _require(args.h > 0, "h must be positive")
    spec = _quadrature(args)
    evaluator = ThermoEvaluator(args.dim, args.gamma, args.method, spec)
    c_two = evaluator.function(Quantity.C_TWO)
    phase = evaluator.function(Quantity.PHASE)
    rows = []
    for lam in grid:
        lam = float(lam)
        (p3, p11, p22), error, _ = evaluator.averages(lam)
        p3, p11, p22 = float(p3), float(p11), float(p22)
        p33 = p3 * p3 - p11 * p22
        corr = concurrence_closed(CorrelationSet(p03=p3, p30=p3, p11=p11, p22=p22, p33=p33))
        rows.append((
            args.dim, args.gamma, lam, p3, p11, p22, p33, corr.c_one, corr.c_two, corr.c,
            phase_from_p3(p3),
            five_point(c_two, lam, 1, args.h), five_point(c_two, lam, 2, args.h),
            five_point(phase, lam, 1, args.h), five_point(phase, lam, 2, args.h),
            float(np.max(error)),
        ))
    _emit(_csv_text(SWEEP_COLUMNS, rows), args.output)


FINITE_COLUMNS = (
    "d", "n", "gamma", "lambda", "site", "direction", "neighbor",
    "p30", "p03", "p11", "p22", "p33", "c_one", "c_two", "c",
    "gp_site", "gp_neighbor", "gp_total", "ground_energy", "degenerate",
)
BOUND_COLUMNS = ("c1_bound", "c2_bound", "c1_ok", "c2_ok")
ORACLE_COLUMNS = (
    "oracle_energy", "oracle_p30", "oracle_p03", "oracle_p11", "oracle_p22", "oracle_p33",
    "oracle_p12", "oracle_p21", "oracle_parity", "oracle_degenerate", "max_abs_diff",
)


def _couplings(args, lam: float, gamma: float):
    try:
        return build_couplings(args.dim, args.lattice_n, gamma, lam)
    except InputError as exc:
        raise CliError("invalid-config", str(exc)) from exc


def cmd_finite(args) -> None:
    _model(args, args.lam)
    m = _couplings(args, args.lam, args.gamma)
    total = m.total_sites
    sites = range(total) if args.site is None else [args.site]
    directions = range(args.dim) if args.direction is None else [args.direction]
    _require(all(0 <= i < total for i in sites), f"site must lie in 0..{total - 1}")
    _require(all(0 <= a < args.dim for a in directions), f"direction must lie in 0..{args.dim - 1}")
    if args.oracle:
        _require(total <= ORACLE_MAX_SITES, f"--oracle supports at most {ORACLE_MAX_SITES} sites, got {total}")
    spectrum = diagonalize(m)
    phases = site_gp(spectrum)
    oracle = many_body_oracle(m, parity=spectrum.vacuum_parity) if args.oracle else None
    header = FINITE_COLUMNS + (BOUND_COLUMNS if args.bounds else ()) + (ORACLE_COLUMNS if args.oracle else ())
    rows = []
    for i in sites:
        for a in directions:
            j = neighbor(m.site_shape, i, a)
            p = correlations_finite(spectrum, i, a)
            conc = concurrence_closed(p)
            row = [
                args.dim, args.lattice_n, args.gamma, args.lam, i, a, j,
                p.p30, p.p03, p.p11, p.p22, p.p33, conc.c_one, conc.c_two, conc.c,
                phases.per_site[i], phases.per_site[j], phases.total, spectrum.ground_energy,
                spectrum.degenerate,
            ]
            if args.bounds:
                b = check_bounds(spectrum, i, a)
                row += [b.c1_bound, b.c2_bound, b.satisfied[0], b.satisfied[1]]
            if oracle is not None:
                ref = oracle.bonds[(i, a)]
                diff = max(
                    abs(ref.p30 - p.p30), abs(ref.p03 - p.p03), abs(ref.p11 - p.p11),
                    abs(ref.p22 - p.p22), abs(ref.p33 - p.p33), abs(ref.p12), abs(ref.p21),
                    abs(oracle.ground_energy - spectrum.ground_energy),
                )
                row += [
                    oracle.ground_energy, ref.p30, ref.p03, ref.p11, ref.p22, ref.p33, ref.p12, ref.p21,
                    oracle.parity, oracle.degenerate, diff,
                ]
            rows.append(row)
    _emit(_csv_text(header, rows), args.output)


def cmd_bounds(args) -> None:
    _require(args.samples >= 1, "samples must be at least 1")
    _model(args)
    rng = np.random.default_rng(args.seed)
    rows = []
    for sample in range(args.samples):
        gamma = float(rng.uniform(-2.0, 2.0))
        lam = float(rng.uniform(0.0, 4.0))
        spectrum = diagonalize(_couplings(args, lam, gamma))
        margin_one = margin_two = math.inf
        ok_one = ok_two = True
        for i in range(spectrum.total_sites):
            for a in range(args.dim):
                b = check_bounds(spectrum, i, a)
                margin_one = min(margin_one, b.c1_bound - b.c1_raw)
                margin_two = min(margin_two, b.c2_bound - b.c2_raw)
                ok_one &= b.satisfied[0]
                ok_two &= b.satisfied[1]
        rows.append((sample, args.dim, args.lattice_n, gamma, lam, margin_one, margin_two, ok_one, ok_two))
    header = ("sample", "d", "n", "gamma", "lambda", "c1_margin", "c2_margin", "c1_ok", "c2_ok")
    _emit(_csv_text(header, rows), args.output)


def cmd_scan(args) -> None:
    _model(args)
    grid = _lambda_grid(args)
    evaluator = ThermoEvaluator(args.dim, args.gamma)
    rows, lines = [], []
    for quantity in _quantities(args.quantity):
        reports = critical_scan(
            args.dim, args.gamma, grid, quantity,
            extra_candidates=args.candidates or (), h_max=args.h, evaluator=evaluator,
        )
        for report in reports:
            for side, eps, first, second in report.growth_factors:
                rows.append((quantity.value, report.lambda_star, report.classification.value, side, eps, first, second))
            note = f" ({len(report.failures)} failed samples)" if report.failures else ""
            lines.append(f"{quantity.value} lambda={_fmt(report.lambda_star)} {report.classification.value}{note}")
    header = ("quantity", "lambda_star", "classification", "side", "epsilon", "first_derivative", "second_derivative")
    _emit(_csv_text(header, rows), args.output)
    singular = sorted({r[1] for r in rows if r[2] != "regular"})
    lines.append("singular points: " + ", ".join(_fmt(x) for x in singular))
    _emit_summary(args, "\n".join(lines) + "\n")


def cmd_scaling(args) -> None:
    _model(args)
    lambda_c = float(args.dim) if args.lambda_c is None else args.lambda_c
    _require(0 < args.eps_min < args.eps_max, "need 0 < eps-min < eps-max")
    _require(args.samples >= 3, "samples must be at least 3")
    epsilons = np.logspace(math.log10(args.eps_max), math.log10(args.eps_min), args.samples)
    evaluator = ThermoEvaluator(args.dim, args.gamma)
    rows, lines = [], []
    for quantity in _quantities(args.quantity):
        try:
            fit = scaling_fit(quantity, lambda_c, epsilons, side=args.side, evaluator=evaluator, h_max=args.h)
        except FitError as exc:
            raise CliError("fit", str(exc)) from exc
        for x, y in fit.samples:
            rows.append((quantity.value, args.side, x, y))
        lines += [
            f"[{quantity.value}]",
            f"lambda_c = {_fmt(lambda_c)}",
            f"side = {args.side}",
            f"slope = {_fmt(fit.slope)}",
            f"intercept = {_fmt(fit.intercept)}",
            f"r_squared = {_fmt(fit.r_squared)}",
            f"degenerate = {_fmt(fit.degenerate)}",
        ]
    _emit(_csv_text(("quantity", "side", "log10_rel_distance", "second_derivative"), rows), args.output)
    _emit_summary(args, "\n".join(lines) + "\n")


# ----------------------------------------------------------------------------
# argument parsing


def _side(text: str) -> int:
    mapping = {"below": -1, "-1": -1, "above": 1, "+1": 1, "1": 1}
    if text not in mapping:
        raise argparse.ArgumentTypeError("side must be below/above or -1/+1")
    return mapping[text]


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ffgp", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"ffgp {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log unconverged quadrature levels")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, dim_default=None):
        p.add_argument("--config", help="key = value file; flags override it")
        p.add_argument("--output", default="-", help="CSV destination (default: stdout)")
        p.add_argument("--dim", type=int, default=dim_default)
        p.add_argument("--gamma", type=float, default=1.0)

    def lam_range(p):
        p.add_argument("--lambda-start", type=float, default=0.0)
        p.add_argument("--lambda-end", type=float, default=4.0)
        p.add_argument("--steps", type=int, default=81)

    p = sub.add_parser("sweep", help="infinite-lattice correlators, concurrence and phase versus lambda")
    common(p)
    lam_range(p)
    p.add_argument("--grid", type=int, default=None, help="finest grid points per axis")
    p.add_argument("--refine", type=int, default=3, help="number of grid levels")
    p.add_argument("--tol", type=float, default=1e-6, help="relative tolerance flagging")
    p.add_argument("--method", choices=METHODS, default="grid")
    p.add_argument("--h", type=float, default=1e-3, help="finite-difference step")
    p.set_defaults(handler=cmd_sweep)

    p = sub.add_parser("finite", help="finite periodic lattice correlators, site phases, bounds")
    common(p)
    p.add_argument("--lattice-n", type=int, default=8)
    p.add_argument("--lambda", dest="lam", type=float, default=0.5)
    p.add_argument("--site", type=int, default=None, help="default: every site")
    p.add_argument("--direction", type=int, default=None, help="default: every direction")
    p.add_argument("--oracle", action="store_true", help="compare with exact diagonalisation")
    p.add_argument("--bounds", action="store_true", help="add concurrence bound columns")
    p.set_defaults(handler=cmd_finite)

    p = sub.add_parser("bounds", help="concurrence bounds on random finite instances")
    common(p, dim_default=1)
    p.add_argument("--lattice-n", type=int, default=10)
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(handler=cmd_bounds)

    p = sub.add_parser("scan", help="classify derivative singularities")
    common(p)
    lam_range(p)
    p.add_argument("--quantity", choices=["c_II", "gamma_g", "both"], default="both")
    p.add_argument("--candidates", type=float, nargs="*", default=None, help="additional points to test")
    p.add_argument("--h", type=float, default=1e-3, help="largest finite-difference step")
    p.add_argument("--summary", default=None, help="summary path (default: OUTPUT.summary.txt)")
    p.set_defaults(handler=cmd_scan)

    p = sub.add_parser("scaling", help="second derivative versus log distance to lambda_c")
    common(p, dim_default=3)
    p.add_argument("--lambda-c", type=float, default=None, help="default: the dimension")
    p.add_argument("--quantity", choices=["c_II", "gamma_g", "both"], default="both")
    p.add_argument("--side", type=_side, default=-1)
    p.add_argument("--eps-min", type=float, default=1e-3)
    p.add_argument("--eps-max", type=float, default=1e-1)
    p.add_argument("--samples", type=int, default=7)
    p.add_argument("--h", type=float, default=1e-3, help="largest finite-difference step")
    p.add_argument("--summary", default=None, help="summary path (default: OUTPUT.summary.txt)")
    p.set_defaults(handler=cmd_scaling)
    return parser


def _read_config(path: str) -> dict[str, str]:
    reader = configparser.ConfigParser(interpolation=None)
    try:
        with open(path, encoding="utf-8") as handle:
            reader.read_string("[options]\n" + handle.read(), source=path)
    except OSError as exc:
        raise CliError("config", f"cannot read {path}: {exc.strerror}") from exc
    except configparser.Error as exc:
        raise CliError("config", f"malformed config {path}: {exc.message.splitlines()[0]}") from exc
    return dict(reader["options"])


def _apply_config(parser: argparse.ArgumentParser, argv: Sequence[str]):
    args = parser.parse_args(argv)
    if not args.config:
        return args
    sub = parser._subparsers._group_actions[0].choices[args.command]
    actions = {a.dest: a for a in sub._actions}
    flags = {opt.lstrip("-").replace("-", "_"): a.dest for a in sub._actions for opt in a.option_strings}
    defaults = {}
    for key, raw in _read_config(args.config).items():
        dest = flags.get(key.replace("-", "_"))
        if dest is None or dest in ("config", "help"):
            raise CliError("config", f"unknown option {key!r} for {args.command}")
        action = actions[dest]
        try:
            if isinstance(action, argparse._StoreTrueAction):
                value = {"true": True, "false": False, "1": True, "0": False}[raw.strip().lower()]
            elif action.nargs == "*":
                value = [action.type(v) for v in raw.split()]
            else:
                value = action.type(raw.strip()) if action.type else raw.strip()
        except (KeyError, ValueError, argparse.ArgumentTypeError) as exc:
            raise CliError("config", f"bad value {raw!r} for {key}") from exc
        defaults[dest] = value
    sub.set_defaults(**defaults)
    return parser.parse_args(argv)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = _apply_config(parser, sys.argv[1:] if argv is None else list(argv))
        logging.basicConfig(level=logging.WARNING if args.verbose else logging.ERROR, format="ffgp: %(message)s")
        if args.dim is None:
            raise CliError("invalid-config", "--dim is required")
        args.handler(args)
    except CliError as exc:
        sys.stderr.write(f"ffgp: error: {exc.kind}: {exc}\n")
        return 2
    except (InputError, FitError, UnphysicalInputError, IntegrandError) as exc:
        sys.stderr.write(f"ffgp: error: {type(exc).__name__}: {exc}\n")
        return 2
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
