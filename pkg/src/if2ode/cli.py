"""``if2ode`` command line: solve, classify, verify, basis."""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .classify import OdeProblem, Route, RouteVerdict, Tolerances, classify
from .errors import If2OdeError, ParseError
from .expr import parse
from .solver import FORCE_ROUTES, SolveConfig, SolveReport, solve
from .verify import reference_solve

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_FAILURE = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _num(v) -> str:
    return format(float(v), ".17g")


def _q0(text: str) -> complex | float:
    z = complex(text.replace(" ", ""))
    return z.real if z.imag == 0 else z


def _jsonable(v):
    """Complex numbers become floats when real, else ``[re, im]``."""
    if v is None:
        return None
    z = complex(v)
    if z.imag == 0:
        return float(z.real)
    return [float(z.real), float(z.imag)]


def _add_problem_args(p: argparse.ArgumentParser, with_rhs: bool = True, with_ic: bool = True):
    p.add_argument("--B", required=True, help="coefficient of y'")
    p.add_argument("--C", required=True, help="coefficient of y")
    if with_rhs:
        p.add_argument("--R", default="0", help="right-hand side (default 0)")
    p.add_argument("--f", default=None, help="known complementary solution")
    p.add_argument("--interval", nargs=2, type=float, required=True, metavar=("A", "B"))
    p.add_argument("--x0", type=float, default=None, help="base point (default: A)")
    if with_ic:
        p.add_argument("--ic", nargs=2, type=float, default=None, metavar=("Y0", "YP0"),
                       help="y(x0) and y'(x0)")
    p.add_argument("--riccati-q0", type=_q0, default=0.0, dest="q0",
                   help="initial value Q(x0) for the Riccati route; may be complex, "
                        "e.g. --riccati-q0=-1j")
    p.add_argument("--grid", type=int, default=None, help="grid size (>= 33)")
    p.add_argument("--tol", default=None,
                   help="tolerance bundle, e.g. 1e-9 or quad=1e-9,const=1e-8 "
                        "(env IF2ODE_TOL gives the default)")
    p.add_argument("--force-route", choices=sorted(FORCE_ROUTES), default=None)
    p.add_argument("--format", choices=["text", "csv", "json"], default="text")
    p.add_argument("--output", default=None, help="write the payload here instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="if2ode",
                     description="Solve y'' + B(x) y' + C(x) y = R(x) with integrating factors.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("solve", help="solve and print samples of y and y'")
    _add_problem_args(p)
    p.add_argument("--samples", type=int, default=None,
                   help="number of evenly spaced output rows (default: every grid node)")

    p = sub.add_parser("classify", help="report which route applies")
    _add_problem_args(p, with_rhs=False, with_ic=False)

    p = sub.add_parser("verify", help="compare against a reference integrator")
    _add_problem_args(p)

    p = sub.add_parser("basis", help="print the fundamental homogeneous solutions")
    _add_problem_args(p, with_rhs=False, with_ic=False)
    p.add_argument("--samples", type=int, default=None)
    return parser


def _tolerances(args) -> Tolerances:
    tol = Tolerances.from_env()
    if args.tol:
        tol = Tolerances.parse(args.tol, tol)
    if args.grid is not None:
        from dataclasses import replace

        tol = replace(tol, grid=args.grid)
    return tol


def _problem(args) -> OdeProblem:
    try:
        exprs = {k: parse(getattr(args, k)) for k in ("B", "C")}
        exprs["R"] = parse(getattr(args, "R", "0"))
        f = parse(args.f) if args.f else None
    except ParseError as exc:
        raise UsageError(f"bad expression: {exc}") from None
    tol = _tolerances(args)
    ic = tuple(args.ic) if getattr(args, "ic", None) else None
    try:
        return OdeProblem(exprs["B"], exprs["C"], exprs["R"], tuple(args.interval), args.x0,
                          ic, f, tol)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _sample_points(grid: np.ndarray, count: int | None) -> np.ndarray:
    if count is None:
        return grid
    if count < 2:
        raise UsageError("--samples must be at least 2")
    return np.linspace(grid[0], grid[-1], count)


def _route_line(v: RouteVerdict) -> str:
    r = v.route
    if r is Route.CONSTANT:
        return f"route: {r.value}, B = {v.B:.12g}, C = {v.C:.12g}, D = B^2 - 4C = {v.D_value:.12g}"
    if r is Route.COMPLEMENTARY:
        return f"route: {r.value}, f = {v.f}"
    if r is Route.DISCRIMINANT_ZERO:
        return f"route: {r.value}, D ≡ 0"
    if r is Route.DISCRIMINANT_CONST:
        return f"route: {r.value}, D ≡ {v.D_value:.12g}, k = D/4 = {v.k:.12g}"
    return f"route: {r.value}, D = {v.D} is not constant"


def _verdict_dict(v: RouteVerdict) -> dict:
    d = {"schema": SCHEMA_VERSION, "route": v.route.value, "D": str(v.D) if v.D else None}
    if v.route is Route.CONSTANT:
        d.update(B=v.B, C=v.C, D_value=v.D_value)
    elif v.route is Route.DISCRIMINANT_CONST:
        d.update(k=v.k, D_value=v.D_value)
    elif v.route is Route.DISCRIMINANT_ZERO:
        d.update(D_value=0.0)
    elif v.route is Route.COMPLEMENTARY:
        d.update(f=str(v.f))
    return d


def report_dict(report: SolveReport, xs: np.ndarray) -> dict:
    sol, fp, m = report.solution, report.factors, report.metrics
    _, y, yp = report.samples(xs)
    d = {
        "schema": SCHEMA_VERSION,
        "route": report.route_used.value,
        "routes_attempted": [r.value for r in report.routes_attempted],
    }
    if report.verdict.D is not None:
        d["D"] = str(report.verdict.D)
    if fp.k is not None:
        d["k"] = fp.k
    if fp.c is not None:
        d["c"] = fp.c
    if fp.q0 is not None:
        d["q0"] = _jsonable(fp.q0)
    d["C1"] = _jsonable(sol.C1)
    d["C2"] = _jsonable(sol.C2)
    if m is not None:
        metrics = {"max_residual": m.max_residual, "factor_defects": list(m.factor_defects),
                   "gh_defect": m.gh_defect, "imag_residue": m.imag_residue,
                   "grid_size": m.grid_size}
        if m.max_abs_error is not None:
            metrics["max_abs_error"] = m.max_abs_error
            metrics["max_rel_error"] = m.max_rel_error
        d["metrics"] = metrics
    d["warnings"] = list(report.warnings)
    d["samples"] = [{"x": float(a), "y": _jsonable(b), "yprime": _jsonable(c)}
                    for a, b, c in zip(xs, y, yp)]
    return d


def _csv_value(v) -> str:
    z = complex(v)
    if z.imag == 0:
        return _num(z.real)
    return f"{_num(z.real)}{'+' if z.imag >= 0 else '-'}{_num(abs(z.imag))}j"


def _csv(header, columns) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in zip(*columns):
        w.writerow([_csv_value(v) for v in row])
    return buf.getvalue()


def _report_text(report: SolveReport, xs) -> str:
    fp, sol, m = report.factors, report.solution, report.metrics
    lines = [_route_line(report.verdict)]
    if len(report.routes_attempted) > 1:
        lines.append("route chain: " + " -> ".join(r.value for r in report.routes_attempted))
    if fp.c is not None:
        lines.append(f"c = {fp.c:.12g}")
    if fp.q0 is not None:
        lines.append(f"q0 = {_csv_value(fp.q0)}")
    if sol.C1 is not None:
        lines.append(f"C1 = {_csv_value(sol.C1)}, C2 = {_csv_value(sol.C2)}")
    if m is not None:
        d1, d2, d3 = m.factor_defects
        lines.append(f"factor defects: g'-gP {d1:.3g}, (gQ)'-gC {d2:.3g}, h'-hQ {d3:.3g}")
        lines.append(f"g*h vs exp(int B): {m.gh_defect:.3g}")
        lines.append(f"max residual: {m.max_residual:.3g}")
        if m.max_abs_error is not None:
            lines.append(f"max |y - reference|: {m.max_abs_error:.3g} "
                         f"(relative {m.max_rel_error:.3g})")
        lines.append(f"imaginary residue: {m.imag_residue:.3g}")
    for w in report.warnings:
        lines.append(f"warning: {w}")
    _, y, yp = report.samples(xs)
    lines.append("")
    lines.append(f"{'x':>12} {'y':>24} {'yprime':>24}")
    for a, b, c in zip(xs, y, yp):
        lines.append(f"{a:12.6g} {_csv_value(b):>24} {_csv_value(c):>24}")
    return "\n".join(lines) + "\n"


def _emit(args, payload: str):
    if args.output:
        Path(args.output).write_text(payload, encoding="utf-8")
    else:
        sys.stdout.write(payload)


def _cmd_solve(args) -> int:
    p = _problem(args)
    report = solve(p, SolveConfig(q0=args.q0, force_route=args.force_route))
    xs = _sample_points(report.solution.grid, args.samples)
    if args.format == "csv":
        _, y, yp = report.samples(xs)
        _emit(args, _csv(["x", "y", "yprime"], [xs, y, yp]))
    elif args.format == "json":
        _emit(args, json.dumps(report_dict(report, xs), indent=2) + "\n")
    else:
        _emit(args, _report_text(report, _sample_points(report.solution.grid,
                                                        args.samples or 11)))
    return EXIT_OK


def _cmd_classify(args) -> int:
    p = _problem(args)
    v = classify(p)
    if args.format == "json":
        _emit(args, json.dumps(_verdict_dict(v), indent=2) + "\n")
    elif args.format == "csv":
        d = _verdict_dict(v)
        _emit(args, "key,value\n" + "".join(f"{k},{d[k]}\n" for k in d))
    else:
        _emit(args, _route_line(v) + "\n")
    return EXIT_OK


def _cmd_verify(args) -> int:
    p = _problem(args)
    if p.ic is None:
        raise UsageError("verify needs --ic Y0 YP0")
    report = solve(p, SolveConfig(q0=args.q0, force_route=args.force_route))
    m = report.metrics
    failures = m.failures()
    if args.format == "json":
        d = {"schema": SCHEMA_VERSION, "route": report.route_used.value,
             "metrics": m.to_dict(), "passed": not failures, "failures": failures}
        _emit(args, json.dumps(d, indent=2) + "\n")
    elif args.format == "csv":
        ref = reference_solve(p)
        x = ref.x
        _emit(args, _csv(["x", "y", "reference", "abs_error"],
                         [x, report.solution.y(x), ref.values,
                          np.abs(report.solution.y(x) - ref.values)]))
    else:
        text = _report_text(report, _sample_points(report.solution.grid, 11))
        text += ("verification: PASS\n" if not failures
                 else f"verification: FAIL ({', '.join(failures)})\n")
        _emit(args, text)
    if failures:
        print(f"verification failed: {', '.join(failures)}", file=sys.stderr)
        return EXIT_FAILURE
    return EXIT_OK


def _cmd_basis(args) -> int:
    p = _problem(args)
    report = solve(p, SolveConfig(q0=args.q0, force_route=args.force_route))
    sol = report.solution
    xs = _sample_points(sol.grid, args.samples)
    y1, y2 = sol.fundamental(xs)
    if args.format == "csv":
        _emit(args, _csv(["x", "y1", "y2"], [xs, y1, y2]))
    elif args.format == "json":
        d = {"schema": SCHEMA_VERSION, "route": report.route_used.value,
             "x0": sol.x0, "basis": "y1(x0)=1, y1'(x0)=0; y2(x0)=0, y2'(x0)=1",
             "factor_defects": list(report.metrics.factor_defects),
             "samples": [{"x": float(a), "y1": _jsonable(b), "y2": _jsonable(c)}
                         for a, b, c in zip(xs, y1, y2)]}
        _emit(args, json.dumps(d, indent=2) + "\n")
    else:
        lines = [_route_line(report.verdict),
                 "y1: y(x0)=1, y'(x0)=0;  y2: y(x0)=0, y'(x0)=1",
                 f"{'x':>12} {'y1':>24} {'y2':>24}"]
        pts = _sample_points(sol.grid, args.samples or 11)
        y1, y2 = sol.fundamental(pts)
        for a, b, c in zip(pts, y1, y2):
            lines.append(f"{a:12.6g} {_csv_value(b):>24} {_csv_value(c):>24}")
        _emit(args, "\n".join(lines) + "\n")
    return EXIT_OK


_COMMANDS = {"solve": _cmd_solve, "classify": _cmd_classify, "verify": _cmd_verify,
             "basis": _cmd_basis}


def _error_payload(exc: Exception) -> dict:
    d = {"error": type(exc).__name__, "message": str(exc),
         "stage": getattr(exc, "stage", None)}
    for attr in ("x_sing", "x", "x_zero", "offset"):
        v = getattr(exc, attr, None)
        if v is not None:
            d[attr] = _jsonable(v)
    return d


_VALUE_FLAGS = ("--B", "--C", "--R", "--f", "--riccati-q0")


def _glue_values(argv: list[str]) -> list[str]:
    """Turn ``--B -2/x`` into ``--B=-2/x`` so leading minus signs are not read as options."""
    out = []
    i = 0
    while i < len(argv):
        a = argv[i]
        if a in _VALUE_FLAGS and i + 1 < len(argv):
            out.append(f"{a}={argv[i + 1]}")
            i += 2
        else:
            out.append(a)
            i += 1
    return out


def _requested_format(argv: list[str]) -> str:
    """``--format`` value as written, for errors raised before parsing completes."""
    fmt = "text"
    for i, a in enumerate(argv):
        if a == "--format" and i + 1 < len(argv):
            fmt = argv[i + 1]
        elif a.startswith("--format="):
            fmt = a.split("=", 1)[1]
    return fmt


def run(argv=None) -> int:
    """Entry point; returns the process exit code."""
    argv = _glue_values(list(sys.argv[1:] if argv is None else argv))
    parser = build_parser()
    fmt = _requested_format(argv)
    try:
        args = parser.parse_args(argv)
        fmt = args.format
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        if fmt == "json":
            print(json.dumps({"error": "UsageError", "message": str(exc)}), file=sys.stderr)
        else:
            parser.print_usage(sys.stderr)
            print(f"if2ode: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (If2OdeError, ValueError) as exc:
        if fmt == "json":
            print(json.dumps(_error_payload(exc)), file=sys.stderr)
        else:
            stage = getattr(exc, "stage", None)
            prefix = f"[{stage}] " if stage else ""
            name = type(exc).__name__
            msg = str(exc) if str(exc).startswith(name) else f"{name}: {exc}"
            print(f"if2ode: {prefix}{msg}", file=sys.stderr)
        return EXIT_FAILURE


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
