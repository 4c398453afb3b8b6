"""Command line interface: ``qsum <command> [options]``.

Complex numbers are written as ``[re, im]`` pairs in JSON and as ``re,im`` on
the command line.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .numerics import NumericContext, PoleProximityError, QSumError
from .pipeline import ForbiddenDirectionError, predicted_poles, summation_assemble
from .series import TruncatedSeries
from .system import SystemSpec, select_forcing_sign, solve_formal
from .theta import theta_eval
from .transforms import Direction, Slope, nearest_spiral_point, qborel_literal, qlaplace_literal
from .verify import (
    ResidualReport,
    _jsonable,
    asymptotic_slope,
    default_grid,
    euler_crosscheck,
    euler_spec,
    pole_order_scan,
    run_suite,
)


class SpecError(QSumError, ValueError):
    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


@dataclass(frozen=True)
class Truncation:
    N: int = 40
    laplace_window: int = 64


def _complex(value, field: str) -> complex:
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, (list, tuple)) and len(value) == 2 and all(isinstance(v, (int, float)) for v in value):
        return complex(value[0], value[1])
    raise SpecError(field, f"expected a number or an [re, im] pair, got {value!r}")


def _int(value, field: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise SpecError(field, f"expected an integer, got {value!r}")
    return value


def spec_from_dict(data: dict) -> tuple[SystemSpec, Direction, NumericContext, Truncation]:
    for key in ("q", "n", "d", "a", "r", "W", "lambda"):
        if key not in data:
            raise SpecError(key, "missing field")
    q = _complex(data["q"], "q")
    n, d, r = _int(data["n"], "n"), _int(data["d"], "d"), _int(data["r"], "r")
    a = _complex(data["a"], "a")
    lam = _complex(data["lambda"], "lambda")
    if n < 1 or d < 1:
        raise SpecError("n" if n < 1 else "d", "must be a positive integer")
    if math.gcd(n, d) != 1:
        raise SpecError("n/d", f"n = {n} and d = {d} are not coprime")
    if abs(q) <= 1:
        raise SpecError("q", f"modulus must exceed 1, got |q| = {abs(q):g}")
    if a == 0:
        raise SpecError("a", "must be nonzero")
    if r < 1:
        raise SpecError("r", "must be a positive integer")
    if lam == 0:
        raise SpecError("lambda", "must be nonzero")
    W_raw = data["W"]
    if not isinstance(W_raw, list):
        raise SpecError("W", "expected an array of coefficient arrays")
    if len(W_raw) != d * r:
        raise SpecError("W", f"has {len(W_raw)} entries but m-1 = d*r = {d * r}")
    W = []
    for i, row in enumerate(W_raw):
        if not isinstance(row, list):
            raise SpecError(f"W[{i}]", "expected an array of [re, im] pairs")
        if len(row) > n:
            raise SpecError(f"W[{i}]", f"has {len(row)} coefficients; degree must be < n = {n}")
        W.append(tuple(_complex(c, f"W[{i}][{k}]") for k, c in enumerate(row)))
    tr = data.get("truncation", {})
    defaults = NumericContext()
    try:
        ctx = NumericContext(term_tol=float(tr.get("term_tol", defaults.term_tol)),
                             test_tol=float(tr.get("test_tol", defaults.test_tol)),
                             max_terms=int(tr.get("max_terms", defaults.max_terms)))
    except ValueError as exc:
        raise SpecError("truncation", str(exc)) from None
    trunc = Truncation(_int(tr.get("N", 40), "truncation.N"), _int(tr.get("laplace_window", 64),
                                                                   "truncation.laplace_window"))
    if trunc.N < n:
        raise SpecError("truncation.N", f"must be at least n = {n}")
    spec = SystemSpec(q, Slope(n, d), a, r, tuple(W))
    return spec, Direction(lam, d), ctx, trunc


def parse_spec(path) -> tuple[SystemSpec, Direction, NumericContext, Truncation]:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SpecError("<file>", f"invalid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise SpecError("<file>", "top level must be an object")
    return spec_from_dict(data)


def spec_to_dict(spec: SystemSpec, direction: Direction, ctx: NumericContext, trunc: Truncation) -> dict:
    pair = lambda c: [complex(c).real, complex(c).imag]  # noqa: E731
    return {
        "q": pair(spec.q), "n": spec.n, "d": spec.d, "a": pair(spec.a), "r": spec.r,
        "W": [[pair(c) for c in row] for row in spec.W],
        "lambda": pair(direction.lam),
        "truncation": {"N": trunc.N, "laplace_window": trunc.laplace_window,
                       "term_tol": ctx.term_tol, "test_tol": ctx.test_tol, "max_terms": ctx.max_terms},
    }


# --- helpers ------------------------------------------------------------------------------

def _parse_complex_flag(text: str) -> complex:
    parts = text.split(",")
    try:
        if len(parts) == 1:
            return complex(float(parts[0]))
        if len(parts) == 2:
            return complex(float(parts[0]), float(parts[1]))
    except ValueError:
        pass
    raise argparse.ArgumentTypeError(f"expected 're' or 're,im', got {text!r}")


def _context(args) -> NumericContext:
    return NumericContext(term_tol=args.term_tol, test_tol=args.test_tol, max_terms=args.max_terms)


def _ctx_dict(ctx: NumericContext) -> dict:
    return {"term_tol": ctx.term_tol, "test_tol": ctx.test_tol, "max_terms": ctx.max_terms,
            "eval_radius_guard": ctx.eval_radius_guard}


def _write(text: str, out):
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _dump_json(obj, out):
    _write(json.dumps(_jsonable(obj), indent=2) + "\n", out)


def _dump_csv(header, rows, out):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(v)) if isinstance(v, float) else v for v in row])
    _write(buf.getvalue(), out)


def _read_points(path) -> list[complex]:
    pts = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            pts.append(complex(float(row["z_re"]), float(row["z_im"])))
    return pts


def _report_doc(command: str, reports: list[ResidualReport], ctx: NumericContext, extra: dict | None = None) -> dict:
    gating = [r for r in reports if r.passed is not None]
    doc = {
        "command": command,
        "forcing_sign": select_forcing_sign(),
        "context": _ctx_dict(ctx),
        "all_gating_passed": all(r.passed for r in gating),
        "reports": [r.to_dict() for r in reports],
    }
    if extra:
        doc.update(extra)
    return doc


# --- commands -------------------------------------------------------------------------------

def cmd_theta(args) -> int:
    ctx = _context(args)
    rows = []
    for z in args.z:
        v = theta_eval(args.Q, z, ctx)
        rows.append((z.real, z.imag, v.real, v.imag))
    _dump_csv(["z_re", "z_im", "value_re", "value_im"], rows, args.out)
    return 0


def _coeff_series(coeffs, var) -> TruncatedSeries:
    return TruncatedSeries(coeffs or [0j], var)


def cmd_borel(args) -> int:
    slope = Slope(args.n, args.d)
    f = _coeff_series(args.coeff, "w")
    g = qborel_literal(slope, f, args.q)
    _dump_json({"n": args.n, "d": args.d, "q": args.q, "var": "zeta", "coeffs": list(g.coeffs)}, args.out)
    return 0


def cmd_laplace(args) -> int:
    ctx = _context(args)
    slope = Slope(args.n, args.d)
    g = _coeff_series(args.coeff, "zeta")
    direction = Direction(args.lam, args.d)
    rows = []
    for z in args.z:
        v = qlaplace_literal(slope, direction, g, args.q, z, ctx)
        rows.append((z.real, z.imag, v.real, v.imag))
    _dump_csv(["z_re", "z_im", "value_re", "value_im"], rows, args.out)
    return 0


def cmd_solve_formal(args) -> int:
    spec, direction, ctx, trunc = parse_spec(args.spec)
    N = args.N or trunc.N
    H = solve_formal(spec, N)
    _dump_json({"forcing_sign": select_forcing_sign(), "N": N, "m": spec.m,
                "entries": [list(h.coeffs) for h in H]}, args.out)
    return 0


def cmd_sum(args) -> int:
    spec, direction, ctx, trunc = parse_spec(args.spec)
    try:
        sol = summation_assemble(spec, direction, ctx, route=args.route)
    except ForbiddenDirectionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    grid = _read_points(args.grid) if args.grid else default_grid(spec, sol.direction, args.npts)
    rows = []
    for z in grid:
        try:
            vals = sol(z)
        except PoleProximityError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
        for i, v in enumerate(vals):
            sp = sol.spirals[i]
            p, _ = nearest_spiral_point(z, sp.base, sp.ratio)
            rows.append((z.real, z.imag, i, v.real, v.imag, abs(z - p)))
    _dump_csv(["z_re", "z_im", "entry", "value_re", "value_im", "nearest_pole_distance"], rows, args.out)
    return 0


def cmd_poles(args) -> int:
    spec, direction, ctx, trunc = parse_spec(args.spec)
    try:
        sol = summation_assemble(spec, direction, ctx, route=args.route)
    except ForbiddenDirectionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    ks = range(-args.k, args.k + 1)
    entries, reports = [], []
    for i in range(spec.size):
        sp = predicted_poles(spec, sol.direction, i + 1)
        rep = pole_order_scan(lambda z, i=i: sol(z)[i], sp, spec.n, ks, name=f"pole_order_scan[{i}]")
        reports.append(rep)
        entries.append({"entry": i, "base": sp.base, "ratio": sp.ratio, "order_bound": sp.order,
                        "predicted": sp.points(ks), "scanned": rep.details["estimates"]})
    doc = _report_doc("poles", reports, ctx, {"entries": entries})
    _dump_json(doc, args.out)
    return 0 if doc["all_gating_passed"] else 1


def cmd_verify(args) -> int:
    spec, direction, ctx, trunc = parse_spec(args.spec)
    try:
        reports = run_suite(spec, direction, ctx, N=trunc.N, npts=args.npts)
    except ForbiddenDirectionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    doc = _report_doc("verify", reports, ctx, {"spec": spec_to_dict(spec, direction, ctx, trunc)})
    _dump_json(doc, args.out)
    for r in reports:
        print(r.line(), file=sys.stderr)
    return 0 if doc["all_gating_passed"] else 1


def cmd_euler(args) -> int:
    ctx = _context(args)
    direction = Direction(args.lam, 1)
    try:
        rep = euler_crosscheck(args.q, direction, ctx=ctx)
    except ForbiddenDirectionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    spec = euler_spec(args.q)
    sol = summation_assemble(spec, direction, ctx)
    formal = solve_formal(spec, 30)[0]
    reports = [rep,
               pole_order_scan(lambda z: sol(z)[0], sol.spirals[0], 1, range(-2, 3)),
               asymptotic_slope(lambda z: sol(z)[0], formal, 0.7, [0, 2, 5])]
    doc = _report_doc("euler", reports, ctx)
    _dump_json(doc, args.out)
    for r in reports:
        print(r.line(), file=sys.stderr)
    return 0 if doc["all_gating_passed"] else 1


# --- parser ----------------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    d = NumericContext()
    common.add_argument("--term-tol", type=float, default=d.term_tol)
    common.add_argument("--test-tol", type=float, default=d.test_tol)
    common.add_argument("--max-terms", type=int, default=d.max_terms)
    common.add_argument("--out", "-o", default=None, help="output file (default: stdout)")
    cx = _parse_complex_flag

    p = argparse.ArgumentParser(prog="qsum", description="q-Borel-Laplace summation of two-slope q-difference systems")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("theta", parents=[common], help="evaluate Theta_Q at points")
    s.add_argument("--Q", type=cx, required=True)
    s.add_argument("--z", type=cx, action="append", required=True)
    s.set_defaults(func=cmd_theta)

    for name, func, var in (("borel", cmd_borel, "w"), ("laplace", cmd_laplace, "zeta")):
        s = sub.add_parser(name, parents=[common], help=f"{name} transform of order n/d")
        s.add_argument("--n", type=int, default=1)
        s.add_argument("--d", type=int, default=1)
        s.add_argument("--q", type=cx, required=True)
        s.add_argument("--coeff", type=cx, action="append", default=[],
                       help=f"coefficient of {var}^k, in order (repeat)")
        if name == "laplace":
            s.add_argument("--lambda", dest="lam", type=cx, default=1 + 0j)
            s.add_argument("--z", type=cx, action="append", required=True)
        s.set_defaults(func=func)

    s = sub.add_parser("solve-formal", parents=[common], help="emit formal solution coefficients")
    s.add_argument("--spec", required=True)
    s.add_argument("--N", type=int, default=None)
    s.set_defaults(func=cmd_solve_formal)

    for name, func, hlp in (("sum", cmd_sum, "sample the summed solution on a grid"),
                            ("poles", cmd_poles, "predicted and scanned pole data"),
                            ("verify", cmd_verify, "run the certification suite")):
        s = sub.add_parser(name, parents=[common], help=hlp)
        s.add_argument("--spec", required=True)
        s.add_argument("--npts", type=int, default=20)
        if name != "verify":
            s.add_argument("--route", choices=["laplace", "theta"], default=None)
        if name == "sum":
            s.add_argument("--grid", default=None, help="CSV with z_re,z_im columns")
        if name == "poles":
            s.add_argument("--k", type=int, default=1, help="scan poles k in [-K, K]")
        s.set_defaults(func=func)

    s = sub.add_parser("euler", parents=[common], help="q-Euler equation end to end")
    s.add_argument("--q", type=cx, default=2 + 0j)
    s.add_argument("--lambda", dest="lam", type=cx, default=1 + 0j)
    s.set_defaults(func=cmd_euler)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SpecError as exc:
        print(f"error: invalid spec: {exc}", file=sys.stderr)
        return 2
    except QSumError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
