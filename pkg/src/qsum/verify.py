"""Numerical certification of the identities behind the summation.

Each check returns a :class:`ResidualReport`. ``passed`` is ``None`` for
diagnostic checks that record a magnitude without gating.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import mpmath
import numpy as np

from .numerics import DEFAULT_CONTEXT, NumericContext, PoleProximityError
from .pipeline import (
    DirectBlockAssembly,
    LiteralAssembly,
    MeromorphicSolution,
    PoleSpiral,
    borel_plane_rational,
    summation_assemble,
    taylor_agreement,
)
from .series import TruncatedSeries, section
from .system import SystemSpec, apply_block, d_step_transfer, forcing, select_forcing_sign, solve_formal
from .transforms import Direction, Slope, nearest_spiral_point, qborel_literal, qlaplace_literal


@dataclass
class ResidualReport:
    name: str
    grid: str
    params: dict
    max_abs: float
    max_rel: float
    tol: float | None
    passed: bool | None
    sign: int = field(default_factory=select_forcing_sign)
    dropped: int = 0
    details: dict = field(default_factory=dict)

    @property
    def gating(self) -> bool:
        return self.passed is not None

    def to_dict(self) -> dict:
        return _jsonable(asdict(self))

    def line(self) -> str:
        status = "DIAG" if self.passed is None else ("PASS" if self.passed else "FAIL")
        tol = "-" if self.tol is None else f"{self.tol:.1e}"
        return f"[{status}] {self.name}: max_rel={self.max_rel:.3e} max_abs={self.max_abs:.3e} tol={tol}"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    return obj


# --- grids -----------------------------------------------------------------------------

def default_grid(spec: SystemSpec, direction: Direction, npts: int = 20, margin: float = 0.1,
                 rho0: float = 0.3, theta0: float = 0.1) -> list[complex]:
    """Log-spaced radii over one q^d period, angles over half a turn, pole margin enforced.

    Margin is checked for z and q z against every predicted spiral.
    """
    Qd = abs(spec.q) ** spec.d
    spirals = [(-direction.lam * spec.q ** (-b), spec.q ** spec.d) for b in range(spec.d)]
    pts = []
    for k in range(npts):
        rho = rho0 * Qd ** (k / npts)
        theta = theta0 + math.pi * k / npts
        for attempt in range(64):
            z = rho * cmath.exp(1j * (theta + 0.05 * attempt * (-1) ** attempt))
            if all(nearest_spiral_point(x, b, R)[1] > margin for x in (z, spec.q * z) for b, R in spirals):
                pts.append(z)
                break
    return pts


# --- checks -------------------------------------------------------------------------------

def residual_functional_eq(sol: Callable[[complex], np.ndarray], spec: SystemSpec, grid: Sequence[complex],
                           tol: float = 1e-7, name: str = "functional_equation") -> ResidualReport:
    """``max |H(qz) - (E (x) U)(z) H(z) - s W(z)|`` relative to the local magnitude."""
    s = select_forcing_sign()
    max_abs = max_rel = 0.0
    dropped = 0
    for z in grid:
        try:
            H, Hq = np.asarray(sol(z)), np.asarray(sol(spec.q * z))
        except PoleProximityError:
            dropped += 1
            continue
        rhs = apply_block(spec, z, H) + s * forcing(spec, z)
        err = float(np.max(np.abs(Hq - rhs)))
        scale = max(float(np.max(np.abs(Hq))), float(np.max(np.abs(rhs))), 1.0)
        max_abs = max(max_abs, err)
        max_rel = max(max_rel, err / scale)
    return ResidualReport(name, f"{len(grid)} points", {"q": spec.q, "n": spec.n, "d": spec.d, "r": spec.r},
                          max_abs, max_rel, tol, max_rel < tol and dropped < len(grid), dropped=dropped)


def check_lb_identity(slope: Slope, direction: Direction, f: TruncatedSeries, q: complex,
                      ctx: NumericContext = DEFAULT_CONTEXT, points: Sequence[complex] | None = None,
                      tol: float | None = 1e-8, name: str = "laplace_borel_identity") -> ResidualReport:
    """Compare ``L(B(f))(z)`` with ``f(z**n)`` at points in ``0 < |z| < 0.5``."""
    if points is None:
        points = [0.35 * cmath.exp(0.7j), 0.2 * cmath.exp(-1.9j), 0.1 * cmath.exp(2.6j), 0.45j, 0.05 + 0.02j]
    g = qborel_literal(slope, f, q)
    max_abs = max_rel = 0.0
    for z in points:
        got = qlaplace_literal(slope, direction, g, q, z, ctx) if any(g.coeffs) else 0j
        want = f(z ** slope.n)
        err = abs(got - want)
        max_abs = max(max_abs, err)
        max_rel = max(max_rel, err / abs(want) if want != 0 else err)
    passed = None if tol is None else max_rel < tol
    return ResidualReport(name, f"{len(points)} points in 0<|z|<0.5",
                          {"n": slope.n, "d": slope.d, "lam": direction.lam, "coeffs": list(f.coeffs), "q": q},
                          max_abs, max_rel, tol, passed)


def euler_spec(q: complex) -> SystemSpec:
    """The q-Euler equation ``z y(qz) + y(z) = z`` in normal form (n = d = r = 1, a = -1)."""
    s = select_forcing_sign()
    return SystemSpec(q, Slope(1, 1), -1, 1, ((s,),))


def euler_bilateral_series(q: complex, lam: complex, z: complex, window: int = 30, theta_window: int = 64,
                       dps: int = 20) -> tuple[complex, complex]:
    """Fixed-window mpmath evaluation of ``sum_l N_l / Theta_q(q**(1+l) lam / z)``.

    Returns the sums for the numerator ``1/(1+q**l lam)`` and for
    ``q**l lam/(1+q**l lam)`` (the Laplace transform of ``zeta/(1+zeta)``).
    """
    with mpmath.workdps(dps):
        qm, lm, zm = mpmath.mpc(q), mpmath.mpc(lam), mpmath.mpc(z)
        ks = range(-theta_window, theta_window + 1)
        coef = [qm ** (-(k * (k + 1) // 2)) for k in ks]
        lit = sol = mpmath.mpc(0)
        for ell in range(-window, window + 1):
            x = qm ** (1 + ell) * lm / zm
            xk = x ** (-theta_window)
            th = mpmath.mpc(0)
            for c in coef:
                th += c * xk
                xk *= x
            p = qm ** ell * lm
            lit += 1 / ((1 + p) * th)
            sol += p / ((1 + p) * th)
        return complex(lit), complex(sol)


def euler_crosscheck(q: complex, direction: Direction, grid: Sequence[complex] | None = None,
                     ctx: NumericContext = DEFAULT_CONTEXT, tol: float = 1e-8) -> ResidualReport:
    spec = euler_spec(q)
    sol = summation_assemble(spec, direction, ctx)
    if grid is None:
        grid = default_grid(spec, sol.direction)
    rel_sol = rel_lit = eq = 0.0
    max_abs = 0.0
    for z in grid:
        y = complex(sol(z)[0])
        yq = complex(sol(q * z)[0])
        lit, want = euler_bilateral_series(q, direction.lam, z)
        rel_sol = max(rel_sol, abs(y - want) / abs(want))
        rel_lit = max(rel_lit, abs(y - lit) / abs(lit))
        max_abs = max(max_abs, abs(y - want))
        eq = max(eq, abs(z * yq + y - z) / max(abs(z * yq), abs(y), abs(z)))
    return ResidualReport("euler_crosscheck", f"{len(grid)} points", {"q": q, "lam": direction.lam},
                          max_abs, rel_sol, tol, rel_sol < tol and eq < tol,
                          details={"equation_residual": eq, "unit_numerator_max_rel": rel_lit})


@dataclass
class PoleEstimate:
    pole: complex
    order: int
    slope: float


def pole_order_scan(f: Callable[[complex], complex], spiral: PoleSpiral, n: int, k_range: Sequence[int],
                    eps0: float = 1e-2, levels: int = 6, angles: int = 8,
                    name: str = "pole_order_scan") -> ResidualReport:
    """Fit ``log max_circle |f|`` against ``log radius`` on shrinking circles around each pole."""
    estimates = []
    for k in k_range:
        p = spiral.base * spiral.ratio ** k
        xs, ys = [], []
        for lev in range(levels):
            eps = eps0 * abs(p) * 2.0 ** (-lev)
            vals = [abs(f(p + eps * cmath.exp(2j * math.pi * (t + 0.5) / angles))) for t in range(angles)]
            xs.append(math.log(eps))
            ys.append(math.log(max(max(vals), 1e-300)))
        slope = float(np.polyfit(xs, ys, 1)[0])
        estimates.append(PoleEstimate(p, int(round(-slope)), slope))
    worst = max(e.order for e in estimates)
    return ResidualReport(name, f"poles k in {list(k_range)}", {"order_bound": n, "base": spiral.base},
                          float(worst), float(worst), float(n), worst <= n,
                          details={"estimates": [asdict(e) for e in estimates]})


def _truncated_eval(coeffs: Sequence[complex], N: int, z: complex) -> complex:
    return sum(c * z ** k for k, c in enumerate(coeffs[: N + 1]))


def asymptotic_slope(entry: Callable[[complex], complex], formal: TruncatedSeries, angle: float,
                     orders: Sequence[int], npts: int = 6, name: str = "asymptotic_slope") -> ResidualReport:
    """Log-log slope of ``|entry(z) - formal_{<=N}(z)|`` as z -> 0 along a ray; needs slope >= N + 0.5.

    Radii sit where the first omitted term dominates: below a quarter of the
    next coefficient ratio and above the double-precision floor.
    """
    c = formal.coeffs
    lead = next(k for k, v in enumerate(c) if v != 0)
    fits = {}
    ok = True
    for N in orders:
        k1 = next(k for k in range(N + 1, len(c)) if c[k] != 0)
        k2 = next((k for k in range(k1 + 1, len(c)) if c[k] != 0), None)
        hi = 0.25 * (abs(c[k1] / c[k2]) ** (1 / (k2 - k1)) if k2 else 1.0)
        # |c_k1| rho^k1 >= 1e-9 |c_lead| rho^lead
        lo = (1e-9 * abs(c[lead]) / abs(c[k1])) ** (1 / (k1 - lead)) if k1 > lead else hi / 30
        lo = max(lo, hi / 30)
        radii = np.geomspace(lo, hi, npts)
        xs, ys = [], []
        for rho in radii:
            z = rho * cmath.exp(1j * angle)
            diff = abs(entry(z) - _truncated_eval(c, N, z))
            xs.append(math.log(rho))
            ys.append(math.log(max(diff, 1e-300)))
        slope = float(np.polyfit(xs, ys, 1)[0])
        fits[N] = slope
        ok &= slope >= N + 0.5
    worst = min(fits[N] - N for N in orders)
    return ResidualReport(name, f"ray arg={angle:.3f}", {"orders": list(orders)}, worst, worst, 0.5, ok,
                          details={"slopes": fits})


def taylor_consistency(spec: SystemSpec, formal: Sequence[TruncatedSeries], tol: float = 1e-10,
                       max_order: int = 30) -> ResidualReport:
    """Rational Borel closed forms of the chain rows vs Borel transforms of the formal sections."""
    tr = d_step_transfer(spec, 0)
    worst = 0.0
    per = {}
    for ell in range(spec.n):
        gs = borel_plane_rational(spec, tr, ell)
        for j, g in enumerate(gs):
            sec = section(formal[spec.row(0, j)], ell, spec.n)
            N = min(sec.trunc_order, max_order)
            ser = qborel_literal(spec.slope, TruncatedSeries(sec.coeffs[: N + 1], "w"), spec.q)
            err = taylor_agreement(g, ser)
            per[f"row{j}_sec{ell}"] = err
            worst = max(worst, err)
    return ResidualReport("borel_taylor_consistency", "Taylor coefficients at 0",
                          {"n": spec.n, "d": spec.d, "r": spec.r}, worst, worst, tol, worst < tol,
                          details={"per_section": per})


def cross_construction(spec: SystemSpec, direction: Direction, grid: Sequence[complex],
                       ctx: NumericContext = DEFAULT_CONTEXT, tol: float = 1e-7) -> ResidualReport:
    """Displayed assembly vs chain-plus-propagation. Gating for n = 1, diagnostic for n > 1."""
    main = summation_assemble(spec, direction, ctx)
    literal = LiteralAssembly(spec, direction, ctx)
    direct = DirectBlockAssembly(spec, direction, ctx) if spec.n == 1 else None
    lit_err = dir_err = 0.0
    lit_abs = 0.0
    for z in grid:
        ref = main(z)
        scale = max(float(np.max(np.abs(ref))), 1.0)
        e = float(np.max(np.abs(literal(z) - ref)))
        lit_abs = max(lit_abs, e)
        lit_err = max(lit_err, e / scale)
        if direct is not None:
            dir_err = max(dir_err, float(np.max(np.abs(direct(z) - ref))) / scale)
    details = {"route": main.route}
    if direct is not None:
        details["direct_block_max_rel"] = dir_err
    passed = lit_err < tol if spec.n == 1 else None
    return ResidualReport("cross_construction", f"{len(grid)} points",
                          {"n": spec.n, "d": spec.d, "r": spec.r}, lit_abs, lit_err, tol if spec.n == 1 else None,
                          passed, details=details)


def run_suite(spec: SystemSpec, direction: Direction, ctx: NumericContext = DEFAULT_CONTEXT,
              N: int = 40, npts: int = 20) -> list[ResidualReport]:
    """All checks applicable to one system and direction."""
    sol = summation_assemble(spec, direction, ctx)
    grid = default_grid(spec, sol.direction, npts)
    formal = solve_formal(spec, N)
    reports = [residual_functional_eq(sol, spec, grid), taylor_consistency(spec, formal)]
    if spec.n > 1:
        reports[-1].passed = None  # literal roots are not additive for n > 1
        reports[-1].tol = None
    for i, sp in enumerate(sol.spirals):
        rep = pole_order_scan(lambda z, i=i: sol(z)[i], sp, spec.n, range(-1, 2), name=f"pole_order_scan[{i}]")
        reports.append(rep)
    reports.append(cross_construction(spec, direction, grid[:8], ctx))
    return reports
