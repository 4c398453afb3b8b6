"""q-Borel and q-Laplace transforms of order n/d.

The Borel transform acts on series in ``w = z**n``::

    sum a_l w**l  ->  sum a_l**(1/n) q**(-l(l-1)d/2) zeta**l

and the Laplace transform in direction ``lam`` sums over the spiral ``lam q**(dZ)``::

    L(g)(z) = ( sum_{k in Z} g(Q**k lam) / Theta_Q(Q**(k+1) lam / z) )**n,   Q = q**d.

The theta denominators are factored as
``Theta_Q(Q**(k+1) x) = Q**(k(k+1)/2) x**(k+1) Theta_Q(x)`` with ``x = lam/z``, so only
one theta evaluation is needed per point.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .numerics import (
    DEFAULT_CONTEXT,
    ConvergenceError,
    NumericContext,
    PoleProximityError,
    clog,
    cpow,
    ipow,
)
from .series import TruncatedSeries
from .theta import log_theta, log_theta_real


@dataclass(frozen=True)
class Slope:
    n: int
    d: int

    def __post_init__(self):
        if self.n < 1 or self.d < 1:
            raise ValueError("slope numerator and denominator must be positive")
        if math.gcd(self.n, self.d) != 1:
            raise ValueError(f"n = {self.n} and d = {self.d} are not coprime")

    @property
    def mu(self) -> float:
        return self.n / self.d


@dataclass(frozen=True)
class Direction:
    """Representative ``lam`` of a class in C*/q**(dZ)."""

    lam: complex
    d: int = 1
    margin: float = math.nan

    def __post_init__(self):
        if self.lam == 0:
            raise ValueError("direction representative must be nonzero")
        object.__setattr__(self, "lam", complex(self.lam))


@dataclass(frozen=True)
class SpiralSampler:
    """Read-only wrapper around a function sampled on spiral points."""

    func: Callable[[complex], complex]
    label: str = ""
    window: tuple = field(default=(-math.inf, math.inf))

    def __call__(self, zeta: complex) -> complex:
        return complex(self.func(zeta))


def qborel_literal(slope: Slope, f: TruncatedSeries, q: complex) -> TruncatedSeries:
    if f.var != "w":
        raise ValueError("the Borel transform takes a series in w = z**n")
    n, d = slope.n, slope.d
    out = [cpow(a, 1.0 / n) * ipow(q, -(ell * (ell - 1) // 2) * d) if a != 0 else 0j
           for ell, a in enumerate(f.coeffs)]
    return TruncatedSeries(out, "zeta")


def qborel_linear(slope: Slope, f: TruncatedSeries, q: complex) -> TruncatedSeries:
    """Root-free variant: ``a_l -> a_l q**(-l(l-1)d/2)``. Equals the literal one when n = 1."""
    if f.var != "w":
        raise ValueError("the Borel transform takes a series in w = z**n")
    d = slope.d
    return TruncatedSeries([a * ipow(q, -(ell * (ell - 1) // 2) * d) for ell, a in enumerate(f.coeffs)],
                           "zeta")


def spiral_pole_check(z: complex, base: complex, Q: complex, guard: float) -> None:
    """Raise if ``z`` is within relative distance ``guard`` of the spiral ``base Q**Z``."""
    j0 = round(math.log(abs(z / base)) / math.log(abs(Q)))
    for j in (j0 - 1, j0, j0 + 1):
        p = base * ipow(Q, j)
        if abs(z - p) < guard * abs(p):
            raise PoleProximityError(f"z = {z} is within {guard:g} (relative) of the pole {p}", nearest_pole=p)


def nearest_spiral_point(z: complex, base: complex, Q: complex) -> tuple[complex, float]:
    """Closest point of ``base Q**Z`` to z and its relative distance."""
    j0 = round(math.log(abs(z / base)) / math.log(abs(Q)))
    best = None
    for j in range(j0 - 2, j0 + 3):
        p = base * ipow(Q, j)
        rel = abs(z - p) / abs(p)
        if best is None or rel < best[1]:
            best = (p, rel)
    return best


def inner_laplace_sum(d: int, direction: Direction, g: Callable[[complex], complex], q: complex,
                      z: complex, ctx: NumericContext = DEFAULT_CONTEXT,
                      window: int | None = None) -> complex:
    """``sum_{k in Z} g(Q**k lam) / Theta_Q(Q**(k+1) lam / z)`` with ``Q = q**d``.

    Adaptive by default: starting from the dominant kernel index, each side runs
    until three consecutive terms drop below ``term_tol * |partial sum|``. With
    ``window=L`` the fixed range ``-L <= k <= L`` is summed instead.
    """
    lam = direction.lam
    z = complex(z)
    if z == 0:
        raise PoleProximityError("z = 0 is outside the punctured neighbourhood")
    Q = complex(q) ** d
    logQ = clog(Q)
    spiral_pole_check(z, -lam, Q, ctx.eval_radius_guard)
    x = lam / z
    logx = clog(x)
    ltheta = log_theta(Q, x, ctx)
    if ltheta.real == -math.inf:
        raise PoleProximityError(f"theta denominator vanishes at z = {z}", nearest_pole=z)

    def term(k: int) -> complex:
        zeta = lam * cmath.exp(k * logQ)
        gv = g(zeta)
        if gv == 0:
            return 0j
        return gv * cmath.exp(-(k * (k + 1) // 2) * logQ - (k + 1) * logx - ltheta)

    if window is not None:
        return complex(math.fsum(term(k).real for k in range(-window, window + 1))
                       + 1j * math.fsum(term(k).imag for k in range(-window, window + 1)))

    k0 = round(math.log(abs(z / lam)) / math.log(abs(Q)))
    parts = [term(k0)]
    total = parts[0]
    count = 1
    for step in (1, -1):
        small = 0
        k = k0 + step
        while True:
            t = term(k)
            parts.append(t)
            total += t
            count += 1
            if abs(t) <= ctx.term_tol * abs(total):
                small += 1
                if small == 3:
                    break
            else:
                small = 0
            if count > ctx.max_terms:
                raise ConvergenceError(f"Laplace sum at z = {z} did not converge in {ctx.max_terms} terms")
            k += step
    return complex(math.fsum(p.real for p in parts) + 1j * math.fsum(p.imag for p in parts))


def qlaplace_literal(slope: Slope, direction: Direction, g: Callable[[complex], complex], q: complex,
                     z: complex, ctx: NumericContext = DEFAULT_CONTEXT) -> complex:
    """The n-th power of :func:`inner_laplace_sum` (poles of order <= n on ``-lam q**(dZ)``)."""
    return inner_laplace_sum(slope.d, direction, g, q, z, ctx) ** slope.n


@dataclass(frozen=True)
class GrowthFit:
    passed: bool
    L_fit: float
    M_fit: float
    excess: float

    def __iter__(self):
        return iter((self.passed, self.L_fit, self.M_fit))


def growth_check(g: Callable[[complex], complex], d: int, q: complex, window: range,
                 lam: complex = 1.0, M_grid=None, ctx: NumericContext = DEFAULT_CONTEXT) -> GrowthFit:
    """Fit ``|g(zeta)| < L |Theta_{|q|^d}(M |zeta|)|`` on the spiral points ``lam q**(dk)``, k in window.

    ``L`` is fitted on the central half of the window only; the check fails when
    the outer samples exceed that bound for every ``M`` on the grid, i.e. when
    the growth outpaces the theta majorant.
    """
    R = abs(q) ** d
    ks = np.array(list(window))
    if ks.size < 4:
        raise ValueError("growth check needs at least four spiral samples")
    zetas = [complex(lam) * complex(q) ** (d * int(k)) for k in ks]
    logg = np.array([math.log(max(abs(g(zz)), 1e-300)) for zz in zetas])
    absz = np.array([abs(zz) for zz in zetas])
    centre = np.abs(ks - np.median(ks)) <= (ks.max() - ks.min()) / 4
    if M_grid is None:
        M_grid = np.logspace(-4, 4, 81)
    best = None
    for M in M_grid:
        rho = logg - np.array([log_theta_real(R, M * t, ctx) for t in absz])
        logL = rho[centre].max()
        excess = float((rho[~centre] - logL).max(initial=-math.inf))
        if best is None or excess < best[0] - 1e-12:
            best = (excess, float(M), float(rho.max()))
        if excess <= 0:
            break
    excess, M_fit, logL_all = best
    return GrowthFit(excess <= 0, math.exp(logL_all) * (1 + 1e-9), M_fit, excess)
