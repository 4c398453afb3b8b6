"""Theta function ``Theta_Q(z) = sum_l Q**(-l(l+1)/2) z**l`` for |Q| > 1.

Evaluation reduces ``z`` into the annulus ``|Q|**0.5 <= |z| < |Q|**1.5`` with the
quasi-periodicity ``Theta_Q(Q**k z) = Q**(k(k-1)/2) z**k Theta_Q(z)`` and sums the
bilateral series there.
"""
from __future__ import annotations

import cmath
import math

from .numerics import DEFAULT_CONTEXT, ConvergenceError, DomainError, NumericContext, clog


def _check(Q: complex, z: complex):
    if abs(Q) <= 1:
        raise DomainError(f"theta needs |Q| > 1, got |Q| = {abs(Q)}")
    if z == 0:
        raise DomainError("theta is not defined at z = 0")


def log_quasiperiod_factor(Q: complex, k: int, z: complex) -> complex:
    """Logarithm (some branch) of :func:`theta_quasiperiod_factor`."""
    return (k * (k - 1) // 2) * clog(Q) + k * clog(z)


def theta_quasiperiod_factor(Q: complex, k: int, z: complex) -> complex:
    """Exact ratio ``Theta_Q(Q**k z) / Theta_Q(z) = Q**(k(k-1)/2) z**k``."""
    _check(Q, z)
    if k == 0:
        return 1 + 0j
    return cmath.exp(log_quasiperiod_factor(Q, k, z))


def _reduction_index(Q: complex, z: complex) -> int:
    """k such that ``z / Q**k`` lies in the fundamental annulus."""
    return math.floor(math.log(abs(z)) / math.log(abs(Q)) - 0.5)


def theta_series(Q: complex, z: complex, ctx: NumericContext = DEFAULT_CONTEXT) -> complex:
    """Direct adaptive bilateral summation (no reduction).

    Each side stops once three consecutive terms fall below ``term_tol`` times
    the current partial-sum magnitude.
    """
    _check(Q, z)
    logQ, logz = clog(Q), clog(z)
    total = 1 + 0j
    terms = 1
    for sign in (1, -1):
        small = 0
        ell = sign
        while True:
            t = cmath.exp(-(ell * (ell + 1) // 2) * logQ + ell * logz)
            total += t
            terms += 1
            if abs(t) < ctx.term_tol * abs(total):
                small += 1
                if small == 3:
                    break
            else:
                small = 0
            if terms > ctx.max_terms:
                raise ConvergenceError(f"theta series did not converge within {ctx.max_terms} terms")
            ell += sign
    return total


def log_theta(Q: complex, z: complex, ctx: NumericContext = DEFAULT_CONTEXT) -> complex:
    """Logarithm (some branch) of ``Theta_Q(z)``; ``-inf`` real part on exact zeros."""
    _check(Q, z)
    k = _reduction_index(Q, z)
    z0 = z / cmath.exp(k * clog(Q)) if k else z
    t0 = theta_series(Q, z0, ctx)
    base = log_quasiperiod_factor(Q, k, z0) if k else 0j
    if t0 == 0:
        return complex(-math.inf, 0)
    return base + cmath.log(t0)


def theta_eval(Q: complex, z: complex, ctx: NumericContext = DEFAULT_CONTEXT) -> complex:
    """``Theta_Q(z)``, evaluated in the fundamental annulus and transported back."""
    _check(Q, z)
    k = _reduction_index(Q, z)
    if k == 0:
        return theta_series(Q, z, ctx)
    z0 = z / cmath.exp(k * clog(Q))
    return theta_quasiperiod_factor(Q, k, z0) * theta_series(Q, z0, ctx)


def theta_product(Q: complex, z: complex, ctx: NumericContext = DEFAULT_CONTEXT) -> complex:
    """Jacobi triple product ``prod_l (1-Q**(-l-1))(1+Q**(-l-1) z)(1+Q**(-l)/z)``.

    Independent of :func:`theta_series`; meant for cross-validation near the
    unit annulus.
    """
    _check(Q, z)
    acc = 1 + 0j
    invQ = 1 / complex(Q)
    p = 1 + 0j  # Q**(-l)
    for _ in range(ctx.max_terms):
        p_next = p * invQ
        f = (1 - p_next) * (1 + p_next * z) * (1 + p / z)
        acc *= f
        if abs(f - 1) < ctx.term_tol and abs(p) * max(1, 1 / abs(z)) < ctx.term_tol:
            return acc
        p = p_next
    raise ConvergenceError("triple product did not converge")


def log_theta_real(R: float, t: float, ctx: NumericContext = DEFAULT_CONTEXT) -> float:
    """``log Theta_R(t)`` for real ``R > 1`` and ``t > 0`` (all terms positive)."""
    return log_theta(complex(R), complex(t), ctx).real
