"""Fixed-branch complex powers and global numeric tolerances."""
from __future__ import annotations

import cmath
from dataclasses import dataclass


class QSumError(Exception):
    """Base class for errors raised by this package."""


class DomainError(QSumError, ValueError):
    pass


class ConvergenceError(QSumError, ArithmeticError):
    pass


class PoleProximityError(QSumError, ArithmeticError):
    """Evaluation point too close to a pole; ``nearest_pole`` holds the culprit."""

    def __init__(self, message: str, nearest_pole: complex | None = None, entry: int | None = None):
        super().__init__(message)
        self.nearest_pole = nearest_pole
        self.entry = entry


@dataclass(frozen=True)
class NumericContext:
    term_tol: float = 1e-17
    test_tol: float = 1e-10
    max_terms: int = 4000
    eval_radius_guard: float = 1e-6

    def __post_init__(self):
        if not (0 < self.term_tol < self.test_tol):
            raise ValueError("need 0 < term_tol < test_tol")
        if self.max_terms < 16:
            raise ValueError("max_terms must be at least 16")
        if self.eval_radius_guard <= 0:
            raise ValueError("eval_radius_guard must be positive")


DEFAULT_CONTEXT = NumericContext()


def clog(b: complex) -> complex:
    """Principal logarithm, argument in (-pi, pi]."""
    b = complex(b)
    if b == 0:
        raise DomainError("log(0) is undefined")
    # cmath.log gives arg in [-pi, pi]; fold -pi (negative zero imag) onto +pi
    out = cmath.log(b)
    if out.imag == -cmath.pi:
        out = complex(out.real, cmath.pi)
    return out


def cpow(b: complex, alpha: complex) -> complex:
    """``exp(alpha * Log b)`` on the principal branch; ``0**alpha = 0`` when Re(alpha) > 0."""
    b = complex(b)
    alpha = complex(alpha)
    if b == 0:
        if alpha.real > 0:
            return 0j
        raise DomainError(f"0 raised to a power with Re <= 0 ({alpha})")
    if alpha == 0:
        return 1 + 0j
    if alpha == 1:
        return b
    return cmath.exp(alpha * clog(b))


def ipow(b: complex, k: int) -> complex:
    """Integer power through the logarithm, safe for huge |k| (no branch dependence)."""
    if k == 0:
        return 1 + 0j
    return cmath.exp(k * clog(b))


def nth_root(b: complex, n: int) -> complex:
    return cpow(b, 1.0 / n)
