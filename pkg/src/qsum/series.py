"""Truncated power series, the mod-n section operators and coefficientwise dilation."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

VARS = ("z", "w", "zeta")


@dataclass(frozen=True)
class TruncatedSeries:
    """Coefficients ``coeffs[k]`` of ``var**k`` known through ``trunc_order = len(coeffs) - 1``."""

    coeffs: tuple
    var: str = "z"

    def __post_init__(self):
        if self.var not in VARS:
            raise ValueError(f"unknown series variable {self.var!r}")
        c = tuple(complex(x) for x in self.coeffs)
        if not c:
            raise ValueError("a truncated series needs at least one coefficient")
        if not all(math.isfinite(x.real) and math.isfinite(x.imag) for x in c):
            raise ValueError("series coefficients must be finite")
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def zeros(cls, N: int, var: str = "z") -> "TruncatedSeries":
        return cls((0j,) * (N + 1), var)

    @property
    def trunc_order(self) -> int:
        return len(self.coeffs) - 1

    def __len__(self):
        return len(self.coeffs)

    def __getitem__(self, k):
        return self.coeffs[k]

    def as_array(self) -> np.ndarray:
        return np.array(self.coeffs, dtype=complex)

    def retag(self, var: str) -> "TruncatedSeries":
        return TruncatedSeries(self.coeffs, var)

    def _check_compatible(self, other: "TruncatedSeries"):
        if other.var != self.var:
            raise ValueError(f"cannot combine series in {self.var} and {other.var}")

    def __add__(self, other: "TruncatedSeries") -> "TruncatedSeries":
        self._check_compatible(other)
        N = min(self.trunc_order, other.trunc_order)
        return TruncatedSeries([self[k] + other[k] for k in range(N + 1)], self.var)

    def __sub__(self, other: "TruncatedSeries") -> "TruncatedSeries":
        return self + other.scale(-1)

    def scale(self, c: complex) -> "TruncatedSeries":
        return TruncatedSeries([c * x for x in self.coeffs], self.var)

    def shift(self, k: int) -> "TruncatedSeries":
        """Multiply by ``var**k`` (k >= 0); the truncation order grows by k."""
        if k < 0:
            raise ValueError("negative shifts leave the power-series ring")
        return TruncatedSeries((0j,) * k + self.coeffs, self.var)

    def __call__(self, x: complex) -> complex:
        """Horner evaluation of the truncated polynomial."""
        acc = 0j
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def allclose(self, other: "TruncatedSeries", rtol: float = 1e-12) -> bool:
        if other.var != self.var or other.trunc_order != self.trunc_order:
            return False
        a, b = self.as_array(), other.as_array()
        scale = np.maximum(np.abs(a), np.abs(b))
        return bool(np.all(np.abs(a - b) <= rtol * np.maximum(scale, 1e-300)))


def section(Y: TruncatedSeries, ell: int, n: int) -> TruncatedSeries:
    """Coefficients ``Y[ell + nu*n]`` as a series in ``w = z**n``."""
    if n < 1:
        raise ValueError("n must be a positive integer")
    if not 0 <= ell < n:
        raise ValueError(f"section index {ell} outside [0, {n})")
    if Y.var != "z":
        raise ValueError("sections are taken of series in z")
    picked = Y.coeffs[ell::n]
    if not picked:
        raise ValueError(f"series of order {Y.trunc_order} has no coefficient of index {ell}")
    return TruncatedSeries(picked, "w")


def recombine(sections: Sequence[TruncatedSeries], n: int) -> TruncatedSeries:
    """Inverse of :func:`section`: interleave n sections back into a series in z.

    The result stops at the first index whose coefficient is not known.
    """
    if len(sections) != n:
        raise ValueError(f"expected {n} sections, got {len(sections)}")
    out = []
    k = 0
    while True:
        nu, ell = divmod(k, n)
        s = sections[ell]
        if nu > s.trunc_order:
            break
        out.append(s[nu])
        k += 1
    return TruncatedSeries(out, "z")


def apply_sigma(Y: TruncatedSeries, q: complex, p: int) -> TruncatedSeries:
    """Coefficientwise dilation ``y(x) -> y(q**p x)``."""
    if q == 0:
        raise ValueError("q must be nonzero")
    if p == 0:
        return Y
    qp = complex(q) ** p
    out = []
    f = 1 + 0j
    for c in Y.coeffs:
        out.append(c * f)
        f *= qp
    return TruncatedSeries(out, Y.var)


def multiply(A: TruncatedSeries, B: TruncatedSeries) -> TruncatedSeries:
    A._check_compatible(B)
    N = min(A.trunc_order, B.trunc_order)
    return TruncatedSeries(np.convolve(A.as_array(), B.as_array())[: N + 1], A.var)
