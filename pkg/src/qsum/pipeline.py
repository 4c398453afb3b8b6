"""Borel-plane closed forms and Laplace summation of the formal gauge column.

Chain rows (block 0) are summed; the other blocks follow from the block
relations ``H_{b+1}(z) = U**-1 (H_b(qz) - s W_b(z))``.

Two summation routes are available for the chain rows:

``"laplace"``
    ``sum_l z**l L(g_l)`` with ``g_l`` the rational Borel function of section l.
``"theta"``
    ``H_0 = E(z) / Theta_Q(lam/z)**n`` with ``E`` a Laurent series whose
    coefficients solve ``(a U**d - lam**n Q**(k-n)) e_k = G_k``, where
    ``G = w * Theta_Q(lam/z)**n``. Exact for every n.

For n = 1 both routes give the same function. For n > 1 the literal
transforms are not additive and only the theta route solves the system, so it
is the default there.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .numerics import DEFAULT_CONTEXT, NumericContext, PoleProximityError, QSumError, clog, cpow, ipow
from .series import TruncatedSeries
from .system import (
    SystemSpec,
    TransferData,
    d_step_transfer,
    index_parts,
    jordan_power,
    select_forcing_sign,
    sigma_forbidden,
)
from .theta import theta_eval
from .transforms import Direction, nearest_spiral_point, qborel_literal, qlaplace_literal


class ForbiddenDirectionError(QSumError, ValueError):
    pass


@dataclass(frozen=True)
class RationalBorelFn:
    """``numerator(zeta) / (root - beta*zeta)**power``; numerator coefficients ascending."""

    numerator: tuple
    root: complex
    beta: complex
    power: int

    @property
    def pole(self) -> complex:
        return self.root / self.beta

    def __call__(self, zeta: complex) -> complex:
        num = 0j
        for c in reversed(self.numerator):
            num = num * zeta + c
        if num == 0:
            return 0j
        return num / (self.root - self.beta * zeta) ** self.power

    def taylor(self, N: int) -> TruncatedSeries:
        """Taylor coefficients at 0 through order N."""
        # 1/(root - beta zeta)^p = root^-p sum_k binom(p+k-1, k) (beta/root)^k zeta^k
        num = np.zeros(N + 1, dtype=complex)
        m = min(len(self.numerator), N + 1)
        num[:m] = self.numerator[:m]
        if self.power == 0:
            return TruncatedSeries(num, "zeta")
        ratio = self.beta / self.root
        k = np.arange(N + 1)
        binom = np.array([math.comb(self.power + kk - 1, kk) for kk in k], dtype=float)
        inv = binom * ratio ** k / self.root ** self.power
        return TruncatedSeries(np.convolve(num, inv)[: N + 1], "zeta")


def _poly_mul(a, b):
    return np.convolve(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def _poly_add(a, b):
    out = np.zeros(max(len(a), len(b)), dtype=complex)
    out[: len(a)] += a
    out[: len(b)] += b
    return out


def borel_plane_rational(spec: SystemSpec, transfer: TransferData, ell: int) -> list[RationalBorelFn]:
    """Solve the Borel-plane chain by back-substitution from the last row of the block::

        (a**(1/n) - beta zeta) g_j = B(w_(l))_j - sum_{j'>j} c_jj'**(1/n) g_j'

    with ``beta = q**(l d/n + corner_shift)``.
    """
    n, d, r = spec.n, spec.d, spec.r
    if not 0 <= ell < n:
        raise ValueError(f"section index {ell} outside [0, {n})")
    root = cpow(spec.a, 1.0 / n)
    beta = cpow(spec.q, ell * d / n) * ipow(spec.q, transfer.corner_shift)
    lin = np.array([root, -beta])
    out: list[RationalBorelFn | None] = [None] * r
    for j in reversed(range(r)):
        bw = qborel_literal(spec.slope, transfer.w_section(j, ell), spec.q).as_array()
        deps = [(cpow(transfer.c[j, jp], 1.0 / n), out[jp]) for jp in range(j + 1, r) if transfer.c[j, jp] != 0]
        P = max((g.power for _, g in deps), default=0)
        num = _poly_mul(bw, np.polynomial.polynomial.polypow(lin, P))
        for cn, g in deps:
            num = _poly_add(num, -cn * _poly_mul(g.numerator, np.polynomial.polynomial.polypow(lin, P - g.power)))
        out[j] = RationalBorelFn(tuple(np.trim_zeros(num, "b")) or (0j,), root, beta, P + 1)
    return out


def taylor_agreement(g: RationalBorelFn, series: TruncatedSeries) -> float:
    """Relative mismatch between ``g`` and a truncated Borel series.

    Coefficients are weighted by ``R**k`` with ``R = |pole|`` so that both sides
    are O(1) across orders, and the error is relative to the largest weighted
    coefficient.
    """
    N = series.trunc_order
    t = g.taylor(N).as_array()
    s = series.as_array()
    w = abs(g.pole) ** np.arange(N + 1)
    scale = max(float(np.max(np.abs(s) * w)), float(np.max(np.abs(t) * w)))
    if scale == 0:
        return 0.0
    return float(np.max(np.abs(t - s) * w) / scale)


# --- chain-row evaluators ------------------------------------------------------------

class LaplaceChain:
    """Chain rows of one block as ``sum_l z**l L(g_l)`` in a given direction."""

    def __init__(self, spec: SystemSpec, direction: Direction, ctx: NumericContext, block: int = 0):
        self.spec, self.direction, self.ctx = spec, direction, ctx
        self.transfer = d_step_transfer(spec, block)
        self.borel = [borel_plane_rational(spec, self.transfer, ell) for ell in range(spec.n)]

    def __call__(self, z: complex) -> np.ndarray:
        spec = self.spec
        out = np.zeros(spec.r, dtype=complex)
        for ell in range(spec.n):
            for j in range(spec.r):
                g = self.borel[ell][j]
                if g.numerator == (0j,):
                    continue
                out[j] += z ** ell * qlaplace_literal(spec.slope, self.direction, g, spec.q, z, self.ctx)
        return out


class ThetaChain:
    """Chain rows of block 0 as ``E(z) / Theta_Q(lam/z)**n`` (Laurent route)."""

    def __init__(self, spec: SystemSpec, direction: Direction, ctx: NumericContext, M: int | None = None):
        self.spec, self.direction, self.ctx = spec, direction, ctx
        n, d, r = spec.n, spec.d, spec.r
        self.transfer = tr = d_step_transfer(spec, 0)
        Q = spec.q ** d
        self.Q = Q
        lam = direction.lam
        logQ, loglam = clog(Q), clog(lam)
        if M is None:
            # keep Theta terms down to ~1e-40 of the peak
            M = int(math.ceil(math.sqrt(2 * 92 / math.log(abs(Q))))) + 2 + int(abs(math.log(abs(lam))) / math.log(abs(Q)))
        ms = np.arange(-M, M + 1)
        # coefficient of z**(-m) in Theta_Q(lam/z)
        t = np.array([cmath.exp(-(m * (m + 1) // 2) * logQ + m * loglam) for m in ms])
        power = np.array([1 + 0j])
        for _ in range(n):
            power = np.convolve(power, t)
        # power[i] is the coefficient of z**(-(i - n*M)) ... index i <-> exponent n*M - i
        nM = n * M
        exps = nM - np.arange(len(power))
        kmin, kmax = int(exps.min()), int(exps.max()) + 2 * n
        self.ks = np.arange(kmin, kmax + 1)
        G = np.zeros((r, len(self.ks)), dtype=complex)
        for j in range(r):
            for deg, wc in enumerate(tr.w[j]):
                if wc == 0:
                    continue
                G[j, exps + deg - kmin] += wc * power
        Ud = jordan_power(r, d).astype(complex)
        E = np.zeros_like(G)
        lam_n = lam ** n
        for idx, k in enumerate(self.ks):
            A = spec.a * Ud - lam_n * ipow(Q, int(k) - n) * np.eye(r)
            E[:, idx] = _solve_upper(A, G[:, idx])
        self.E = E

    def __call__(self, z: complex) -> np.ndarray:
        spec = self.spec
        Q = self.Q
        lam = self.direction.lam
        z = complex(z)
        zk = np.exp(self.ks * clog(z))
        Ez = self.E @ zk
        th = theta_eval(Q, lam / z, self.ctx)
        if th == 0:
            raise PoleProximityError(f"z = {z} is a pole", nearest_pole=z)
        return Ez / th ** spec.n


def _solve_upper(A: np.ndarray, b: np.ndarray) -> np.ndarray:
    r = len(b)
    x = np.zeros(r, dtype=complex)
    for j in reversed(range(r)):
        x[j] = (b[j] - A[j, j + 1:] @ x[j + 1:]) / A[j, j]
    return x


# --- assembled solution ----------------------------------------------------------------

@dataclass(frozen=True)
class PoleSpiral:
    base: complex
    ratio: complex
    order: int

    def points(self, ks) -> list[complex]:
        return [self.base * self.ratio ** k for k in ks]


def predicted_poles(spec: SystemSpec, direction: Direction, i: int) -> PoleSpiral:
    """Pole spiral of row ``i`` (1-based) of the summed gauge column.

    Row ``i`` lies in block ``b = (i-1) // r``; its poles sit on
    ``-lam q**(-b) q**(dZ)`` with order at most n.
    """
    if not 0 < i < spec.m:
        raise ValueError(f"row index {i} outside 1..{spec.m - 1}")
    _, b = index_parts(i - 1, spec.r)
    return PoleSpiral(-direction.lam * ipow(spec.q, -b), spec.q ** spec.d, spec.n)


class MeromorphicSolution:
    """Entry evaluators for the summed column ``H^[lam]``."""

    def __init__(self, spec: SystemSpec, direction: Direction, chain: Callable[[complex], np.ndarray],
                 ctx: NumericContext, route: str, sign: int):
        self.spec, self.direction, self.chain, self.ctx = spec, direction, chain, ctx
        self.route = route
        self.sign = sign
        self.spirals = [predicted_poles(spec, direction, i + 1) for i in range(spec.size)]
        self.validity_radius = abs(direction.lam) / abs(spec.q)
        r = spec.r
        self._Uinv = [jordan_power(r, -p).astype(complex) for p in range(spec.d)]

    def nearest_pole(self, z: complex) -> tuple[complex, float, int]:
        best = None
        for i, sp in enumerate(self.spirals):
            p, rel = nearest_spiral_point(z, sp.base, sp.ratio)
            if best is None or rel < best[1]:
                best = (p, rel, i)
        return best

    def block(self, b: int, z: complex) -> np.ndarray:
        """``H_b(z) = U**-b H_0(q**b z) - s sum_{t<b} U**-(b-t) W_t(q**(b-1-t) z)``."""
        spec = self.spec
        q = spec.q
        try:
            v = self._Uinv[b] @ self.chain(q ** b * z)
        except PoleProximityError as exc:
            exc.entry = spec.row(b, 0)
            if exc.nearest_pole is not None:
                exc.nearest_pole = exc.nearest_pole / q ** b
            raise
        for t in range(b):
            Wt = np.array([spec.W_poly(spec.row(t, j), q ** (b - 1 - t) * z) for j in range(spec.r)])
            v = v - self.sign * (self._Uinv[b - t] @ Wt)
        return v

    def __call__(self, z: complex) -> np.ndarray:
        return evaluate_solution(self, z)


def evaluate_solution(sol: MeromorphicSolution, z: complex) -> np.ndarray:
    z = complex(z)
    p, rel, i = sol.nearest_pole(z)
    if rel < sol.ctx.eval_radius_guard:
        raise PoleProximityError(f"z = {z} is within {rel:.3g} (relative) of the pole {p} of entry {i}",
                                 nearest_pole=p, entry=i)
    return np.concatenate([sol.block(b, z) for b in range(sol.spec.d)])


def admit_direction(spec: SystemSpec, direction: Direction, ctx: NumericContext, K: int = 64) -> Direction:
    forbidden, margin = sigma_forbidden(direction, spec, K, tol=ctx.test_tol)
    if forbidden or margin <= 10 * ctx.test_tol:
        raise ForbiddenDirectionError(
            f"direction lam = {direction.lam} lies in the forbidden set Sigma "
            f"(lam^n in a q^(dZ); relative margin {margin:.3g})")
    return Direction(direction.lam, spec.d, margin)


def summation_assemble(spec: SystemSpec, direction: Direction, ctx: NumericContext = DEFAULT_CONTEXT,
                       route: str | None = None) -> MeromorphicSolution:
    direction = admit_direction(spec, direction, ctx)
    if route is None:
        route = "laplace" if spec.n == 1 else "theta"
    if route == "laplace":
        chain = LaplaceChain(spec, direction, ctx)
    elif route == "theta":
        chain = ThetaChain(spec, direction, ctx)
    else:
        raise ValueError(f"unknown summation route {route!r}")
    return MeromorphicSolution(spec, direction, chain, ctx, route, select_forcing_sign())


# --- alternative assemblies (cross-construction) --------------------------------------------

class LiteralAssembly:
    """The displayed assembly: entry i is ``sum_l sigma_q**(i_r) (z**l L(B(h_{i_q r + 1, (l)})))``.

    ``(i_r, i_q) = index_parts(i, r)`` for the 0-based entry index. The Borel
    transform of the source row comes from its own block chain.
    """

    def __init__(self, spec: SystemSpec, direction: Direction, ctx: NumericContext = DEFAULT_CONTEXT):
        self.spec, self.direction, self.ctx = spec, admit_direction(spec, direction, ctx), ctx
        self._chains = {b: LaplaceChain(spec, self.direction, ctx, block=b) for b in range(spec.d)}

    def __call__(self, z: complex) -> np.ndarray:
        spec = self.spec
        out = np.zeros(spec.size, dtype=complex)
        for i in range(spec.size):
            i_r, i_q = index_parts(i, spec.r)
            src = i_q * spec.r  # 0-based row of h_{i_q r + 1}
            b, j = divmod(src, spec.r)
            out[i] = self._chains[b](spec.q ** i_r * z)[j]
        return out


class DirectBlockAssembly:
    """Each block summed on its own chain in the shifted direction ``lam q**(-b)``."""

    def __init__(self, spec: SystemSpec, direction: Direction, ctx: NumericContext = DEFAULT_CONTEXT):
        self.spec = spec
        direction = admit_direction(spec, direction, ctx)
        self._chains = [LaplaceChain(spec, Direction(direction.lam * ipow(spec.q, -b), spec.d), ctx, block=b)
                        for b in range(spec.d)]

    def __call__(self, z: complex) -> np.ndarray:
        return np.concatenate([ch(z) for ch in self._chains])
