"""Two-slope normal forms ``B = (E_{-n,d,a} (x) U_r, W; 0, 1)`` and their formal solutions.

Rows of the ``(m-1)``-vector are ordered as in the Kronecker product
``E (x) U_r``: row ``b*r + j`` is entry ``j`` of block ``b`` (``0 <= b < d``,
``0 <= j < r``). The formal gauge column ``H`` satisfies::

    sigma_q H = (E_{-n,d,a} (x) U_r) H + s W

where the forcing sign ``s`` is fixed by :func:`select_forcing_sign` from the
defining gauge identity.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
import sympy

from .numerics import QSumError
from .series import TruncatedSeries
from .transforms import Direction, Slope

Z = sympy.Symbol("z")


class SingularSystemError(QSumError):
    pass


@dataclass(frozen=True)
class SystemSpec:
    q: complex
    slope: Slope
    a: complex
    r: int
    W: tuple  # m-1 tuples of n complex coefficients, lowest degree first

    def __post_init__(self):
        object.__setattr__(self, "q", complex(self.q))
        object.__setattr__(self, "a", complex(self.a))
        if abs(self.q) <= 1:
            raise ValueError(f"|q| must exceed 1, got {abs(self.q)}")
        if self.a == 0:
            raise ValueError("a must be nonzero")
        if self.r < 1:
            raise ValueError("Jordan block size r must be positive")
        n = self.slope.n
        W = tuple(tuple(complex(c) for c in row) for row in self.W)
        if len(W) != self.size:
            raise ValueError(f"W has {len(W)} entries but m-1 = d*r = {self.size}")
        for i, row in enumerate(W):
            if len(row) > n:
                raise ValueError(f"W[{i}] has {len(row)} coefficients; degree must be < n = {n}")
        W = tuple(row + (0j,) * (n - len(row)) for row in W)
        object.__setattr__(self, "W", W)

    @property
    def n(self) -> int:
        return self.slope.n

    @property
    def d(self) -> int:
        return self.slope.d

    @property
    def size(self) -> int:
        """m - 1 = d*r."""
        return self.slope.d * self.r

    @property
    def m(self) -> int:
        return self.size + 1

    def row(self, b: int, j: int) -> int:
        return b * self.r + j

    def W_poly(self, i: int, x: complex) -> complex:
        return sum(c * x ** k for k, c in enumerate(self.W[i]))


def index_parts(i: int, r: int) -> tuple[int, int]:
    """``(i_r, i_q)`` with ``i = i_q*r + i_r`` and ``0 <= i_r < r``."""
    i_q, i_r = divmod(i, r)
    return i_r, i_q


def jordan_block(r: int) -> np.ndarray:
    return np.eye(r, dtype=int) + np.eye(r, k=1, dtype=int)


def jordan_power(r: int, p: int) -> np.ndarray:
    """``U_r**p`` for any integer p: entry (j, j+t) is binom(p, t) (generalised for p < 0)."""
    out = np.zeros((r, r), dtype=object)
    for j in range(r):
        for t in range(r - j):
            out[j, j + t] = _gbinom(p, t)
    return out


def _gbinom(p: int, t: int) -> int:
    num = 1
    for s in range(t):
        num *= p - s
    return num // math.factorial(t)


# --- symbolic matrices -----------------------------------------------------

def companion(n: int, d: int, a) -> sympy.Matrix:
    """``E_{n,d,a}``: ones on the superdiagonal and ``a z**n`` in the bottom-left corner."""
    E = sympy.zeros(d, d)
    for i in range(d - 1):
        E[i, i + 1] = 1
    E[d - 1, 0] = E[d - 1, 0] + a * Z ** n
    return E


def _sym(c: complex):
    c = complex(c)
    return sympy.nsimplify(c.real, rational=True) + sympy.I * sympy.nsimplify(c.imag, rational=True)


def block_matrix(spec: SystemSpec) -> sympy.Matrix:
    """``E_{-n,d,a} (x) U_r``."""
    E = companion(-spec.n, spec.d, _sym(spec.a))
    U = sympy.Matrix(jordan_block(spec.r).tolist())
    return sympy.kronecker_product(E, U)


def build_B(spec: SystemSpec) -> sympy.Matrix:
    M = block_matrix(spec)
    s = spec.size
    B = sympy.zeros(s + 1, s + 1)
    B[:s, :s] = M
    for i in range(s):
        B[i, s] = sum(_sym(c) * Z ** k for k, c in enumerate(spec.W[i]))
    B[s, s] = 1
    return B


def gauge_action(P: sympy.Matrix, A: sympy.Matrix, q) -> sympy.Matrix:
    """``(sigma_q P) A P**-1`` over rational functions in z."""
    if sympy.simplify(P.det()) == 0:
        raise SingularSystemError("gauge transformation is not invertible")
    Pq = P.subs(Z, q * Z)
    return (Pq * A * P.inv()).applyfunc(sympy.simplify)


@lru_cache(maxsize=None)
def select_forcing_sign() -> int:
    """Sign s in ``sigma_q H = M H + s W`` implied by ``B = (I, H; 0, 1)[Diag(M, 1)]``.

    Decided on a 1x1 witness: constant M = c, H = h(z) generic.
    """
    c, q = sympy.symbols("c q", nonzero=True)
    h = sympy.Function("h")
    P = sympy.Matrix([[1, h(Z)], [0, 1]])
    Pq = sympy.Matrix([[1, h(q * Z)], [0, 1]])
    B = (Pq * sympy.diag(c, 1) * P.inv()).applyfunc(sympy.expand)
    W = B[0, 1]
    if sympy.simplify(W - (h(q * Z) - c * h(Z))) == 0:
        return 1
    if sympy.simplify(W + (h(q * Z) - c * h(Z))) == 0:
        return -1
    raise AssertionError("gauge witness matches neither sign convention")


# --- forbidden directions ---------------------------------------------------

def sigma_forbidden(direction: Direction, spec: SystemSpec, K: int = 64,
                    tol: float = 1e-10) -> tuple[bool, float]:
    """Is ``lam**n`` in ``a q**(dZ)`` (scanned over |k| <= K)? Returns (forbidden, margin)."""
    lam_n = direction.lam ** spec.n
    Qd = spec.q ** spec.d
    margin = math.inf
    for k in range(-K, K + 1):
        t = spec.a * Qd ** k
        if t == 0 or not np.isfinite(abs(t)):
            continue
        margin = min(margin, abs(lam_n - t) / abs(t))
    return margin < tol, margin


# --- formal solution ---------------------------------------------------------

def _forcing_sign(sign):
    return select_forcing_sign() if sign is None else sign


def _equations(spec: SystemSpec, N: int, sign: int):
    """Yield sparse rows ``({col: coeff}, rhs)`` of the coefficient system, one per (row, k)."""
    n, d, r = spec.n, spec.d, spec.r
    col = lambda R, k: R * (N + 1) + k  # noqa: E731
    q, a = spec.q, spec.a
    for b in range(d):
        for j in range(r):
            R = spec.row(b, j)
            for k in range(N + 1):
                eq = {}
                if b < d - 1:
                    eq[col(R, k)] = q ** k
                    eq[col(spec.row(b + 1, j), k)] = -1
                    if j + 1 < r:
                        eq[col(spec.row(b + 1, j + 1), k)] = -1
                    rhs = sign * spec.W[R][k] if k < n else 0j
                else:
                    if k >= n:
                        eq[col(R, k - n)] = q ** (k - n)
                    eq[col(spec.row(0, j), k)] = eq.get(col(spec.row(0, j), k), 0) - a
                    if j + 1 < r:
                        eq[col(spec.row(0, j + 1), k)] = eq.get(col(spec.row(0, j + 1), k), 0) - a
                    rhs = sign * spec.W[R][k - n] if n <= k < 2 * n else 0j
                yield eq, rhs


def formal_system(spec: SystemSpec, N: int, sign: int | None = None):
    """Sparse matrix and right-hand side for all coefficients of all entries through order N."""
    sign = _forcing_sign(sign)
    size = spec.size * (N + 1)
    rows, cols, vals, rhs = [], [], [], []
    for i, (eq, b) in enumerate(_equations(spec, N, sign)):
        for c, v in eq.items():
            rows.append(i)
            cols.append(c)
            vals.append(v)
        rhs.append(b)
    A = sp.csc_matrix((np.array(vals, dtype=complex), (rows, cols)), shape=(size, size))
    return A, np.array(rhs, dtype=complex)


def solve_formal(spec: SystemSpec, N: int, sign: int | None = None) -> list[TruncatedSeries]:
    """Unique power-series solution through order N by one global sparse solve.

    Unknowns are column-scaled by a growth estimate so that the LU factorisation
    works on O(1) quantities.
    """
    if N < spec.n:
        raise ValueError("truncation order must be at least n")
    A, rhs = formal_system(spec, N, sign)
    scale = _growth_scale(spec, N)
    D = sp.diags(scale)
    lu = spla.splu((A @ D).tocsc())
    piv = lu.U.diagonal()
    if np.any(piv == 0) or not np.all(np.isfinite(piv)):
        raise SingularSystemError("formal coefficient system is singular")
    x = lu.solve(rhs) * scale
    if not np.all(np.isfinite(x)):
        raise OverflowError("formal coefficients overflow double precision; lower N or |q|")
    return [TruncatedSeries(x[R * (N + 1):(R + 1) * (N + 1)], "z") for R in range(spec.size)]


def _growth_scale(spec: SystemSpec, N: int) -> np.ndarray:
    # |h_k| ~ |q|**(d k^2 / 2n) / |a|**(k/n)
    k = np.arange(N + 1)
    logs = spec.d * k * (k - 1) / (2 * spec.n) * math.log(abs(spec.q)) - k / spec.n * math.log(abs(spec.a))
    logs = np.clip(logs, -700, 700)
    return np.tile(np.exp(logs), spec.size)


# exact oracle ------------------------------------------------------------------

def _gauss(c) -> sympy.Expr:
    from sympy.polys.domains import QQ_I, QQ
    c = complex(c)
    fr, fi = Fraction(c.real), Fraction(c.imag)
    return QQ_I(QQ(fr.numerator, fr.denominator), QQ(fi.numerator, fi.denominator))


def solve_formal_exact(spec: SystemSpec, N: int, sign: int | None = None) -> list[list]:
    """Exact Gaussian-rational solution by forward substitution in k (independent of the sparse solve).

    Inputs are taken as the exact binary rationals of their float values.
    """
    from sympy.polys.domains import QQ_I
    sign = _forcing_sign(sign)
    n, d, r = spec.n, spec.d, spec.r
    q, a = _gauss(spec.q), _gauss(spec.a)
    W = [[_gauss(c) for c in row] for row in spec.W]
    zero = QQ_I.zero
    s = QQ_I(sign, 0)
    h = [[zero] * (N + 1) for _ in range(spec.size)]
    qpow = [QQ_I.one]
    for _ in range(N + 1):
        qpow.append(qpow[-1] * q)
    for k in range(N + 1):
        # corner rows: -a U h[0,k] = s W_{d-1}[k-n] - q^(k-n) h[d-1,k-n]
        rhs = []
        for j in range(r):
            R = spec.row(d - 1, j)
            v = zero
            if k >= n:
                v = v - qpow[k - n] * h[R][k - n]
                if k < 2 * n:
                    v = v + s * W[R][k - n]
            rhs.append(v)
        for j in reversed(range(r)):
            v = rhs[j] / (-a)
            if j + 1 < r:
                v = v - h[spec.row(0, j + 1)][k]
            h[spec.row(0, j)][k] = v
        # q^k h[b,k] - U h[b+1,k] = s W_b[k]
        for b in range(d - 1):
            for j in reversed(range(r)):
                R = spec.row(b, j)
                v = qpow[k] * h[R][k] - (s * W[R][k] if k < n else zero)
                if j + 1 < r:
                    v = v - h[spec.row(b + 1, j + 1)][k]
                h[spec.row(b + 1, j)][k] = v
    return h


def exact_residual(spec: SystemSpec, h: Sequence[Sequence], upto: int, sign: int | None = None) -> list:
    """Exact residuals of the coefficient equations (corner rows multiplied by z**n) through ``upto``."""
    from sympy.polys.domains import QQ_I
    sign = _forcing_sign(sign)
    n, d, r = spec.n, spec.d, spec.r
    q, a = _gauss(spec.q), _gauss(spec.a)
    W = [[_gauss(c) for c in row] for row in spec.W]
    s = QQ_I(sign, 0)
    zero = QQ_I.zero
    out = []
    for b in range(d):
        for j in range(r):
            R = spec.row(b, j)
            for k in range(upto + 1):
                if b < d - 1:
                    lhs = q ** k * h[R][k]
                    rhs = h[spec.row(b + 1, j)][k] + (h[spec.row(b + 1, j + 1)][k] if j + 1 < r else zero)
                    rhs = rhs + (s * W[R][k] if k < n else zero)
                else:
                    # coefficient k of sigma_q h = a z^-n (U h_0) + s W, i.e. index k+n of the z^n-multiplied form
                    kk = k + n
                    lhs = q ** k * h[R][k]
                    rhs = a * (h[spec.row(0, j)][kk] + (h[spec.row(0, j + 1)][kk] if j + 1 < r else zero))
                    rhs = rhs + (s * W[R][k] if k < n else zero)
                out.append(lhs - rhs)
    return out


def is_exact_zero(x) -> bool:
    """Zero test for Gaussian rationals (``x == 0`` is unreliable across ground types)."""
    return x.x == 0 and x.y == 0


def to_series(h_exact: Sequence[Sequence]) -> list[TruncatedSeries]:
    return [TruncatedSeries([complex(float(c.x), float(c.y)) for c in row], "z") for row in h_exact]


# --- d-step transfer -----------------------------------------------------------

@dataclass(frozen=True)
class TransferData:
    """Scalar q**d-difference chain for the rows of one block.

    With ``kappa = q**(corner_shift*n)`` the block rows satisfy::

        kappa z**n sigma_q**d H_b = a U_r**d H_b - w

    so that in chain form ``c[j][j'] = a * binom(d, j'-j)`` for ``j' > j``.
    """

    block: int
    corner_shift: int
    coupling: np.ndarray  # U_r**d, integer
    c: np.ndarray  # r x r complex, strictly upper
    w: tuple  # r tuples of 2n complex coefficients (degree < 2n)
    a: complex
    n: int
    d: int

    @property
    def multiplier(self) -> str:
        return f"a*q^(-{self.corner_shift}*n)*z^(-n)"

    def w_section(self, j: int, ell: int) -> TruncatedSeries:
        return TruncatedSeries(self.w[j][ell::self.n], "w")


def d_step_transfer(spec: SystemSpec, block: int = 0, sign: int | None = None) -> TransferData:
    """Compose d single steps of ``sigma_q H = (E (x) U) H + s W`` starting from ``block``.

    Tracks ``H_b(q**d z) = M H_cur(q**e z) + F(z)`` until the walk returns to block b.
    """
    sign = _forcing_sign(sign)
    n, d, r = spec.n, spec.d, spec.r
    q = spec.q
    U = jordan_block(r).astype(complex)
    M = np.eye(r, dtype=complex)
    zpow = 0  # power of z multiplying M (0 or -n)
    scal = 1 + 0j
    corner_shift = None
    # F as r polynomials with exponents offset by +n (so that z^-n * poly stays polynomial)
    F = np.zeros((r, 2 * n), dtype=complex)
    cur, e = block, d
    for _ in range(d):
        arg = q ** (e - 1)  # evaluate W_cur at q^(e-1) z
        Wc = np.array([[spec.W[spec.row(cur, j)][k] * arg ** k for k in range(n)] for j in range(r)])
        contrib = scal * (M @ Wc) * sign
        if zpow == 0:
            F[:, n:] += contrib
        else:
            F[:, :n] += contrib
        if cur < d - 1:
            M = M @ U
            cur += 1
        else:
            corner_shift = e - 1
            M = M @ U
            scal = scal * spec.a * arg ** (-n)
            zpow = -n
            cur = 0
        e -= 1
    assert cur == block and e == 0 and corner_shift is not None
    kappa = q ** (corner_shift * n)
    # H_b(q^d z) = scal z^-n M H_b(z) + z^-n F(z);  times kappa z^n, scal*kappa = a
    w = -kappa * F
    Ud = jordan_power(r, d).astype(int)
    c = np.zeros((r, r), dtype=complex)
    for j in range(r):
        for jp in range(j + 1, r):
            c[j, jp] = spec.a * Ud[j, jp]
    return TransferData(block, corner_shift, Ud, c, tuple(tuple(row) for row in w), spec.a, n, d)


def apply_block(spec: SystemSpec, z: complex, H) -> np.ndarray:
    """Numeric ``(E_{-n,d,a} (x) U_r)(z) @ H``."""
    H = np.asarray(H, dtype=complex)
    r, d = spec.r, spec.d
    out = np.empty(spec.size, dtype=complex)
    for b in range(d):
        src = b + 1 if b < d - 1 else 0
        fac = 1.0 if b < d - 1 else spec.a * complex(z) ** (-spec.n)
        for j in range(r):
            v = H[spec.row(src, j)]
            if j + 1 < r:
                v = v + H[spec.row(src, j + 1)]
            out[spec.row(b, j)] = fac * v
    return out


def forcing(spec: SystemSpec, z: complex) -> np.ndarray:
    return np.array([spec.W_poly(i, z) for i in range(spec.size)], dtype=complex)
