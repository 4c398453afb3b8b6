import numpy as np
import pytest
import sympy
from hypothesis import given, strategies as st

from qsum.system import (
    SingularSystemError,
    SystemSpec,
    Z,
    block_matrix,
    build_B,
    companion,
    d_step_transfer,
    exact_residual,
    gauge_action,
    index_parts,
    is_exact_zero,
    jordan_power,
    select_forcing_sign,
    sigma_forbidden,
    solve_formal,
    solve_formal_exact,
    to_series,
)
from qsum.transforms import Direction, Slope


def euler(q=2):
    return SystemSpec(q, Slope(1, 1), -1, 1, ((1,),))


def random_spec(rng, n, d, r):
    q = complex(*rng.uniform(-1, 1, 2) * 0.1) + 1.3
    a = complex(*rng.uniform(-1, 1, 2))
    W = [tuple(complex(*rng.uniform(-1, 1, 2)) for _ in range(n)) for _ in range(d * r)]
    return SystemSpec(q, Slope(n, d), a, r, tuple(W))


def test_spec_validation():
    with pytest.raises(ValueError, match=r"\|q\|"):
        SystemSpec(0.5, Slope(1, 1), -1, 1, ((1,),))
    with pytest.raises(ValueError, match="a must"):
        SystemSpec(2, Slope(1, 1), 0, 1, ((1,),))
    with pytest.raises(ValueError, match="m-1"):
        SystemSpec(2, Slope(1, 2), -1, 1, ((1,),))
    with pytest.raises(ValueError, match="degree"):
        SystemSpec(2, Slope(1, 1), -1, 1, ((1, 2),))


def test_W_padded_to_n_coefficients():
    s = SystemSpec(2, Slope(3, 1), 1, 1, ((1,),))
    assert s.W == ((1, 0, 0),)
    assert s.m == 2


@pytest.mark.parametrize("i,r,expected", [(5, 2, (1, 2)), (0, 3, (0, 0)), (3, 3, (0, 1))])
def test_index_parts(i, r, expected):
    assert index_parts(i, r) == expected


@given(st.integers(0, 500), st.integers(1, 9))
def test_index_parts_is_euclidean(i, r):
    ir, iq = index_parts(i, r)
    assert i == iq * r + ir and 0 <= ir < r


@pytest.mark.parametrize("r", [1, 2, 4])
@pytest.mark.parametrize("p", [-3, -1, 2, 5])
def test_jordan_power_matches_matrix_power(r, p):
    U = sympy.Matrix(r, r, lambda i, j: 1 if j in (i, i + 1) else 0)
    assert sympy.Matrix(jordan_power(r, p).tolist()) == U ** p


def test_companion_n1_d2():
    a = sympy.Symbol("a")
    assert companion(-1, 2, a) == sympy.Matrix([[0, 1], [a / Z, 0]])


def test_block_dimensions_double_with_r():
    s = SystemSpec(2, Slope(1, 3), 1, 2, tuple(((0,),) * 6))
    assert block_matrix(s).shape == (6, 6)


def test_build_B_q_euler():
    # the gauge identity fixes the forcing sign to +1, so W = [+1] sits in the corner
    assert build_B(euler()) == sympy.Matrix([[-1 / Z, 1], [0, 1]])


def test_forcing_sign_is_plus():
    assert select_forcing_sign() == 1


def test_gauge_identity_and_singular():
    A = sympy.Matrix([[1, Z], [0, 2]])
    assert gauge_action(sympy.eye(2), A, 3) == A
    with pytest.raises(SingularSystemError):
        gauge_action(sympy.zeros(2, 2), A, 3)


def test_gauge_scalar_rescaling():
    A = sympy.Matrix([[1, 2], [3, 4]])
    assert gauge_action(Z ** 2 * sympy.eye(2), A, 3) == 9 * A


def test_gauge_cocycle():
    q = sympy.Rational(3, 2)
    A = sympy.Matrix([[1, Z], [2, 1 + Z]])
    P1 = sympy.Matrix([[1, Z], [0, 2]])
    P2 = sympy.Matrix([[Z + 1, 0], [1, 1]])
    lhs = gauge_action(P2, gauge_action(P1, A, q), q)
    rhs = gauge_action(P2 * P1, A, q)
    assert (lhs - rhs).applyfunc(sympy.simplify) == sympy.zeros(2, 2)


def test_gauge_reproduces_B_through_truncation():
    spec = euler(2)
    N = 8
    h = solve_formal_exact(spec, N)[0]
    H = sum(sympy.Rational(c.x.numerator, c.x.denominator) * Z ** k for k, c in enumerate(h))
    P = sympy.Matrix([[1, H], [0, 1]])
    M = sympy.diag(block_matrix(spec), 1)
    B = gauge_action(P, M, 2)
    target = build_B(spec)
    assert sympy.simplify(B[0, 0] - target[0, 0]) == 0
    corner = sympy.series(sympy.expand(B[0, 1] * Z), Z, 0, N).removeO()  # z^n times the corner
    assert sympy.expand(corner - Z * target[0, 1]) == 0


def test_sigma_forbidden_examples():
    spec = euler()
    assert sigma_forbidden(Direction(-1), spec)[0]
    allowed, margin = sigma_forbidden(Direction(1), spec)
    assert not allowed and margin == pytest.approx(2 / 2)  # closest a q^k to 1 is -1 or -2
    s = SystemSpec(1.5, Slope(2, 1), 0.3 + 0.2j, 1, ((0, 0),))
    lam = np.sqrt(s.a * s.q ** 2)
    assert sigma_forbidden(Direction(lam), s)[0]


def test_q_euler_formal_coefficients():
    q = 2.0
    h = solve_formal(euler(q), 12)[0]
    assert h[0] == 0
    for l in range(11):
        assert h[l + 1] == pytest.approx((-1) ** l * q ** (l * (l + 1) / 2), rel=1e-13)


def test_homogeneous_is_zero():
    s = SystemSpec(1.3, Slope(2, 1), 0.5, 2, (((0, 0)), ((0, 0))))
    assert all(np.all(h.as_array() == 0) for h in solve_formal(s, 20))


def _float_residual(spec, H, N):
    """Substitute back: coefficient k of sigma H - (E (x) U) H - W, for k <= N - n."""
    n, q = spec.n, spec.q
    worst = 0.0
    for z_k in range(N - n + 1):
        for b in range(spec.d):
            for j in range(spec.r):
                R = spec.row(b, j)
                src = b + 1 if b < spec.d - 1 else 0
                kk = z_k if b < spec.d - 1 else z_k + n
                fac = 1 if b < spec.d - 1 else spec.a
                terms = [fac * H[spec.row(src, j)][kk]]
                if j + 1 < spec.r:
                    terms.append(fac * H[spec.row(src, j + 1)][kk])
                if z_k < n:
                    terms.append(spec.W[R][z_k])
                lhs = q ** z_k * H[R][z_k]
                scale = abs(lhs) + sum(abs(t) for t in terms)
                worst = max(worst, abs(lhs - sum(terms)) / max(scale, 1e-300))
    return worst


def test_random_spec_substitute_back():
    rng = np.random.default_rng(7)
    spec = random_spec(rng, 2, 1, 2)
    H = solve_formal(spec, 40)
    assert _float_residual(spec, H, 40) < 1e-12


@pytest.mark.parametrize("ndr", [(1, 1, 1), (1, 2, 1), (2, 1, 2), (1, 2, 2), (3, 2, 1)])
def test_exact_residual_zero(ndr):
    spec = random_spec(np.random.default_rng(sum(ndr)), *ndr)
    N = 20
    h = solve_formal_exact(spec, N)
    assert all(is_exact_zero(x) for x in exact_residual(spec, h, N - spec.n))


@pytest.mark.parametrize("ndr", [(2, 1, 2), (1, 2, 2), (3, 2, 1)])
def test_float_solver_matches_exact(ndr):
    spec = random_spec(np.random.default_rng(3), *ndr)
    N = 20
    exact = solve_formal_exact(spec, N)
    H = solve_formal(spec, N)
    E = np.array([h.as_array() for h in to_series(exact)])
    F = np.array([h.as_array() for h in H])
    n = spec.n
    for k in range(N + 1):
        # exact zeros are compared against the size of the neighbouring orders
        scale = np.abs(E[:, max(0, k - n): k + n + 1]).max()
        assert np.abs(F[:, k] - E[:, k]).max() <= 1e-11 * scale


def test_transfer_single_step():
    s = SystemSpec(1.4, Slope(2, 1), 0.3 - 1j, 2, (((1, 2)), ((3, 4))))
    t = d_step_transfer(s)
    assert t.corner_shift == 0 and t.a == s.a
    assert np.array_equal(t.coupling, np.array([[1, 1], [0, 1]]))
    # kappa z^n sigma H = a U H - w  with w = -z^n W
    for j in range(2):
        assert t.w[j][:2] == (0, 0)
        assert np.allclose(t.w[j][2:], -np.array(s.W[j]))


def test_transfer_q_euler_equation():
    t = d_step_transfer(euler())
    # z sigma h = -h - w with w = -z  i.e.  z sigma h + h = z
    assert t.a == -1 and t.corner_shift == 0
    assert np.allclose(t.w[0], [0, -1])


def test_transfer_two_steps_matches_matrix_product():
    # d = 2, r = 1, n = 1: E(qz) E(z) = diag(a/z, a/(qz))
    q, a = sympy.Rational(3, 2), sympy.Rational(-1, 3)
    E = companion(-1, 2, a)
    prod = (E.subs(Z, q * Z) * E).applyfunc(sympy.simplify)
    assert prod[0, 0] == a / Z and prod[1, 1] == a / (q * Z)
    s = SystemSpec(1.5, Slope(1, 2), -1 / 3, 1, ((0,), (0,)))
    assert d_step_transfer(s, 0).corner_shift == 0
    assert d_step_transfer(s, 1).corner_shift == 1  # multiplier a q^-1 z^-1 on block 1


@pytest.mark.parametrize("ndr", [(1, 2, 1), (2, 1, 2), (1, 2, 2), (3, 2, 1)])
def test_chain_satisfied_by_formal_solution(ndr):
    spec = random_spec(np.random.default_rng(11), *ndr)
    N = 24
    H = [h.as_array() for h in to_series(solve_formal_exact(spec, N))]
    n, d, r = spec.n, spec.d, spec.r
    for b in range(d):
        t = d_step_transfer(spec, b)
        kappa = spec.q ** (t.corner_shift * n)
        for j in range(r):
            for k in range(N - n + 1):
                lhs = kappa * spec.q ** (d * k) * H[spec.row(b, j)][k]
                terms = [spec.a * t.coupling[j, jp] * H[spec.row(b, jp)][k + n] for jp in range(r)]
                if k + n < 2 * n:
                    terms.append(-t.w[j][k + n])
                scale = abs(lhs) + sum(abs(x) for x in terms)
                assert abs(lhs - sum(terms)) <= 1e-12 * scale


def test_forbidden_means_borel_denominator_vanishes():
    # lam^n = a q^(dk): the chain factor a^(1/n) - beta zeta vanishes at a spiral point lam q^(dk')
    from qsum.pipeline import borel_plane_rational
    s = SystemSpec(1.5, Slope(1, 1), 0.7 + 0.1j, 1, ((1,),))
    lam = s.a * s.q ** 3
    assert sigma_forbidden(Direction(lam), s)[0]
    g = borel_plane_rational(s, d_step_transfer(s), 0)[0]
    ks = np.arange(-10, 11)
    dist = min(abs(g.pole - lam * s.q ** k) / abs(g.pole) for k in ks)
    assert dist < 1e-12
