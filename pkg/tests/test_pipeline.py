import cmath

import numpy as np
import pytest

from qsum.numerics import PoleProximityError
from qsum.pipeline import (
    DirectBlockAssembly,
    ForbiddenDirectionError,
    LaplaceChain,
    RationalBorelFn,
    ThetaChain,
    borel_plane_rational,
    predicted_poles,
    summation_assemble,
    taylor_agreement,
)
from qsum.series import TruncatedSeries, section
from qsum.system import SystemSpec, d_step_transfer, solve_formal
from qsum.transforms import Direction, Slope, qborel_literal
from qsum.verify import default_grid, euler_bilateral_series, euler_spec, residual_functional_eq

from specs import TYPES, random_spec


@pytest.fixture(scope="module")
def euler_sol():
    return summation_assemble(euler_spec(2), Direction(1))


def test_rational_taylor_against_long_division():
    g = RationalBorelFn((1, 2), 2 + 1j, 0.5, 2)
    t = g.taylor(40)
    # the series and the closed form agree well inside the disk |zeta| < |pole|
    zeta = 0.1 * abs(g.pole) * cmath.exp(0.7j)
    assert t(zeta) == pytest.approx(g(zeta), rel=1e-12)


def test_q_euler_borel_is_geometric():
    spec = euler_spec(2)
    g = borel_plane_rational(spec, d_step_transfer(spec), 0)[0]
    for zeta in (0.3, -2.5 + 1j, 40j):
        assert g(zeta) == pytest.approx(zeta / (1 + zeta), rel=1e-14)
    assert g.pole == pytest.approx(-1)
    series = qborel_literal(spec.slope, section(solve_formal(spec, 20)[0], 0, 1), spec.q)
    assert taylor_agreement(g, series) < 1e-13


@pytest.mark.parametrize("ndr", [(2, 1, 2), (3, 2, 1)])
def test_pole_location(ndr):
    spec, _ = random_spec(np.random.default_rng(5), *ndr)
    n, d = spec.n, spec.d
    tr = d_step_transfer(spec)
    for ell in range(n):
        for g in borel_plane_rational(spec, tr, ell):
            expected = spec.a ** (1 / n) * spec.q ** (-ell * d / n - tr.corner_shift)
            assert g.pole == pytest.approx(expected, rel=1e-12)
            near = g.pole * (1 + 1e-6)
            assert abs(g(near)) > 1e3 * abs(g(0.5 * g.pole)) or g.numerator == (0j,)


def test_homogeneous_is_zero():
    spec = SystemSpec(1.3, Slope(1, 2), 0.5, 2, tuple(((0,),) * 4))
    for g in borel_plane_rational(spec, d_step_transfer(spec), 0):
        assert g(0.7) == 0
    sol = summation_assemble(spec, Direction(1 + 0.5j, 2))
    assert np.all(sol(0.2 + 0.1j) == 0)


@pytest.mark.parametrize("ndr", [(1, 1, 1), (1, 2, 1), (1, 2, 2)])
def test_taylor_consistency_for_n_one(ndr):
    spec, _ = random_spec(np.random.default_rng(9), *ndr)
    H = solve_formal(spec, 30)
    tr = d_step_transfer(spec)
    for j, g in enumerate(borel_plane_rational(spec, tr, 0)):
        series = qborel_literal(spec.slope, section(H[spec.row(0, j)], 0, 1), spec.q)
        assert taylor_agreement(g, series) < 1e-10


def test_q_euler_matches_bilateral_series(euler_sol):
    for z in (0.1, 0.3 + 0.2j, -0.4 + 0.05j):
        _, want = euler_bilateral_series(2, 1, z)
        assert euler_sol(z)[0] == pytest.approx(want, rel=1e-10)


def test_q_euler_functional_equation(euler_sol):
    for z in (0.1, 0.37 - 0.2j):
        y, yq = euler_sol(z)[0], euler_sol(2 * z)[0]
        assert abs(z * yq + y - z) < 1e-12


def test_pole_request_raises(euler_sol):
    with pytest.raises(PoleProximityError) as info:
        euler_sol(-1.0)
    assert info.value.nearest_pole == pytest.approx(-1)


def test_forbidden_direction_rejected():
    with pytest.raises(ForbiddenDirectionError, match="Sigma"):
        summation_assemble(euler_spec(2), Direction(-1))
    with pytest.raises(ForbiddenDirectionError):
        summation_assemble(euler_spec(2), Direction(-4 * (1 + 1e-12)))


def test_unknown_route():
    with pytest.raises(ValueError):
        summation_assemble(euler_spec(2), Direction(1), route="bogus")


@pytest.mark.parametrize("ndr", [t for t in TYPES if t[0] == 1])
def test_routes_agree_for_n_one(ndr):
    spec, lam = random_spec(np.random.default_rng(21), *ndr)
    lap = LaplaceChain(spec, lam, summation_assemble(spec, lam).ctx)
    th = ThetaChain(spec, lam, lap.ctx)
    for z in (0.2 + 0.1j, -0.3 + 0.25j, 0.05j + 0.5):
        assert np.allclose(lap(z), th(z), rtol=1e-11, atol=0)


@pytest.mark.parametrize("ndr", TYPES)
def test_default_route_solves_the_system(ndr):
    spec, lam = random_spec(np.random.default_rng(33), *ndr)
    sol = summation_assemble(spec, lam)
    rep = residual_functional_eq(sol, spec, default_grid(spec, sol.direction, 12))
    assert rep.passed, rep.line()


def test_literal_laplace_power_fails_for_n_two():
    # records why the theta route is the default when n > 1
    spec, lam = random_spec(np.random.default_rng(33), 2, 1, 2)
    sol = summation_assemble(spec, lam, route="laplace")
    rep = residual_functional_eq(sol, spec, default_grid(spec, sol.direction, 12))
    assert rep.max_rel > 1e-3


@pytest.mark.parametrize("ndr", [(1, 2, 1), (1, 2, 2)])
def test_direct_block_assembly_matches_propagation(ndr):
    spec, lam = random_spec(np.random.default_rng(44), *ndr)
    sol = summation_assemble(spec, lam)
    direct = DirectBlockAssembly(spec, lam)
    for z in default_grid(spec, sol.direction, 6):
        assert np.allclose(sol(z), direct(z), rtol=1e-9, atol=1e-12)


def test_predicted_poles_q_euler():
    sp = predicted_poles(euler_spec(2), Direction(1), 1)
    assert sp.base == -1 and sp.ratio == 2 and sp.order == 1


def test_predicted_poles_blocks():
    spec, lam = random_spec(np.random.default_rng(1), 1, 2, 2)
    sps = [predicted_poles(spec, lam, i) for i in range(1, spec.m)]
    assert sps[0] == sps[1] and sps[2] == sps[3]
    assert sps[2].base == pytest.approx(sps[0].base / spec.q)
    with pytest.raises(ValueError):
        predicted_poles(spec, lam, 0)
    with pytest.raises(ValueError):
        predicted_poles(spec, lam, spec.m)


@pytest.mark.parametrize("ndr", [(1, 2, 2), (3, 2, 1)])
def test_entries_blow_up_on_predicted_spirals(ndr):
    spec, lam = random_spec(np.random.default_rng(8), *ndr)
    sol = summation_assemble(spec, lam)
    for i, sp in enumerate(sol.spirals):
        p = sp.base * sp.ratio ** -1
        near, far = p * (1 + 1e-5j), p * (1 + 0.3j)
        assert abs(sol(near)[i]) > 100 * abs(sol(far)[i])


def test_validity_radius_reported(euler_sol):
    assert euler_sol.validity_radius == pytest.approx(0.5)
    assert euler_sol.sign == 1 and euler_sol.route == "laplace"
