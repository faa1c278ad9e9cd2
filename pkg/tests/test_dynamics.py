import math
from fractions import Fraction

import numpy as np
import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from liouq.algebra import PhasePolynomial
from liouq.dynamics import (
    InsufficientHistory,
    NonFiniteStateError,
    NumericHamiltonian,
    action_field,
    backtrace,
    canonical_rhs,
    flow_jacobian,
    integrate_flow,
    inverse_flow,
    liouville_residual,
    observed_order,
    pde_residual,
    transported_function,
)
from liouq.grid import PhaseGrid

FREE = NumericHamiltonian.separable(1.0, [0.0])
HARMONIC = NumericHamiltonian.harmonic()
QUARTIC = NumericHamiltonian.separable(1.0, [0.0, 0.0, 0.5, 0.0, 0.1])


def harmonic_action(qs, ps, t):
    """Closed-form action for H = (p^2 + q^2) / 2."""
    return 0.5 * (ps**2 - qs**2) * np.sin(t) * np.cos(t) - qs * ps * np.sin(t) ** 2


def test_harmonic_action_formula_with_sympy():
    t, q0, p0 = sympy.symbols("t q0 p0", real=True)
    q = q0 * sympy.cos(t) + p0 * sympy.sin(t)
    p = sympy.diff(q, t)
    u = sympy.Symbol("u")
    integral = sympy.integrate((p**2 - q**2).subs(t, u) / 2, (u, 0, t))
    closed = (p0**2 - q0**2) / 2 * sympy.sin(t) * sympy.cos(t) - q0 * p0 * sympy.sin(t) ** 2
    assert sympy.simplify(integral - closed) == 0


def test_canonical_rhs_examples():
    assert canonical_rhs(FREE, 0.0, 2.0) == (2.0, -0.0)
    qd, pd = canonical_rhs(HARMONIC, 1.0, 0.0)
    assert (qd, pd) == (0.0, -1.0)
    const = NumericHamiltonian([[3.0]])
    assert canonical_rhs(const, 0.3, -0.2) == (0.0, -0.0)


def test_canonical_rhs_non_finite():
    with pytest.raises(NonFiniteStateError):
        canonical_rhs(HARMONIC, np.inf, 0.0)


@given(st.lists(st.floats(-2, 2), min_size=6, max_size=6), st.floats(-1.5, 1.5), st.floats(-1.5, 1.5))
@settings(max_examples=50, deadline=None)
def test_hamiltonian_derivatives_are_consistent(c, q, p):
    H = NumericHamiltonian(np.array(c).reshape(2, 3))
    h = 1e-6
    assert H.dH_dq(q, p) == pytest.approx((H(q + h, p) - H(q - h, p)) / (2 * h), abs=1e-6)
    assert H.dH_dp(q, p) == pytest.approx((H(q, p + h) - H(q, p - h)) / (2 * h), abs=1e-6)


def test_hamiltonian_forms():
    assert HARMONIC.is_separable and HARMONIC.mass == 1.0
    general = NumericHamiltonian([[0.0, 0.0, 0.5], [0.0, 0.3, 0.0]])
    assert not general.is_separable
    with pytest.raises(ValueError):
        general.mass
    with pytest.raises(ValueError):
        integrate_flow(general, 0.0, 1.0, 0.0, 1.0, 0.01, method="verlet")
    with pytest.raises(ValueError):
        NumericHamiltonian.separable(-1.0, [0.0])
    poly = PhasePolynomial.p(0, 1, 2) * Fraction(1, 2) + PhasePolynomial.q(0, 1, 4) * Fraction(1, 10)
    H = NumericHamiltonian.from_polynomial(poly)
    assert H.to_polynomial() == poly
    assert H(1.0, 2.0) == pytest.approx(2.0 + 0.1)


def test_free_particle_flow_and_action():
    r = integrate_flow(FREE, 0.0, 1.0, 0.0, 2.0, 1e-3)
    assert float(r.q) == pytest.approx(2.0, abs=1e-12)
    assert float(r.p) == 1.0
    assert abs(float(r.s) - 1.0) <= 1e-10
    qs, ps = inverse_flow(FREE, 2.0, 1.0, 2.0, 0.0, 1e-3)
    assert (float(qs), float(ps)) == pytest.approx((0.0, 1.0), abs=1e-12)


@pytest.mark.parametrize("mass,p0,t", [(1.0, 1.0, 2.0), (2.5, -0.7, 3.3), (0.4, 2.0, 0.9)])
def test_free_particle_action_is_exact(mass, p0, t):
    r = integrate_flow(NumericHamiltonian.separable(mass, [0.0]), 0.3, p0, 0.0, t, 1e-3)
    assert abs(float(r.s) - p0**2 * t / (2 * mass)) <= 1e-10


def test_zero_span_is_identity():
    r = integrate_flow(HARMONIC, 0.4, -0.2, 1.5, 1.5, 1e-3)
    assert (float(r.q), float(r.p), float(r.s), r.steps) == (0.4, -0.2, 0.0, 0)
    assert inverse_flow(HARMONIC, 0.4, -0.2, 1.0, 1.0, 1e-3) == (0.4, -0.2)


def test_bad_dt():
    with pytest.raises(ValueError):
        integrate_flow(HARMONIC, 0.0, 1.0, 0.0, 1.0, 0.0)
    with pytest.raises(ValueError):
        integrate_flow(HARMONIC, 0.0, 1.0, 0.0, 1.0, -1e-3)


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_blow_up_is_reported():
    runaway = NumericHamiltonian.separable(1.0, [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, -1e300])
    with pytest.raises(NonFiniteStateError):
        integrate_flow(runaway, 5.0, 0.0, 0.0, 1.0, 1e-2)


def test_harmonic_period_and_action():
    qs, ps = 1.0, 0.3
    r = integrate_flow(HARMONIC, qs, ps, 0.0, 2 * np.pi, 1e-3)
    assert (float(r.q), float(r.p)) == pytest.approx((qs, ps), abs=1e-6)
    for t in (1.0, 2.0, 2 * np.pi):
        r = integrate_flow(HARMONIC, qs, ps, 0.0, t, 1e-3)
        assert abs(float(r.s) - harmonic_action(qs, ps, t)) <= 1e-6
        fine = integrate_flow(HARMONIC, qs, ps, 0.0, t, 1e-4, method="rk4")
        assert abs(float(r.s) - float(fine.s)) <= 1e-6


def test_harmonic_energy_drift_short():
    r = integrate_flow(HARMONIC, 1.0, 0.0, 0.0, 10 * 2 * np.pi, 1e-3)
    assert float(r.energy_drift) <= 1e-6


@pytest.mark.parametrize("H", [HARMONIC, QUARTIC], ids=["harmonic", "quartic"])
@pytest.mark.parametrize("t", [1.0, 10.0])
def test_round_trip(H, t):
    rng = np.random.default_rng(7)
    q0, p0 = rng.uniform(-1.5, 1.5, 20), rng.uniform(-1.5, 1.5, 20)
    fwd = integrate_flow(H, q0, p0, 0.0, t, 1e-3)
    qs, ps = inverse_flow(H, fwd.q, fwd.p, t, 0.0, 1e-3)
    assert np.max(np.abs(qs - q0)) <= 1e-8 and np.max(np.abs(ps - p0)) <= 1e-8


def test_rk4_round_trip_general_hamiltonian():
    H = NumericHamiltonian([[0.0, 0.0, 0.5], [0.0, 0.2, 0.0], [0.5, 0.0, 0.0]])
    fwd = integrate_flow(H, 0.5, 0.1, 0.0, 1.0, 1e-3)
    qs, ps = inverse_flow(H, fwd.q, fwd.p, 1.0, 0.0, 1e-3)
    assert abs(float(qs) - 0.5) <= 1e-8 and abs(float(ps) - 0.1) <= 1e-8


@pytest.mark.parametrize("H", [FREE, HARMONIC, QUARTIC], ids=["free", "harmonic", "quartic"])
def test_flow_is_symplectic(H):
    rng = np.random.default_rng(3)
    for q0, p0 in rng.uniform(-1, 1, (5, 2)):
        J = flow_jacobian(H, q0, p0, 2.0, 1e-3)
        assert abs(np.linalg.det(J) - 1.0) <= 1e-6


def test_recorded_path():
    r = integrate_flow(FREE, 0.0, 1.0, 0.0, 0.01, 1e-3, record=True)
    assert len(r.path) == r.steps + 1 == 11
    assert r.path[-1].t == pytest.approx(0.01)
    assert r.path[-1].s == pytest.approx(float(r.s))


# --- fields on the grid ---------------------------------------------------------

GRID = PhaseGrid.square(3.0, 65)


def test_transported_coordinate_free_particle():
    qq, pp = GRID.mesh()
    g, exited = transported_function(lambda q, p, t: q, FREE, GRID, 0.7, 1e-3)
    assert np.max(np.abs(g - (qq - 0.7 * pp))) <= 1e-12
    assert exited.any() and not exited[32, 32]


def test_transported_energy_is_invariant():
    qq, pp = GRID.mesh()
    g, _ = transported_function(lambda q, p, t: HARMONIC(q, p), HARMONIC, GRID, 1.3, 1e-3)
    # the Verlet energy error is O(dt^2 H), about 6e-7 in the corners
    assert np.max(np.abs(g - HARMONIC(qq, pp))) <= 2e-6
    g, _ = transported_function(lambda q, p, t: HARMONIC(q, p), HARMONIC, GRID, 1.3, 1e-3, method="rk4")
    assert np.max(np.abs(g - HARMONIC(qq, pp))) <= 1e-10


def test_transported_array_and_zero_time():
    qq, pp = GRID.mesh()
    g0 = np.sin(qq) * np.cos(pp)
    same, exited = transported_function(g0, HARMONIC, GRID, 0.0, 1e-3)
    assert np.array_equal(same, g0) and not exited.any()
    g, exited = transported_function(g0, HARMONIC, GRID, 0.5, 1e-3)
    qs, ps, _ = backtrace(HARMONIC, GRID, 0.0, 0.5, 1e-3)
    inner = (np.abs(qq) < 2) & (np.abs(pp) < 2)
    assert np.max(np.abs(g - np.sin(qs) * np.cos(ps))[inner]) <= 1e-5


def test_action_field_free_particle():
    grid = PhaseGrid.square(3.0, 128)
    qq, pp = grid.mesh()
    S, _ = action_field(FREE, grid, 0.0, 1.0, 1e-3)
    exact = pp**2 / 2
    nz = exact > 1e-3
    assert np.max(np.abs(S - exact)[nz] / exact[nz]) <= 1e-4
    S0, _ = action_field(FREE, grid, 0.0, 0.0, 1e-3, S_s=lambda q, p, t: q * p)
    assert np.array_equal(S0, qq * pp)


def test_action_field_harmonic_against_oracles():
    qq, pp = GRID.mesh()
    t = np.pi / 2
    S, _ = action_field(HARMONIC, GRID, 0.0, t, 1e-3)
    # the foot of (q, p) after a quarter turn is (-p, q)
    assert np.max(np.abs(S - harmonic_action(-pp, qq, t))) <= 1e-4
    qs, ps, _ = backtrace(HARMONIC, GRID, 0.0, t, 1e-4, method="rk4")
    fine = integrate_flow(HARMONIC, qs, ps, 0.0, t, 1e-4, method="rk4").s
    assert np.max(np.abs(S - fine)) <= 1e-4


def test_pde_residual_trivial_and_history():
    H0 = NumericHamiltonian([[0.0]])
    zeros = [np.zeros(GRID.shape)] * 3
    r = pde_residual([0.0, 0.1, 0.2], zeros, H0, GRID)
    assert np.nanmax(np.abs(r)) == 0.0
    with pytest.raises(InsufficientHistory):
        pde_residual([0.0, 0.1], zeros[:2], H0, GRID)


def _residual_orders(H, S_s, source=True):
    errs = []
    for n, dt in [(41, 0.02), (81, 0.01), (161, 0.005)]:
        grid = PhaseGrid.square(3.0, n)
        times = [0.5 - dt, 0.5, 0.5 + dt]
        if source:
            hist = [action_field(H, grid, 0.0, t, dt / 10, S_s=S_s)[0] for t in times]
            r = pde_residual(times, hist, H, grid)
        else:
            hist = [transported_function(S_s, H, grid, t, dt / 10)[0] for t in times]
            r = liouville_residual(times, hist, H, grid)
        qq, pp = grid.mesh()
        inner = (np.abs(qq) <= 2) & (np.abs(pp) <= 2)
        errs.append(np.nanmax(np.abs(r[inner])))
    return observed_order(errs)


def smooth_phase(q, p, *_):
    return 0.3 * np.sin(q) * np.cos(0.7 * p) + 0.1 * q**2 * p


def test_action_residual_second_order_free():
    assert np.all(_residual_orders(FREE, smooth_phase) >= 1.9)


def test_transport_residual_second_order():
    assert np.all(_residual_orders(HARMONIC, smooth_phase, source=False) >= 1.9)


def test_free_analytic_action_residual_is_rounding():
    grid = PhaseGrid.square(3.0, 41)
    qq, pp = grid.mesh()
    times = [0.4, 0.5, 0.6]
    r = pde_residual(times, [pp**2 * t / 2 for t in times], FREE, grid)
    assert np.nanmax(np.abs(r)) <= 1e-12


def test_observed_order():
    assert observed_order([1.0, 0.25, 0.0625]) == pytest.approx([2.0, 2.0])
    assert math.isclose(observed_order([8.0, 1.0], ratio=2.0)[0], 3.0)
