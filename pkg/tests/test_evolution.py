import warnings

import numpy as np
import pytest

from liouq.dynamics import InsufficientHistory, NumericHamiltonian, action_field, observed_order, transported_function
from liouq.evolution import (
    ComplexField,
    EnsembleField,
    EvolutionConfig,
    InstabilityError,
    SemiLagrangianStepper,
    assemble_psi,
    decoupling_residuals,
    evolve,
    evolve_eulerian_oracle,
    gaussian_ensemble,
    marginal_q,
    norm,
    superposition_check,
)
from liouq.grid import PhaseGrid

FREE = NumericHamiltonian.separable(1.0, [0.0])
HARMONIC = NumericHamiltonian.harmonic()
ZERO = NumericHamiltonian([[0.0]])

# small test windows cut the Gaussian tails well above 1e-12 of the peak
pytestmark = pytest.mark.filterwarnings("ignore:ensemble support clipped")


def cfg(mode="extended", dt=1e-2, **kw):
    return EvolutionConfig(mode=mode, dt=dt, **kw)


def test_config_validation():
    for bad in (dict(mode="wigner"), dict(hbar=0.0), dict(dt=-1.0), dict(interpolation="quintic"),
                dict(integrator="euler")):
        with pytest.raises(ValueError):
            EvolutionConfig(**bad)
    assert EvolutionConfig().to_json()["mode"] in ("kvn", "extended")


# --- assembling psi -----------------------------------------------------------

def test_assemble_trivial():
    g = PhaseGrid.square(1.0, 8)
    ones = EnsembleField(g, np.ones(g.shape), np.zeros(g.shape))
    assert np.array_equal(assemble_psi(ones).values, np.ones(g.shape))
    amp = np.ones(g.shape)
    amp[3, 4] = 0.0
    psi = assemble_psi(EnsembleField(g, amp, np.full(g.shape, 1.234)))
    assert psi.values[3, 4] == 0


def test_assemble_modulus_and_argument():
    g = PhaseGrid.square(4.0, 64)
    qq, pp = g.mesh()
    f = gaussian_ensemble(g, 0.3, -0.2, 0.5, 0.5, S0=lambda q, p: 0.7 * p)
    psi = assemble_psi(f, hbar=1.0).values
    assert np.max(np.abs(np.abs(psi) - f.amp)) <= 1e-15
    wrapped = np.angle(np.exp(1j * f.phase))
    assert np.max(np.abs(np.angle(psi) - wrapped)) <= 1e-12


def test_field_validation():
    g = PhaseGrid.square(1.0, 8)
    with pytest.raises(ValueError):
        EnsembleField(g, -np.ones(g.shape), np.zeros(g.shape))
    with pytest.raises(ValueError):
        EnsembleField(g, np.ones((8, 9)), np.zeros((8, 9)))
    with pytest.raises(ValueError):
        ComplexField(g, np.full(g.shape, np.nan + 0j))


# --- ensembles and norms ------------------------------------------------------------

def test_gaussian_norm_and_width_invariance():
    g = PhaseGrid.square(4.0, 256)
    assert abs(norm(gaussian_ensemble(g, 0.0, 0.0, 0.5, 0.5)) - 1.0) <= 1e-6
    assert abs(norm(gaussian_ensemble(g, 0.0, 0.0, 0.25, 0.5)) - 1.0) <= 1e-6
    assert np.all(gaussian_ensemble(g, 0.0, 0.0, 0.5, 0.5).phase == 0.0)


def test_norm_homogeneity():
    g = PhaseGrid.square(4.0, 64)
    psi = assemble_psi(gaussian_ensemble(g, 0.0, 0.0, 0.5, 0.5))
    assert norm(ComplexField(g, 0 * psi.values)) == 0.0
    assert norm(ComplexField(g, 2 * psi.values)) == pytest.approx(4 * norm(psi), rel=1e-14)


def test_gaussian_errors_and_clipping():
    g = PhaseGrid.square(6.0, 64)
    with pytest.raises(ValueError):
        gaussian_ensemble(g, 1.0, 0.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        gaussian_ensemble(g, 0.0, 0.0, 0.0, 1.0)
    with pytest.warns(UserWarning, match="clipped"):
        gaussian_ensemble(g, 0.0, 0.0, 1.0, 1.0)


def test_marginal_matches_analytic():
    g = PhaseGrid(-4.0, 4.0, -4.0, 4.0, 201, 401)
    sq = 0.6
    f = gaussian_ensemble(g, 0.4, 0.0, sq, 0.5)
    q, rho = marginal_q(f)
    exact = np.exp(-((q - 0.4) ** 2) / (2 * sq**2)) / np.sqrt(2 * np.pi * sq**2)
    assert np.max(np.abs(rho - exact)) <= 1e-6
    assert rho.sum() * g.dq == pytest.approx(norm(f), rel=1e-13)
    _, narrow = marginal_q(gaussian_ensemble(g, 0.4, 0.0, sq, 0.3))
    assert np.max(np.abs(narrow - rho)) <= 1e-6


# --- semi-Lagrangian evolution ----------------------------------------------------------

def test_zero_time_is_identity():
    g = PhaseGrid.square(4.0, 32)
    f = gaussian_ensemble(g, 0.0, 0.0, 0.5, 0.5, S0=lambda q, p: q * p)
    run = evolve(f, HARMONIC, cfg(), 0.0)
    assert np.array_equal(run.final.amp, f.amp) and np.array_equal(run.final.phase, f.phase)
    assert run.steps == 0
    with pytest.raises(ValueError):
        evolve(f, HARMONIC, cfg(), -1.0)


def test_static_hamiltonian_keeps_state():
    g = PhaseGrid.square(4.0, 32)
    f = gaussian_ensemble(g, 0.2, 0.1, 0.5, 0.5, S0=lambda q, p: np.sin(q) + p)
    run = evolve(f, ZERO, cfg(), 1.0)
    assert np.max(np.abs(run.final.amp - f.amp)) <= 1e-12
    assert np.max(np.abs(run.final.phase - f.phase)) <= 1e-12
    assert run.final.t == 1.0


def test_kvn_transports_amp_and_phase():
    g = PhaseGrid.square(5.0, 128)
    qq, pp = g.mesh()

    def S0(q, p):
        return 0.3 * q * p + 0.1 * q**2

    f = gaussian_ensemble(g, 1.0, 0.0, 0.5, 0.5, S0=S0)
    t = np.pi / 2
    run = evolve(f, HARMONIC, cfg("kvn", dt=1e-2), t)
    # a quarter turn sends the foot of (q, p) to (-p, q)
    amp_exact = np.exp(-((-pp - 1.0) ** 2 + qq**2) / 1.0) / np.sqrt(2 * np.pi * 0.25)
    assert np.max(np.abs(run.final.amp - amp_exact)) <= 1e-3
    inner = amp_exact > 1e-3 * amp_exact.max()
    assert np.max(np.abs(run.final.phase - S0(-pp, qq))[inner]) <= 1e-3


def test_extended_free_particle_phase():
    g = PhaseGrid.square(4.0, 256)
    f = gaussian_ensemble(g, 0.0, 0.0, 0.5, 0.5)
    _, pp = g.mesh()
    run = evolve(f, FREE, cfg(dt=1e-3), 1.0)
    assert np.max(np.abs(run.final.phase - pp**2 / 2)) <= 1e-3


def test_modes_share_amplitude_and_differ_by_action():
    # the source is re-interpolated every step, so the window must resolve it finely
    g = PhaseGrid.square(9.0, 256)
    f = gaussian_ensemble(g, 0.5, 0.0, 0.6, 0.6, S0=lambda q, p: 0.2 * q * p)
    t = 1.0
    ext = evolve(f, HARMONIC, cfg("extended", dt=1e-2), t, store_every=10)
    kvn = evolve(f, HARMONIC, cfg("kvn", dt=1e-2), t, store_every=10)
    for a, b in zip(ext.history, kvn.history):
        assert np.max(np.abs(a.amp - b.amp)) <= 1e-12
    S, _ = action_field(HARMONIC, g, 0.0, t, 1e-2)
    mask = ext.final.amp >= 1e-4 * ext.final.amp.max()
    diff = ext.final.phase - kvn.final.phase
    assert np.max(np.abs(diff - S)[mask]) <= 1e-6


def test_global_phase_shift_commutes():
    g = PhaseGrid.square(5.0, 64)
    f = gaussian_ensemble(g, 0.5, 0.0, 0.6, 0.6, S0=lambda q, p: 0.3 * p)
    c = 0.77
    shifted = EnsembleField(g, f.amp, f.phase + c)
    a = evolve(f, HARMONIC, cfg(), 1.0).final
    b = evolve(shifted, HARMONIC, cfg(), 1.0).final
    psi_a, psi_b = assemble_psi(a).values, assemble_psi(b).values
    assert np.max(np.abs(psi_b - np.exp(1j * c) * psi_a)) <= 1e-12


def test_norm_conserved_short_run():
    g = PhaseGrid.square(6.5, 128)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        f = gaussian_ensemble(g, 0.5, 0.0, 1.0, 1.0)
    run = evolve(f, HARMONIC, cfg(dt=1e-2), np.pi)
    assert abs(run.norms[-1] / run.norms[0] - 1.0) <= 1e-3


def test_linear_interpolation_warns_on_large_shift():
    g = PhaseGrid.square(3.0, 32)
    with pytest.warns(UserWarning, match="cells per step"):
        SemiLagrangianStepper(FREE, g, cfg(dt=0.5, interpolation="linear"))


def test_stepper_reuse_matches_fresh():
    g = PhaseGrid.square(4.0, 48)
    f = gaussian_ensemble(g, 0.0, 0.5, 0.5, 0.5)
    st = SemiLagrangianStepper(HARMONIC, g, cfg(), 1e-2)
    a = evolve(f, HARMONIC, cfg(), 0.5, stepper=st).final
    b = evolve(f, HARMONIC, cfg(), 0.5).final
    assert np.array_equal(a.amp, b.amp) and np.array_equal(a.phase, b.phase)


# --- Eulerian oracle ------------------------------------------------------------------

def test_eulerian_static():
    g = PhaseGrid.square(4.0, 32)
    psi = assemble_psi(gaussian_ensemble(g, 0.0, 0.0, 0.5, 0.5, S0=lambda q, p: q))
    out = evolve_eulerian_oracle(psi, ZERO, cfg(dt=1e-2), 0.5)
    assert np.max(np.abs(out.values - psi.values)) <= 1e-14
    assert evolve_eulerian_oracle(psi, HARMONIC, cfg(), 0.0).values is not psi.values


def test_eulerian_kvn_modulus_matches_semi_lagrangian():
    g = PhaseGrid.square(6.0, 64)
    f = gaussian_ensemble(g, 1.0, 0.5, 0.7, 0.7, S0=lambda q, p: 0.2 * q * p)
    c = cfg("kvn", dt=1e-3)
    eul = evolve_eulerian_oracle(assemble_psi(f), HARMONIC, c, 0.5)
    sl = evolve(f, HARMONIC, c, 0.5).final
    assert np.max(np.abs(np.abs(eul.values) - sl.amp)) <= 5e-3


def test_eulerian_instability_is_reported():
    g = PhaseGrid.square(6.0, 64)
    f = gaussian_ensemble(g, 1.0, 0.0, 0.7, 0.7)
    with pytest.raises(InstabilityError, match="reduce dt"):
        evolve_eulerian_oracle(assemble_psi(f), HARMONIC, cfg(dt=0.5), 20.0)


def test_superposition_with_zero_partner():
    g = PhaseGrid.square(5.0, 48)
    f1 = gaussian_ensemble(g, 1.0, 0.0, 0.6, 0.6, S0=lambda q, p: 0.5 * q)
    f0 = EnsembleField(g, np.zeros(g.shape), np.zeros(g.shape))
    rep = superposition_check(f1, f0, HARMONIC, cfg(dt=2e-3), 0.1)
    assert rep.defect == 0.0 and rep.scaling_defect == 0.0 and rep.norm_2 == 0.0
    assert rep.passed()
    with pytest.raises(ValueError):
        superposition_check(f1, gaussian_ensemble(PhaseGrid.square(5.0, 40), 0, 0, .6, .6), HARMONIC, cfg(), 0.1)


# --- decoupled transport equations -------------------------------------------------

def test_decoupling_static_state():
    g = PhaseGrid.square(3.0, 24)
    f = gaussian_ensemble(g, 0.0, 0.0, 0.4, 0.4, S0=lambda q, p: q * p)
    run = evolve(f, ZERO, cfg(), 0.02, store_every=1)
    r_amp, r_phase = decoupling_residuals(run.history, ZERO)
    assert np.nanmax(np.abs(r_amp)) <= 1e-12 and np.nanmax(np.abs(r_phase)) <= 1e-12
    with pytest.raises(InsufficientHistory):
        decoupling_residuals(run.history[:2], ZERO)
    with pytest.raises(ValueError):
        decoupling_residuals(run.history, ZERO, mode="other")


def _decoupling_errors(mode):
    errs = []
    for n, dt in [(65, 0.02), (129, 0.01), (257, 0.005)]:
        g = PhaseGrid.square(4.0, n)
        f = gaussian_ensemble(g, 0.0, 0.0, 0.6, 0.6, S0=lambda q, p: 0.2 * q * p + 0.1 * q**3)
        run = evolve(f, FREE, cfg(mode, dt=dt), 0.2 + dt, store_every=1)
        hist = run.history[-3:]
        r_amp, r_phase = decoupling_residuals(hist, FREE, mode)
        qq, pp = g.mesh()
        inner = (np.abs(qq) <= 2.5) & (np.abs(pp) <= 2.5)
        errs.append((np.nanmax(np.abs(r_amp[inner])), np.nanmax(np.abs(r_phase[inner]))))
    return np.array(errs)


def test_decoupling_converges_extended():
    errs = _decoupling_errors("extended")
    ratios = errs[:-1] / errs[1:]
    assert np.all(ratios >= 3.5), ratios
    assert np.all(observed_order(errs[:, 1]) >= 1.8)


def test_kvn_phase_obeys_homogeneous_equation():
    g = PhaseGrid.square(4.0, 129)
    f = gaussian_ensemble(g, 0.0, 0.0, 0.6, 0.6)
    run = evolve(f, FREE, cfg("kvn", dt=0.01), 0.22, store_every=1)
    hist = run.history[-3:]
    _, r_kvn = decoupling_residuals(hist, FREE, "kvn")
    _, r_ext = decoupling_residuals(hist, FREE, "extended")
    qq, pp = g.mesh()
    inner = (np.abs(qq) <= 2.5) & (np.abs(pp) <= 2.5)
    assert np.nanmax(np.abs(r_kvn[inner])) <= 1e-10
    # against the inhomogeneous equation the residual is the Lagrangian itself
    assert np.nanmax(np.abs(r_ext[inner] + FREE.lagrangian(qq, pp)[inner])) <= 1e-10


def test_semi_lagrangian_matches_direct_transport():
    g = PhaseGrid.square(5.0, 96)
    f = gaussian_ensemble(g, 0.5, 0.5, 0.6, 0.6)
    run = evolve(f, HARMONIC, cfg("kvn", dt=1e-2), 1.0)
    direct, _ = transported_function(f.amp, HARMONIC, g, 1.0, 1e-3)
    assert np.max(np.abs(run.final.amp - direct)) <= 2e-3
