"""Grid evolution of the classical wave function ``psi = sqrt(rho) exp(i S / hbar)``.

The production solver is semi-Lagrangian on the pair (sqrt(rho), S): both are
carried along characteristics and, in ``extended`` mode, S also picks up the
time integral of ``p dH/dp - H``. ``kvn`` mode drops that source. An Eulerian
finite-difference solver for the complex equation serves as an independent
cross-check.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .dynamics import (
    NumericHamiltonian,
    _choose_method,
    integrate_flow,
    liouville_residual,
)
from .grid import INTERPOLATION_ORDERS, PhaseGrid, interpolation_matrix

MODES = ("kvn", "extended")


class InstabilityError(ArithmeticError):
    pass


@dataclass
class EnsembleField:
    """Amplitude ``sqrt(rho)`` and phase ``S`` sampled on a grid at time ``t``."""

    grid: PhaseGrid
    amp: np.ndarray
    phase: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        self.amp = np.asarray(self.amp, dtype=float)
        self.phase = np.asarray(self.phase, dtype=float) * np.ones(self.grid.shape)
        if self.amp.shape != self.grid.shape:
            raise ValueError(f"amp has shape {self.amp.shape}, grid is {self.grid.shape}")
        if not (np.all(np.isfinite(self.amp)) and np.all(np.isfinite(self.phase))):
            raise ValueError("fields must be finite")
        if np.any(self.amp < 0):
            raise ValueError("amplitude must be non-negative")

    @property
    def density(self) -> np.ndarray:
        return self.amp**2

    def copy(self) -> "EnsembleField":
        return EnsembleField(self.grid, self.amp.copy(), self.phase.copy(), self.t)


@dataclass
class ComplexField:
    grid: PhaseGrid
    values: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != self.grid.shape:
            raise ValueError("values do not match the grid")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("non-finite wave function")


@dataclass(frozen=True)
class EvolutionConfig:
    mode: str = "extended"
    hbar: float = 1.0
    dt: float = 1e-3
    interpolation: str = "cubic"
    integrator: str | None = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if not self.hbar > 0:
            raise ValueError("hbar must be positive")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.interpolation not in INTERPOLATION_ORDERS:
            raise ValueError(f"interpolation must be one of {tuple(INTERPOLATION_ORDERS)}")
        if self.integrator not in (None, "verlet", "rk4"):
            raise ValueError("integrator must be verlet or rk4")

    def to_json(self) -> dict:
        return {
            "mode": self.mode,
            "hbar": self.hbar,
            "dt": self.dt,
            "interpolation": self.interpolation,
            "integrator": self.integrator,
        }


def assemble_psi(f: EnsembleField, hbar: float = 1.0) -> ComplexField:
    return ComplexField(f.grid, f.amp * np.exp(1j * f.phase / hbar), f.t)


def norm(psi) -> float:
    """Riemann sum of ``|psi|^2 dq dp``; accepts a ComplexField or an EnsembleField."""
    if isinstance(psi, EnsembleField):
        vals = psi.amp**2
    else:
        vals = np.abs(psi.values) ** 2
    return float(vals.sum() * psi.grid.cell_area)


def _phase_values(S0, grid: PhaseGrid) -> np.ndarray:
    qq, pp = grid.mesh()
    if S0 is None:
        return np.zeros(grid.shape)
    if callable(S0):
        return np.asarray(S0(qq, pp), dtype=float) * np.ones(grid.shape)
    if hasattr(S0, "flat_terms"):
        terms = S0.flat_terms()
        if S0.dof != 1 or any(k[-1] or g[1] for k, g in terms.items()):
            raise ValueError("initial phase must be a real 1-dof polynomial without hbar")
        return np.real(S0.evaluate_qp([qq], [pp])) * np.ones(grid.shape)
    return np.asarray(S0, dtype=float) * np.ones(grid.shape)


def gaussian_ensemble(grid: PhaseGrid, q0: float, p0: float, sigma_q: float, sigma_p: float,
                      S0=None, t: float = 0.0) -> EnsembleField:
    """Normalized Gaussian density with amplitude ``(2 pi sq sp)^(-1/2) exp(-dq^2/4sq^2 - dp^2/4sp^2)``.

    ``S0`` may be None, an exact PhasePolynomial, a callable ``S0(q, p)`` or an array.
    """
    if not (sigma_q > 0 and sigma_p > 0):
        raise ValueError("widths must be positive")
    if (q0 - 6 * sigma_q < grid.q_min or q0 + 6 * sigma_q > grid.q_max
            or p0 - 6 * sigma_p < grid.p_min or p0 + 6 * sigma_p > grid.p_max):
        raise ValueError("the 6-sigma window of the ensemble must lie inside the grid")
    qq, pp = grid.mesh()
    amp = np.exp(-((qq - q0) ** 2) / (4 * sigma_q**2) - (pp - p0) ** 2 / (4 * sigma_p**2))
    amp /= np.sqrt(2 * np.pi * sigma_q * sigma_p)
    edge = max(amp[0].max(), amp[-1].max(), amp[:, 0].max(), amp[:, -1].max())
    if edge > 1e-12 * amp.max():
        warnings.warn(f"ensemble support clipped by the grid (edge/max = {edge / amp.max():.2e})",
                      stacklevel=2)
    return EnsembleField(grid, amp, _phase_values(S0, grid), t)


def marginal_q(f: EnsembleField):
    """Position density ``sum_p amp^2 dp``; returns ``(q, rho_q)``."""
    return f.grid.q, (f.amp**2).sum(axis=1) * f.grid.dp


class SemiLagrangianStepper:
    """Precomputed one-step update for an autonomous Hamiltonian on a fixed grid.

    Feet of the characteristics and the interpolation weights do not change
    between steps, so each step is two sparse mat-vecs plus a constant source.
    """

    def __init__(self, H: NumericHamiltonian, grid: PhaseGrid, cfg: EvolutionConfig, dt: float | None = None):
        self.H = H
        self.grid = grid
        self.cfg = cfg
        self.dt = cfg.dt if dt is None else dt
        method = _choose_method(H, cfg.integrator)
        qq, pp = grid.mesh()
        back = integrate_flow(H, qq, pp, self.dt, 0.0, self.dt, method)
        self.q_foot, self.p_foot = back.q, back.p
        self.exited = ~grid.contains(self.q_foot, self.p_foot)
        # trapezoid of the Lagrangian over the step, same quadrature as integrate_flow
        self.source = -back.s
        shift = np.maximum(np.abs(self.q_foot - qq) / grid.dq, np.abs(self.p_foot - pp) / grid.dp)
        self.max_shift_cells = float(shift.max())
        if cfg.interpolation == "linear" and self.max_shift_cells > 1.0:
            warnings.warn(
                f"backtrace moves up to {self.max_shift_cells:.2f} cells per step with linear interpolation",
                stacklevel=2,
            )
        kind = cfg.interpolation
        self.amp_matrix = interpolation_matrix(grid, self.q_foot, self.p_foot, kind, outside="zero")
        self.phase_matrix = interpolation_matrix(grid, self.q_foot, self.p_foot, kind, outside="extrapolate")

    def step(self, amp: np.ndarray, phase: np.ndarray):
        shape = self.grid.shape
        new_amp = (self.amp_matrix @ amp.ravel()).reshape(shape)
        np.maximum(new_amp, 0.0, out=new_amp)
        new_phase = (self.phase_matrix @ phase.ravel()).reshape(shape)
        if self.cfg.mode == "extended":
            new_phase += self.source
        return new_amp, new_phase


@dataclass
class EvolutionRun:
    final: EnsembleField
    history: list = field(default_factory=list)
    norms: np.ndarray | None = None
    steps: int = 0
    dt: float = 0.0
    max_shift_cells: float = 0.0

    @property
    def times(self) -> list:
        return [f.t for f in self.history]


def _n_steps(t_final: float, dt: float) -> int:
    if t_final < 0:
        raise ValueError("t_final must be non-negative")
    return int(np.ceil(t_final / dt - 1e-9))


def evolve(f: EnsembleField, H: NumericHamiltonian, cfg: EvolutionConfig, t_final: float,
           store_every: int | None = None, stepper: SemiLagrangianStepper | None = None) -> EvolutionRun:
    """Advance ``f`` by ``t_final`` with fixed steps (dt is shrunk slightly to land exactly).

    ``store_every=k`` keeps every k-th snapshot (the initial one included).
    """
    n = _n_steps(t_final, cfg.dt)
    if n == 0:
        run = EvolutionRun(f.copy(), [f.copy()] if store_every else [], np.array([norm(f)]), 0, cfg.dt)
        return run
    h = t_final / n
    if stepper is None or abs(stepper.dt - h) > 1e-15 or stepper.grid != f.grid or stepper.cfg.mode != cfg.mode:
        stepper = SemiLagrangianStepper(H, f.grid, cfg, h)
    amp, phase = f.amp.copy(), f.phase.copy()
    cell = f.grid.cell_area
    norms = np.empty(n + 1)
    norms[0] = float((amp**2).sum() * cell)
    history = [f.copy()] if store_every else []
    for i in range(1, n + 1):
        amp, phase = stepper.step(amp, phase)
        norms[i] = float((amp**2).sum() * cell)
        if store_every and i % store_every == 0:
            history.append(EnsembleField(f.grid, amp.copy(), phase.copy(), f.t + i * h))
    final = EnsembleField(f.grid, amp, phase, f.t + t_final)
    return EvolutionRun(final, history, norms, n, h, stepper.max_shift_cells)


def _d4(f: np.ndarray, axis: int, h: float) -> np.ndarray:
    """Fourth-order central first derivative with zero values beyond the edges."""
    pad = [(0, 0)] * f.ndim
    pad[axis] = (2, 2)
    g = np.pad(f, pad)
    n = f.shape[axis]

    def sl(a):
        s = [slice(None)] * f.ndim
        s[axis] = slice(a, a + n)
        return g[tuple(s)]

    return (-sl(4) + 8 * sl(3) - 8 * sl(1) + sl(0)) / (12 * h)


def eulerian_rhs(H: NumericHamiltonian, grid: PhaseGrid, mode: str, hbar: float) -> Callable:
    """``d psi/dt = D_H psi + (i/hbar) Lbar psi`` (extended) or ``D_H psi`` (kvn)."""
    qq, pp = grid.mesh()
    hq, hp = H.dH_dq(qq, pp), H.dH_dp(qq, pp)
    pot = 1j / hbar * H.lagrangian(qq, pp) if mode == "extended" else 0.0

    def rhs(psi):
        return hq * _d4(psi, 1, grid.dp) - hp * _d4(psi, 0, grid.dq) + pot * psi

    return rhs


def evolve_eulerian_oracle(psi0: ComplexField, H: NumericHamiltonian, cfg: EvolutionConfig,
                           t_final: float, check_every: int = 10) -> ComplexField:
    """RK4 in time, fourth-order central differences in (q, p), psi = 0 outside the window."""
    n = _n_steps(t_final, cfg.dt)
    psi = psi0.values.copy()
    if n == 0:
        return ComplexField(psi0.grid, psi, psi0.t)
    h = t_final / n
    rhs = eulerian_rhs(H, psi0.grid, cfg.mode, cfg.hbar)
    n0 = norm(psi0)
    for i in range(1, n + 1):
        k1 = rhs(psi)
        k2 = rhs(psi + 0.5 * h * k1)
        k3 = rhs(psi + 0.5 * h * k2)
        k4 = rhs(psi + h * k3)
        psi = psi + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        if i % check_every == 0 or i == n:
            nn = float((np.abs(psi) ** 2).sum() * psi0.grid.cell_area)
            if not np.isfinite(nn) or (n0 > 0 and nn > 1.1 * n0):
                raise InstabilityError(
                    f"Eulerian solver unstable at step {i}/{n} (t={psi0.t + i * h:.4g}): "
                    f"norm {n0:.4g} -> {nn:.4g}; reduce dt"
                )
    return ComplexField(psi0.grid, psi, psi0.t + t_final)


@dataclass
class SuperpositionReport:
    defect: float
    scaling_defect: float
    norm_1: float
    norm_2: float

    def passed(self, tol: float = 1e-6) -> bool:
        return self.defect <= tol and self.scaling_defect <= tol


def superposition_check(f1: EnsembleField, f2: EnsembleField, H: NumericHamiltonian,
                        cfg: EvolutionConfig, t: float) -> SuperpositionReport:
    """Linearity of the complex evolution: evolve(psi1 + psi2) vs evolve(psi1) + evolve(psi2)."""
    if f1.grid != f2.grid:
        raise ValueError("fields must share a grid")
    p1, p2 = assemble_psi(f1, cfg.hbar), assemble_psi(f2, cfg.hbar)
    p12 = ComplexField(f1.grid, p1.values + p2.values, f1.t)
    e1 = evolve_eulerian_oracle(p1, H, cfg, t)
    e2 = evolve_eulerian_oracle(p2, H, cfg, t)
    e12 = evolve_eulerian_oracle(p12, H, cfg, t)
    ei = evolve_eulerian_oracle(ComplexField(f1.grid, 1j * p12.values, f1.t), H, cfg, t)
    defect = float(np.max(np.abs(e12.values - e1.values - e2.values)))
    scaling = float(np.max(np.abs(ei.values - 1j * e12.values)))
    return SuperpositionReport(defect, scaling, norm(e1), norm(e2))


def decoupling_residuals(history: Sequence[EnsembleField], H: NumericHamiltonian, mode: str = "extended"):
    """Finite-difference residuals of the amplitude and phase transport equations.

    Amplitude: ``(d/dt - D_H) sqrt(rho) = 0``. Phase: ``(d/dt - D_H) S = Lbar`` in
    extended mode, ``= 0`` in kvn mode. Evaluated at the middle snapshot.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    grid = history[0].grid
    times = [f.t for f in history]
    r_amp = liouville_residual(times, [f.amp for f in history], H, grid)
    qq, pp = grid.mesh()
    src = H.lagrangian(qq, pp) if mode == "extended" else 0.0
    r_phase = liouville_residual(times, [f.phase for f in history], H, grid, src)
    return r_amp, r_phase
