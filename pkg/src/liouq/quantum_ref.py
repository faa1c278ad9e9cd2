"""Configuration-space Schrodinger reference and classical/quantum marginal comparison.

The solver is split-step Fourier (Strang) on a periodic q-grid. It only exists
to provide an independent quantum answer for the cases where the classical
ensemble should agree with it.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from .algebra import ConfigOperator, PhasePolynomial, QPolynomial, Scalar, quantize
from .dynamics import NumericHamiltonian
from .evolution import (
    EnsembleField,
    EvolutionConfig,
    SemiLagrangianStepper,
    evolve,
    gaussian_ensemble,
    marginal_q,
)

LEAKAGE_THRESHOLD = 1e-10


class BoundaryLeakage(ArithmeticError):
    """The wave function reached the edge of the periodic window."""


class WindowMismatch(ValueError):
    pass


@dataclass
class WaveFunction1D:
    """Wave function on the periodic grid ``q_k = q_min + k (q_max - q_min) / nq``.

    ``q_max`` itself is not a node (it is identified with ``q_min``).
    """

    q_min: float
    q_max: float
    values: np.ndarray
    t: float = 0.0
    hbar: float = 1.0
    mass: float = 1.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex).ravel()
        if not self.q_max > self.q_min:
            raise ValueError("q_max must exceed q_min")
        if self.values.size < 8:
            raise ValueError("need at least 8 nodes")
        if not (self.hbar > 0 and self.mass > 0):
            raise ValueError("hbar and mass must be positive")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("non-finite wave function")

    @property
    def nq(self) -> int:
        return self.values.size

    @property
    def dq(self) -> float:
        return (self.q_max - self.q_min) / self.nq

    @property
    def q(self) -> np.ndarray:
        return self.q_min + self.dq * np.arange(self.nq)

    @property
    def density(self) -> np.ndarray:
        return np.abs(self.values) ** 2

    def norm(self) -> float:
        return float(self.density.sum() * self.dq)

    def mean_q(self) -> float:
        return float((self.q * self.density).sum() * self.dq / self.norm())

    def edge_ratio(self) -> float:
        """``max(|psi|)`` over the two end nodes relative to the global maximum."""
        a = np.abs(self.values)
        return float(max(a[0], a[-1]) / a.max())

    def with_values(self, values: np.ndarray, t: float) -> "WaveFunction1D":
        return WaveFunction1D(self.q_min, self.q_max, values, t, self.hbar, self.mass)

    def wavenumbers(self) -> np.ndarray:
        return 2 * np.pi * np.fft.fftfreq(self.nq, d=self.dq)


@dataclass(frozen=True)
class CoherentStateSpec:
    """Gaussian packet centred at (q0, p0); ``sigma_p = hbar / (2 sigma_q)``.

    With ``sigma_q = sqrt(hbar / (2 m omega))`` the packet keeps its shape in the
    oscillator of frequency ``omega``; other widths breathe.
    """

    q0: float
    p0: float
    sigma_q: float | None = None
    omega: float = 1.0
    mass: float = 1.0
    hbar: float = 1.0

    def __post_init__(self):
        if not (self.omega > 0 and self.mass > 0 and self.hbar > 0):
            raise ValueError("omega, mass and hbar must be positive")
        if self.sigma_q is not None and not self.sigma_q > 0:
            raise ValueError("sigma_q must be positive")

    @property
    def width(self) -> float:
        if self.sigma_q is None:
            return float(np.sqrt(self.hbar / (2 * self.mass * self.omega)))
        return float(self.sigma_q)

    @property
    def sigma_p(self) -> float:
        return self.hbar / (2 * self.width)

    @property
    def period(self) -> float:
        return 2 * np.pi / self.omega


def coherent_state(spec: CoherentStateSpec, q_min: float = -10.0, q_max: float = 10.0,
                   nq: int = 512) -> WaveFunction1D:
    """``exp(-(q - q0)^2 / (4 sigma_q^2) + i p0 q / hbar)`` normalized on the grid."""
    psi = WaveFunction1D(q_min, q_max, np.zeros(nq), 0.0, spec.hbar, spec.mass)
    q = psi.q
    s = spec.width
    vals = np.exp(-((q - spec.q0) ** 2) / (4 * s * s) + 1j * spec.p0 * q / spec.hbar)
    if np.abs(vals).max() == 0 or max(abs(vals[0]), abs(vals[-1])) >= LEAKAGE_THRESHOLD * np.abs(vals).max():
        raise ValueError("grid too narrow for the requested packet")
    vals /= np.sqrt((np.abs(vals) ** 2).sum() * psi.dq)
    psi.values = vals
    return psi


def free_gaussian(q: np.ndarray, t: float, q0: float, p0: float, sigma_q: float,
                  mass: float = 1.0, hbar: float = 1.0) -> np.ndarray:
    """Closed-form free evolution of a normalized Gaussian packet on the real line."""
    s_t = sigma_q + 1j * hbar * t / (2 * mass * sigma_q)
    x = q - q0 - p0 * t / mass
    pref = (2 * np.pi * sigma_q**2) ** -0.25 * np.sqrt(sigma_q / s_t)
    return pref * np.exp(-x * x / (4 * sigma_q * s_t) + 1j * p0 * q / hbar - 1j * p0**2 * t / (2 * mass * hbar))


def harmonic_moments(q0: float, p0: float, var_q: float, var_p: float, t: float,
                     mass: float = 1.0, omega: float = 1.0):
    """Mean and variance of q at time t for an uncorrelated Gaussian in the oscillator.

    Classical ensembles and quantum Gaussian states share these formulas.
    """
    c, s = np.cos(omega * t), np.sin(omega * t)
    mw = mass * omega
    return q0 * c + p0 / mw * s, var_q * c * c + var_p / mw**2 * s * s


def potential_coefficients(V) -> np.ndarray:
    """Float coefficients ``[v0, v1, ...]`` of ``V(q) = sum v_k q^k``.

    Accepts a sequence of numbers or an exact one-variable polynomial in q.
    """
    if isinstance(V, (PhasePolynomial, QPolynomial)):
        if V.dof != 1:
            raise ValueError("potential must depend on a single coordinate")
        deg = max(V.degree(), 0)
        out = np.zeros(deg + 1)
        for key, (re, im) in V.flat_terms().items():
            if key[-1] != 0 or im != 0:
                raise ValueError("potential must be real and free of hbar")
            if isinstance(V, PhasePolynomial) and key[1] != 0:
                raise ValueError("potential must not depend on p")
            out[key[0]] += float(re)
        return out
    out = np.atleast_1d(np.asarray(V, dtype=float))
    if out.ndim != 1 or not np.all(np.isfinite(out)):
        raise ValueError("potential coefficients must be a finite 1-d sequence")
    return out


def _eval_potential(coeffs: np.ndarray, q: np.ndarray) -> np.ndarray:
    return np.polynomial.polynomial.polyval(q, coeffs)


@dataclass(frozen=True)
class SplitStepGenerator:
    """Numeric content of ``-(hbar^2 / 2m) d^2/dq^2 + V`` as used by the solver.

    In Fourier space the kinetic part is ``kinetic * k^2``.
    """

    kinetic: float
    potential: tuple

    @classmethod
    def build(cls, V, mass: float = 1.0, hbar: float = 1.0) -> "SplitStepGenerator":
        return cls(hbar * hbar / (2 * mass), tuple(potential_coefficients(V)))

    def kinetic_phase(self, k: np.ndarray, h: float, hbar: float) -> np.ndarray:
        return np.exp(-1j * self.kinetic * k * k * h / hbar)

    def potential_values(self, q: np.ndarray) -> np.ndarray:
        return _eval_potential(np.asarray(self.potential), q)


@dataclass
class SchrodingerRun:
    final: WaveFunction1D
    steps: int
    dt: float
    norms: np.ndarray = field(default_factory=lambda: np.zeros(0))
    snapshots: list = field(default_factory=list)

    @property
    def norm_drift(self) -> float:
        return float(np.max(np.abs(self.norms - self.norms[0]))) if self.norms.size else 0.0


def schrodinger_run(psi0: WaveFunction1D, V, t_final: float, dt: float, store_every: int | None = None,
                    check_every: int = 100) -> SchrodingerRun:
    """Strang splitting ``V/2, T, V/2`` with a spectral kinetic step.

    The step is shrunk so that an integer number of steps lands on ``t_final``.
    Raises :class:`BoundaryLeakage` when ``|psi|`` at the window edges exceeds
    ``1e-10 * max|psi|``.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    if t_final < 0:
        raise ValueError("t_final must be non-negative")
    if psi0.edge_ratio() >= LEAKAGE_THRESHOLD:
        raise BoundaryLeakage(f"initial state not negligible at the edges (ratio {psi0.edge_ratio():.2e})")
    n = int(np.ceil(t_final / dt - 1e-9))
    gen = SplitStepGenerator.build(V, psi0.mass, psi0.hbar)
    psi = psi0.values.copy()
    norms = [psi0.norm()]
    snaps = [psi0] if store_every else []
    if n == 0:
        return SchrodingerRun(psi0.with_values(psi, psi0.t), 0, dt, np.array(norms), snaps)
    h = t_final / n
    hb = psi0.hbar
    vq = gen.potential_values(psi0.q)
    half_v = np.exp(-0.5j * vq * h / hb)
    full_v = half_v * half_v
    kin = gen.kinetic_phase(psi0.wavenumbers(), h, hb)
    psi *= half_v
    for i in range(1, n + 1):
        psi = np.fft.ifft(kin * np.fft.fft(psi))
        last = i == n
        want = bool(store_every) and i % store_every == 0
        if last or want or i % check_every == 0:
            out = psi * half_v
            cur = psi0.with_values(out, psi0.t + i * h)
            norms.append(cur.norm())
            if cur.edge_ratio() >= LEAKAGE_THRESHOLD:
                raise BoundaryLeakage(
                    f"wave function reached the window edge at t={cur.t:.4g} (ratio {cur.edge_ratio():.2e})"
                )
            if want:
                snaps.append(cur)
            if last:
                return SchrodingerRun(cur, n, h, np.array(norms), snaps)
        psi *= full_v
    raise AssertionError("unreachable")


def schrodinger_evolve(psi0: WaveFunction1D, V, t_final: float, dt: float) -> WaveFunction1D:
    return schrodinger_run(psi0, V, t_final, dt).final


def overlap(a: WaveFunction1D, b: WaveFunction1D) -> complex:
    return complex(np.vdot(a.values, b.values) * a.dq)


def l2_distance_up_to_phase(a: WaveFunction1D, b: WaveFunction1D) -> float:
    """``min_phi || b - exp(i phi) a ||`` on the grid."""
    d2 = a.norm() + b.norm() - 2 * abs(overlap(a, b))
    return float(np.sqrt(max(d2, 0.0)))


def energy_expectation(psi: WaveFunction1D, V) -> float:
    gen = SplitStepGenerator.build(V, psi.mass, psi.hbar)
    k = psi.wavenumbers()
    phi = np.fft.fft(psi.values)
    kinetic = gen.kinetic * (k * k * np.abs(phi) ** 2).sum() / psi.nq * psi.dq
    potential = (gen.potential_values(psi.q) * psi.density).sum() * psi.dq
    return float((kinetic + potential) / psi.norm())


@dataclass
class MarginalComparison:
    t: float
    linf: float
    l1: float
    q: np.ndarray = field(repr=False, default=None)
    classical: np.ndarray = field(repr=False, default=None)
    quantum: np.ndarray = field(repr=False, default=None)

    def to_json(self) -> dict:
        return {"t": self.t, "linf": self.linf, "l1": self.l1}


def marginal_distances(rho_a: np.ndarray, rho_b: np.ndarray, dq: float):
    """``(L_inf, L_1)`` distance of two densities sampled on the same nodes."""
    d = np.abs(np.asarray(rho_a, float) - np.asarray(rho_b, float))
    return float(d.max()), float(d.sum() * dq)


def compare_marginal(classical: EnsembleField, quantum: WaveFunction1D) -> MarginalComparison:
    """Distance between the classical position marginal and ``|psi(q)|^2``.

    The quantum density is interpolated (cubic spline) onto the classical q-nodes,
    which must lie inside the quantum window.
    """
    g = classical.grid
    if g.q_min < quantum.q_min or g.q_max > quantum.q_max - quantum.dq:
        raise WindowMismatch(
            f"classical window [{g.q_min}, {g.q_max}] not inside quantum window "
            f"[{quantum.q_min}, {quantum.q_max - quantum.dq}]"
        )
    if abs(classical.t - quantum.t) > 1e-9 * max(1.0, abs(quantum.t)):
        raise ValueError(f"snapshots at different times ({classical.t} vs {quantum.t})")
    q, rho_c = marginal_q(classical)
    rho_q = CubicSpline(quantum.q, quantum.density)(q)
    linf, l1 = marginal_distances(rho_c, rho_q, g.dq)
    return MarginalComparison(classical.t, linf, l1, q, rho_c, rho_q)


@dataclass
class ProjectedHamiltonianReport:
    hamiltonian: str
    quantized: str
    expected: str
    symbolic_match: bool
    numeric_match: bool
    generator: SplitStepGenerator

    @property
    def passed(self) -> bool:
        return self.symbolic_match and self.numeric_match

    def to_json(self) -> dict:
        return {
            "hamiltonian": self.hamiltonian,
            "quantized": self.quantized,
            "expected": self.expected,
            "symbolic_match": self.symbolic_match,
            "numeric_match": self.numeric_match,
            "kinetic": self.generator.kinetic,
            "potential": list(self.generator.potential),
        }


def _split_hamiltonian(H: PhasePolynomial):
    """Return ``(mass, V)`` for ``H = p^2 / 2m + V(q)``."""
    if not isinstance(H, PhasePolynomial) or H.dof != 1:
        raise ValueError("one-dof phase-space polynomial expected")
    kin = Fraction(0)
    v_terms = {}
    for key, (re, im) in H.flat_terms().items():
        a, b, k = key
        if k != 0 or im != 0:
            raise ValueError("Hamiltonian must be real and free of hbar")
        if b == 2 and a == 0:
            kin = Fraction(re)
        elif b == 0:
            v_terms[(a,)] = Fraction(re)
        else:
            raise ValueError("Hamiltonian must have the form p^2/2m + V(q)")
    if kin <= 0:
        raise ValueError("kinetic coefficient must be positive")
    return 1 / (2 * kin), QPolynomial(1, v_terms)


def projected_hamiltonian_check(H: PhasePolynomial, hbar: float = 1.0) -> ProjectedHamiltonianReport:
    """Exact projection of ``H`` against ``-(hbar^2/2m) d^2/dq^2 + V``, then the
    same comparison against the coefficients the split-step solver uses."""
    mass, V = _split_hamiltonian(H)
    got = quantize(H)
    kinetic_op = ConfigOperator(1, {(2,): QPolynomial.constant(1, Scalar.hbar_power(2, -1 / (2 * mass)))})
    expected = kinetic_op + ConfigOperator.multiplication(V)
    symbolic = got == expected
    gen = SplitStepGenerator.build(V, float(mass), hbar)
    # read the numbers back off the exact operator
    kin_num = -complex(got.coefficient((2,)).constant_term().evaluate(hbar)).real
    v_num = potential_coefficients(got.coefficient((0,)))
    pot = np.asarray(gen.potential)
    width = max(len(v_num), len(pot))
    numeric = bool(
        np.isclose(kin_num, gen.kinetic, rtol=1e-14, atol=0)
        and np.allclose(np.pad(v_num, (0, width - len(v_num))), np.pad(pot, (0, width - len(pot))), rtol=1e-14, atol=0)
    )
    return ProjectedHamiltonianReport(str(H), str(got), str(expected), symbolic, numeric, gen)


def classical_quantum_pair(spec: CoherentStateSpec, grid, sigma_p: float | None = None):
    """Gaussian ensemble matched to ``spec`` (or with an overridden momentum width)."""
    sp = spec.sigma_p if sigma_p is None else sigma_p
    return gaussian_ensemble(grid, spec.q0, spec.p0, spec.width, sp)


def harmonic_potential(mass: float = 1.0, omega: float = 1.0) -> Sequence[float]:
    return (0.0, 0.0, 0.5 * mass * omega * omega)


@dataclass
class BridgeResult:
    sigma_p: float
    comparisons: list

    @property
    def max_linf(self) -> float:
        return max(c.linf for c in self.comparisons)

    def to_json(self) -> dict:
        return {"sigma_p": self.sigma_p, "comparisons": [c.to_json() for c in self.comparisons]}


def harmonic_bridge(spec: CoherentStateSpec, grid, times: Sequence[float], sigma_p: float | None = None,
                    dt: float = 1e-3, nq: int = 512, q_window: tuple = (-10.0, 10.0),
                    interpolation: str = "cubic") -> BridgeResult:
    """Evolve a Gaussian ensemble and a coherent state in ``V = m omega^2 q^2 / 2``
    side by side and compare position marginals at each requested time."""
    H = NumericHamiltonian.harmonic(spec.mass, spec.omega)
    V = harmonic_potential(spec.mass, spec.omega)
    cfg = EvolutionConfig(mode="extended", hbar=spec.hbar, dt=dt, interpolation=interpolation)
    f = classical_quantum_pair(spec, grid, sigma_p)
    psi = coherent_state(spec, q_window[0], q_window[1], nq)
    out = []
    stepper = None
    for t in sorted(times):
        span = t - f.t
        if span > 0:
            n = int(np.ceil(span / dt - 1e-9))
            if stepper is None or abs(stepper.dt - span / n) > 1e-15:
                stepper = SemiLagrangianStepper(H, grid, cfg, span / n)
            f = evolve(f, H, cfg, span, stepper=stepper).final
            psi = schrodinger_evolve(psi, V, span, dt)
        out.append(compare_marginal(f, psi))
    return BridgeResult(spec.sigma_p if sigma_p is None else sigma_p, out)
