"""Canonical flows, their inverses and the classical action along characteristics.

Only autonomous Hamiltonians with one degree of freedom are handled. Flows use a
fixed step: Stoermer-Verlet when ``H = p^2/2m + V(q)`` and classical RK4
otherwise. The action integrand ``p dq/dt - H`` is replaced by the phase-space
Lagrangian ``p dH/dp - H`` and integrated with the trapezoid rule over the same
substeps as the state.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import polynomial as npoly

from .algebra import PhasePolynomial
from .grid import PhaseGrid, interpolate

METHODS = ("verlet", "rk4")


class NonFiniteStateError(ArithmeticError):
    """The flow produced inf/nan (blow-up) or was fed non-finite data."""


class InsufficientHistory(ValueError):
    pass


def _rows(c: np.ndarray) -> tuple:
    # columns over p, each a tuple of ascending q-coefficients
    return tuple(tuple(float(x) for x in c[:, j]) for j in range(c.shape[1]))


def _horner(coeffs: tuple, x):
    v = coeffs[-1]
    for a in coeffs[-2::-1]:
        v = v * x + a
    return v


def _eval2d(rows: tuple, q, p):
    v = _horner(rows[-1], q)
    for col in rows[-2::-1]:
        v = v * p + _horner(col, q)
    return v + 0.0 * (q + p)


@dataclass(frozen=True, eq=False)
class NumericHamiltonian:
    """Real polynomial ``H(q, p) = sum c[i, j] q^i p^j``.

    :param coeffs: 2-D coefficient array, axis 0 over powers of q, axis 1 over p.
    """

    coeffs: np.ndarray
    _dq: np.ndarray = field(init=False, repr=False)
    _dp: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        c = np.atleast_2d(np.asarray(self.coeffs, dtype=float))
        if c.ndim != 2 or not np.all(np.isfinite(c)):
            raise ValueError("coefficients must be a finite 2-D array")
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "_dq", npoly.polyder(c, axis=0) if c.shape[0] > 1 else np.zeros((1, c.shape[1])))
        object.__setattr__(self, "_dp", npoly.polyder(c, axis=1) if c.shape[1] > 1 else np.zeros((c.shape[0], 1)))
        # plain-float copies keep scalar trajectories cheap
        object.__setattr__(self, "_c_rows", _rows(c))
        object.__setattr__(self, "_dq_rows", _rows(self._dq))
        object.__setattr__(self, "_dp_rows", _rows(self._dp))
        object.__setattr__(self, "_dv", tuple(float(x) for x in self._dq[:, 0]))

    @classmethod
    def separable(cls, mass: float, potential: Sequence[float] = (0.0,)):
        """``p^2 / 2m + V(q)`` with ``V`` given by ascending coefficients."""
        if not mass > 0:
            raise ValueError("mass must be positive")
        v = np.atleast_1d(np.asarray(potential, dtype=float))
        c = np.zeros((max(len(v), 1), 3))
        c[: len(v), 0] = v
        c[0, 2] += 0.5 / mass
        return cls(c)

    @classmethod
    def harmonic(cls, mass: float = 1.0, omega: float = 1.0):
        return cls.separable(mass, [0.0, 0.0, 0.5 * mass * omega**2])

    @classmethod
    def from_polynomial(cls, poly):
        """Convert an exact 1-dof :class:`~liouq.algebra.PhasePolynomial` without hbar terms."""
        if poly.dof != 1:
            raise ValueError("numeric Hamiltonians are limited to one degree of freedom")
        terms = poly.flat_terms()
        nq = max((k[0] for k in terms), default=0) + 1
        np_ = max((k[1] for k in terms), default=0) + 1
        c = np.zeros((nq, np_))
        for (i, j, h), (re, im) in terms.items():
            if h or im:
                raise ValueError("Hamiltonian must be real and free of hbar")
            c[i, j] = float(re)
        return cls(c)

    def to_polynomial(self):
        """Exact form; each float maps to its shortest decimal, so 0.1 becomes 1/10."""
        terms = {}
        for (i, j), v in np.ndenumerate(self.coeffs):
            if v:
                terms[(i, j)] = Fraction(repr(float(v)))
        return PhasePolynomial(1, terms)

    @property
    def is_separable(self) -> bool:
        c = self.coeffs
        if c.shape[1] < 3 or c[0, 2] <= 0:
            return False
        rest = c[:, 1:].copy()
        rest[0, 1] = 0.0
        return not np.any(rest)

    @property
    def mass(self) -> float:
        if not self.is_separable:
            raise ValueError("mass is only defined for separable Hamiltonians")
        return 0.5 / self.coeffs[0, 2]

    @property
    def potential(self) -> np.ndarray:
        if not self.is_separable:
            raise ValueError("potential is only defined for separable Hamiltonians")
        return self.coeffs[:, 0].copy()

    def __call__(self, q, p):
        return _eval2d(self._c_rows, q, p)

    def dH_dq(self, q, p):
        return _eval2d(self._dq_rows, q, p)

    def dH_dp(self, q, p):
        return _eval2d(self._dp_rows, q, p)

    def dV_dq(self, q):
        return _horner(self._dv, q)

    def lagrangian(self, q, p):
        """``p dH/dp - H``."""
        return p * self.dH_dp(q, p) - self(q, p)

    def to_json(self) -> dict:
        if self.is_separable:
            return {"mass": self.mass, "potential": self.potential.tolist()}
        return {"coefficients": self.coeffs.tolist()}


def canonical_rhs(H: NumericHamiltonian, q, p):
    """Right-hand side of Hamilton's equations: ``(dH/dp, -dH/dq)``."""
    qdot = H.dH_dp(q, p)
    pdot = -H.dH_dq(q, p)
    if not (np.all(np.isfinite(qdot)) and np.all(np.isfinite(pdot))):
        raise NonFiniteStateError("non-finite Hamiltonian derivative")
    return qdot, pdot


@dataclass
class TrajectoryPoint:
    q: float
    p: float
    s: float
    t: float


@dataclass
class FlowResult:
    q: np.ndarray
    p: np.ndarray
    s: np.ndarray
    t: float
    steps: int
    energy_drift: np.ndarray
    path: list | None = None


def _choose_method(H: NumericHamiltonian, method: str | None) -> str:
    if method is None:
        return "verlet" if H.is_separable else "rk4"
    if method not in METHODS:
        raise ValueError(f"unknown integrator {method!r}")
    if method == "verlet" and not H.is_separable:
        raise ValueError("Verlet requires a separable Hamiltonian p^2/2m + V(q)")
    return method


def _step_count(span: float, dt: float) -> int:
    if not dt > 0:
        raise ValueError("dt must be positive")
    return int(np.ceil(abs(span) / dt - 1e-9))


def _verlet(H: NumericHamiltonian, q, p, h, inv_m):
    p = p - 0.5 * h * H.dV_dq(q)
    q = q + h * inv_m * p
    p = p - 0.5 * h * H.dV_dq(q)
    return q, p


def _rk4(H: NumericHamiltonian, q, p, h):
    k1q, k1p = canonical_rhs(H, q, p)
    k2q, k2p = canonical_rhs(H, q + 0.5 * h * k1q, p + 0.5 * h * k1p)
    k3q, k3p = canonical_rhs(H, q + 0.5 * h * k2q, p + 0.5 * h * k2p)
    k4q, k4p = canonical_rhs(H, q + h * k3q, p + h * k3p)
    return (
        q + h / 6.0 * (k1q + 2 * k2q + 2 * k3q + k4q),
        p + h / 6.0 * (k1p + 2 * k2p + 2 * k3p + k4p),
    )


def step_map(H: NumericHamiltonian, method: str | None = None):
    """One-step propagator ``(q, p, h) -> (q, p)`` for the chosen integrator."""
    method = _choose_method(H, method)
    if method == "verlet":
        inv_m = 1.0 / H.mass
        return lambda q, p, h: _verlet(H, q, p, h, inv_m)
    return lambda q, p, h: _rk4(H, q, p, h)


def integrate_flow(
    H: NumericHamiltonian,
    q_s,
    p_s,
    t_s: float,
    t: float,
    dt: float,
    method: str | None = None,
    record: bool = False,
) -> FlowResult:
    """Integrate Hamilton's equations from ``t_s`` to ``t`` and accumulate the action.

    Accepts scalars or arrays of starting points. ``t < t_s`` integrates backward
    (the action then comes out as the negative of the forward integral).
    """
    n = _step_count(t - t_s, dt)
    step = step_map(H, method)
    q = np.array(q_s, dtype=float)
    p = np.array(p_s, dtype=float)
    if q.ndim == 0 and p.ndim == 0:
        q, p = float(q), float(p)
    if not (np.all(np.isfinite(q)) and np.all(np.isfinite(p))):
        raise NonFiniteStateError("non-finite initial state")
    s = 0.0 * (q + p)
    e0 = H(q, p)
    drift = 0.0 * s
    path = [TrajectoryPoint(float(q), float(p), 0.0, t_s)] if record else None
    if n == 0:
        return FlowResult(np.asarray(q), np.asarray(p), np.asarray(s), t_s, 0, np.asarray(drift), path)
    h = (t - t_s) / n
    lag = H.lagrangian(q, p)
    if isinstance(q, float):
        finite, bigger = math.isfinite, max
    else:
        finite, bigger = (lambda x: np.all(np.isfinite(x))), np.maximum
    for i in range(n):
        q, p = step(q, p, h)
        e = H(q, p)
        lag_new = p * H.dH_dp(q, p) - e
        if not finite(lag_new):
            raise NonFiniteStateError(f"flow blew up at step {i + 1}")
        s = s + 0.5 * h * (lag + lag_new)
        lag = lag_new
        drift = bigger(drift, abs(e - e0))
        if record:
            path.append(TrajectoryPoint(float(q), float(p), float(s), t_s + (i + 1) * h))
    return FlowResult(np.asarray(q), np.asarray(p), np.asarray(s), t, n, np.asarray(drift), path)


def inverse_flow(H: NumericHamiltonian, q, p, t: float, t_s: float, dt: float, method: str | None = None):
    """Initial values ``(q_s, p_s)`` whose flow reaches ``(q, p)`` at time ``t``."""
    res = integrate_flow(H, q, p, t, t_s, dt, method)
    return res.q, res.p


def flow_jacobian(H: NumericHamiltonian, q_s: float, p_s: float, t: float, dt: float,
                  method: str | None = None, eps: float = 1e-5) -> np.ndarray:
    """Central-difference Jacobian of the time-t flow map at (q_s, p_s)."""
    qs = np.array([q_s + eps, q_s - eps, q_s, q_s])
    ps = np.array([p_s, p_s, p_s + eps, p_s - eps])
    r = integrate_flow(H, qs, ps, 0.0, t, dt, method)
    return np.array([
        [(r.q[0] - r.q[1]) / (2 * eps), (r.q[2] - r.q[3]) / (2 * eps)],
        [(r.p[0] - r.p[1]) / (2 * eps), (r.p[2] - r.p[3]) / (2 * eps)],
    ])


def backtrace(H: NumericHamiltonian, grid: PhaseGrid, t_s: float, t: float, dt: float,
              method: str | None = None):
    """Feet ``(Q_s, P_s)`` at ``t_s`` of characteristics through every node at ``t``,
    plus a mask of feet outside the grid window."""
    qq, pp = grid.mesh()
    qs, ps = inverse_flow(H, qq, pp, t, t_s, dt, method)
    return qs, ps, ~grid.contains(qs, ps)


FieldSource = Callable[..., np.ndarray] | np.ndarray


def _sample_initial(g_s, grid, qs, ps, t, kind):
    if callable(g_s):
        return np.asarray(g_s(qs, ps, t), dtype=float) * np.ones_like(qs)
    g_s = np.asarray(g_s, dtype=float)
    if g_s.shape != grid.shape:
        raise ValueError("initial field must be sampled on the grid")
    return interpolate(grid, g_s, qs, ps, kind, outside="extrapolate")


def transported_function(G_s: FieldSource, H: NumericHamiltonian, grid: PhaseGrid, t: float,
                         dt: float, t_s: float = 0.0, method: str | None = None,
                         kind: str = "cubic"):
    """``G(q, p, t) = G_s(Q_s(q, p, t), P_s(q, p, t), t)`` on every grid node.

    ``G_s`` is either a callable ``G_s(q_s, p_s, t)`` or an array sampled on
    ``grid`` (then interpolated at the feet). Returns ``(values, exited)``;
    values at exited nodes are finite but carry no meaning.
    """
    qs, ps, exited = backtrace(H, grid, t_s, t, dt, method)
    return _sample_initial(G_s, grid, qs, ps, t, kind), exited


def action_field(H: NumericHamiltonian, grid: PhaseGrid, t_s: float, t: float, dt: float,
                 S_s: FieldSource | None = None, method: str | None = None,
                 kind: str = "cubic"):
    """Classical action ``S(q, p, t)`` on the grid, with ``S(., ., t_s) = S_s``.

    Each node is traced back to ``t_s`` and the Lagrangian is accumulated along
    the forward trajectory from that foot. Returns ``(S, exited)``.
    """
    qs, ps, exited = backtrace(H, grid, t_s, t, dt, method)
    s = integrate_flow(H, qs, ps, t_s, t, dt, method).s
    if S_s is not None:
        s = s + _sample_initial(S_s, grid, qs, ps, t_s, kind)
    return s, exited


def central_diff(f: np.ndarray, axis: int, h: float) -> np.ndarray:
    """Second-order central difference; NaN on the two boundary layers of ``axis``."""
    out = np.full(f.shape, np.nan)
    sl_mid = [slice(None)] * f.ndim
    sl_hi = [slice(None)] * f.ndim
    sl_lo = [slice(None)] * f.ndim
    sl_mid[axis] = slice(1, -1)
    sl_hi[axis] = slice(2, None)
    sl_lo[axis] = slice(None, -2)
    out[tuple(sl_mid)] = (f[tuple(sl_hi)] - f[tuple(sl_lo)]) / (2 * h)
    return out


def liouville_residual(times: Sequence[float], fields: Sequence[np.ndarray], H: NumericHamiltonian,
                       grid: PhaseGrid, source: np.ndarray | float = 0.0) -> np.ndarray:
    """``(d/dt - D_H) f - source`` at the middle snapshot, by central differences.

    ``D_H f = dH/dq df/dp - dH/dp df/dq``. Needs three or more equally spaced
    snapshots; boundary nodes come back as NaN.
    """
    if len(fields) < 3 or len(times) != len(fields):
        raise InsufficientHistory("need at least three snapshots")
    m = len(fields) // 2
    t0, t1, t2 = times[m - 1], times[m], times[m + 1]
    tau = t1 - t0
    if not tau > 0 or abs((t2 - t1) - tau) > 1e-9 * max(1.0, abs(tau)):
        raise ValueError("snapshots must be equally spaced in time")
    f0, f1, f2 = (np.asarray(fields[i], float) for i in (m - 1, m, m + 1))
    qq, pp = grid.mesh()
    dfdt = (f2 - f0) / (2 * tau)
    dfdq = central_diff(f1, 0, grid.dq)
    dfdp = central_diff(f1, 1, grid.dp)
    d_h = H.dH_dq(qq, pp) * dfdp - H.dH_dp(qq, pp) * dfdq
    return dfdt - d_h - source


def pde_residual(times: Sequence[float], S_history: Sequence[np.ndarray], H: NumericHamiltonian,
                 grid: PhaseGrid) -> np.ndarray:
    """Residual of the action transport equation ``(d/dt - D_H) S = p dH/dp - H``."""
    qq, pp = grid.mesh()
    return liouville_residual(times, S_history, H, grid, H.lagrangian(qq, pp))


def observed_order(errors: Sequence[float], ratio: float = 2.0) -> np.ndarray:
    """Convergence orders ``log(e_k / e_{k+1}) / log(ratio)`` between refinement levels."""
    e = np.asarray(errors, dtype=float)
    return np.log(e[:-1] / e[1:]) / np.log(ratio)
