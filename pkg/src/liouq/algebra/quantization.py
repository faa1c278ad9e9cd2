"""Poisson brackets, Lie derivatives, prequantization and projection to q-space."""
from __future__ import annotations

from .operators import ConfigOperator, DiffOperator, PhaseOperator
from .polynomial import DofMismatch, PhasePolynomial, QPolynomial
from .scalar import HBAR_OVER_I, Scalar, gmul, minus_i_power

# -(hbar/i) = i*hbar
MINUS_HBAR_OVER_I = -HBAR_OVER_I


def _same_dof(a: PhasePolynomial, b: PhasePolynomial) -> int:
    if not isinstance(a, PhasePolynomial) or not isinstance(b, PhasePolynomial):
        raise TypeError("phase-space polynomials expected")
    if a.dof != b.dof:
        raise DofMismatch(f"dof {a.dof} vs {b.dof}")
    return a.dof


def poisson_bracket(a: PhasePolynomial, b: PhasePolynomial) -> PhasePolynomial:
    """``{A, B} = sum_k dA/dq_k dB/dp_k - dA/dp_k dB/dq_k``."""
    n = _same_dof(a, b)
    out = PhasePolynomial.zero(n)
    for k in range(n):
        out = out + a.diff_q(k) * b.diff_p(k) - a.diff_p(k) * b.diff_q(k)
    return out


def lie_derivative(a: PhasePolynomial) -> PhaseOperator:
    """The first-order operator ``{A, .}``."""
    n = a.dof
    terms = {}
    for k in range(n):
        dq = [0] * (2 * n)
        dq[k] = 1
        dp = [0] * (2 * n)
        dp[n + k] = 1
        terms[tuple(dp)] = a.diff_q(k)
        terms[tuple(dq)] = -a.diff_p(k)
    return PhaseOperator(n, terms)


def lagrangian_remainder(a: PhasePolynomial) -> PhasePolynomial:
    """``sum_k p_k dA/dp_k - A``; the phase-space Lagrangian when A is a Hamiltonian."""
    n = a.dof
    out = -a
    for k in range(n):
        out = out + PhasePolynomial.p(k, n) * a.diff_p(k)
    return out


def prequantize(a: PhasePolynomial) -> PhaseOperator:
    """Phase-space operator ``-(hbar/i) D_A - Lbar_A`` assigned to the observable A."""
    op = lie_derivative(a) * MINUS_HBAR_OVER_I
    return op - PhaseOperator.multiplication(lagrangian_remainder(a))


def commutator(u: DiffOperator, v: DiffOperator) -> DiffOperator:
    return u.compose(v) - v.compose(u)


def check_bracket_preservation(a: PhasePolynomial, b: PhasePolynomial) -> PhaseOperator:
    """Residual ``[L_A, L_B] + (hbar/i) L_{A,B}``; identically zero."""
    _same_dof(a, b)
    lhs = commutator(prequantize(a), prequantize(b))
    return lhs + prequantize(poisson_bracket(a, b)) * HBAR_OVER_I


def m_functional(a: PhasePolynomial) -> PhasePolynomial:
    return -lagrangian_remainder(a)


def check_M_condition(a: PhasePolynomial, b: PhasePolynomial) -> PhasePolynomial:
    """Residual ``{A, M[B]} - {B, M[A]} - M[{A,B}]`` with ``M[X] = -Lbar_X``."""
    _same_dof(a, b)
    return (
        poisson_bracket(a, m_functional(b))
        - poisson_bracket(b, m_functional(a))
        - m_functional(poisson_bracket(a, b))
    )


def project(u: PhaseOperator) -> ConfigOperator:
    """Reduce to configuration space with ``d/dp_k -> 0`` and ``p_k -> (hbar/i) d/dq_k``.

    p-powers become extra q-derivatives placed to the right of the q-monomial.
    """
    if not isinstance(u, PhaseOperator):
        raise TypeError("PhaseOperator expected")
    n = u.dof
    out: dict = {}
    for d, coeff in u.terms().items():
        if any(d[n:]):
            continue
        dq = d[:n]
        for key, g in coeff.flat_terms().items():
            alpha, beta, k = key[:n], key[n:2 * n], key[-1]
            m = sum(beta)
            nd = tuple(x + y for x, y in zip(dq, beta))
            flat = out.setdefault(nd, {})
            nk = alpha + (k + m,)
            val = gmul(g, minus_i_power(m))
            if nk in flat:
                s = (flat[nk][0] + val[0], flat[nk][1] + val[1])
                if s == (0, 0):
                    del flat[nk]
                else:
                    flat[nk] = s
            else:
                flat[nk] = val
    terms = {d: QPolynomial._flat(n, f) for d, f in out.items() if f}
    return ConfigOperator._raw(n, terms)


def quantize(a: PhasePolynomial) -> ConfigOperator:
    """Full chain A -> L_A -> A(q, (hbar/i) d/dq)."""
    return project(prequantize(a))


def config_multiplication(f: QPolynomial) -> ConfigOperator:
    return ConfigOperator.multiplication(f)


def translate(c_hat_commutator: ConfigOperator) -> ConfigOperator:
    """Apply the translation ``C = -(i/hbar) [A, B]`` to a computed commutator."""
    # -(i/hbar) X = X / (i*hbar)
    return c_hat_commutator / Scalar.hbar_power(1, 0, 1)


def embed(u: ConfigOperator) -> PhaseOperator:
    """View a q-space operator as a phase-space operator with no p dependence."""
    if not isinstance(u, ConfigOperator):
        raise TypeError("ConfigOperator expected")
    n = u.dof
    terms = {}
    for d, coeff in u.terms().items():
        flat = {key[:n] + (0,) * n + key[n:]: g for key, g in coeff.flat_terms().items()}
        terms[tuple(d) + (0,) * n] = PhasePolynomial._flat(2 * n, flat)
    return PhaseOperator._raw(2 * n, terms)
