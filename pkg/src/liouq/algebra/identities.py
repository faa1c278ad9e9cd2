"""Seeded random checks of the exact operator identities."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .operators import PhaseOperator
from .polynomial import PhasePolynomial
from .quantization import (
    check_bracket_preservation,
    check_M_condition,
    commutator,
    lie_derivative,
    poisson_bracket,
    prequantize,
)

IDENTITIES = (
    "antisymmetry",
    "lie_homomorphism",
    "bracket_preservation",
    "m_condition",
    "linearity",
)


def random_phase_polynomial(rng: np.random.Generator, dof: int, max_degree: int = 4,
                            max_terms: int = 6, max_num: int = 5, max_den: int = 4) -> PhasePolynomial:
    """Real polynomial with a few random monomials and small rational coefficients."""
    terms = {}
    for _ in range(int(rng.integers(1, max_terms + 1))):
        deg = int(rng.integers(0, max_degree + 1))
        exps = [0] * (2 * dof)
        for _ in range(deg):
            exps[int(rng.integers(0, 2 * dof))] += 1
        num = int(rng.integers(-max_num, max_num + 1)) or 1
        den = int(rng.integers(1, max_den + 1))
        terms[tuple(exps)] = terms.get(tuple(exps), 0) + Fraction(num, den)
    return PhasePolynomial(dof, terms)


def random_rational(rng: np.random.Generator, max_num: int = 7, max_den: int = 5) -> Fraction:
    return Fraction(int(rng.integers(-max_num, max_num + 1)), int(rng.integers(1, max_den + 1)))


@dataclass
class IdentityReport:
    seed: int
    n_pairs: int
    dofs: tuple
    max_degree: int
    failures: dict = field(default_factory=lambda: {name: [] for name in IDENTITIES})
    unit_ok: bool = False
    kvn_unit_fails: bool = False

    @property
    def ok(self) -> bool:
        return self.unit_ok and self.kvn_unit_fails and not any(self.failures.values())

    def counts(self) -> dict:
        return {name: len(v) for name, v in self.failures.items()}

    def to_json(self) -> dict:
        return {
            "seed": self.seed,
            "n_pairs": self.n_pairs,
            "dofs": list(self.dofs),
            "max_degree": self.max_degree,
            "failures": self.counts(),
            "first_failures": {k: v[:3] for k, v in self.failures.items() if v},
            "unit": self.unit_ok,
            "kvn_unit_fails": self.kvn_unit_fails,
            "ok": self.ok,
        }


def unit_checks(dof: int = 1):
    """``(L_1 == identity, D_1 == 0 and D_1 != identity)``."""
    one = PhasePolynomial.constant(dof, 1)
    ident = PhaseOperator.identity(dof)
    d1 = lie_derivative(one)
    return prequantize(one) == ident, d1.is_zero() and d1 != ident


def verify_identities(n_pairs: int = 200, seed: int = 0, dofs=(1, 2, 3), max_degree: int = 4) -> IdentityReport:
    """Run every identity on ``n_pairs`` random pairs for each dof in ``dofs``."""
    rng = np.random.default_rng(seed)
    rep = IdentityReport(seed, n_pairs, tuple(dofs), max_degree)
    rep.unit_ok, rep.kvn_unit_fails = map(all, zip(*(unit_checks(n) for n in dofs)))
    for n in dofs:
        for k in range(n_pairs):
            a = random_phase_polynomial(rng, n, max_degree)
            b = random_phase_polynomial(rng, n, max_degree)
            alpha, beta = random_rational(rng), random_rational(rng)
            tag = f"n={n} pair={k}: A={a}; B={b}"
            ab = poisson_bracket(a, b)
            if ab != -poisson_bracket(b, a):
                rep.failures["antisymmetry"].append(tag)
            if commutator(lie_derivative(a), lie_derivative(b)) != lie_derivative(ab):
                rep.failures["lie_homomorphism"].append(tag)
            if not check_bracket_preservation(a, b).is_zero():
                rep.failures["bracket_preservation"].append(tag)
            if check_M_condition(a, b) != PhasePolynomial.zero(n):
                rep.failures["m_condition"].append(tag)
            if prequantize(a * alpha + b * beta) != prequantize(a) * alpha + prequantize(b) * beta:
                rep.failures["linearity"].append(tag)
    return rep
