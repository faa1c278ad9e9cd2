"""Bracket tables for position, momentum, angular momentum and kinetic energy.

Everything here is evaluated exactly for a single particle in three dimensions.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations_with_replacement

from .operators import ConfigOperator
from .polynomial import PhasePolynomial
from .quantization import commutator, poisson_bracket, quantize, translate
from .scalar import HBAR_OVER_I, as_rational

DOF = 3


def levi_civita(i: int, j: int, k: int) -> int:
    if len({i, j, k}) < 3:
        return 0
    return 1 if (i, j, k) in ((0, 1, 2), (1, 2, 0), (2, 0, 1)) else -1


class Observables:
    """q_k, p_k, l_k = eps_kil q_i p_l and t = p.p / 2m at n = 3."""

    def __init__(self, mass=1, dof: int = DOF):
        self.mass = as_rational(mass)
        if self.mass <= 0:
            raise ValueError("mass must be positive")
        self.dof = dof
        self.q = [PhasePolynomial.q(k, dof) for k in range(dof)]
        self.p = [PhasePolynomial.p(k, dof) for k in range(dof)]
        self.one = PhasePolynomial.constant(dof, 1)
        self.t = sum((pk * pk for pk in self.p), PhasePolynomial.zero(dof)) * Fraction(1, 2 * self.mass)
        if dof == 3:
            self.l = [
                sum(
                    (self.q[i] * self.p[j] * levi_civita(k, i, j) for i in range(3) for j in range(3)),
                    PhasePolynomial.zero(dof),
                )
                for k in range(3)
            ]
        else:
            self.l = []

    def span(self) -> dict:
        named = {"1": self.one, "t": self.t}
        for k in range(self.dof):
            named[f"q{k + 1}"] = self.q[k]
            named[f"p{k + 1}"] = self.p[k]
        for k, lk in enumerate(self.l):
            named[f"l{k + 1}"] = lk
        return named


@dataclass
class TableEntry:
    relation: str
    kind: str  # "poisson" | "commutator" | "translation"
    indices: tuple
    passed: bool
    got: str
    expected: str

    @property
    def name(self) -> str:
        idx = ",".join(str(i + 1) for i in self.indices)
        return f"{self.kind}:{self.relation}[{idx}]"


class TableMismatch(AssertionError):
    def __init__(self, failures):
        self.failures = failures
        super().__init__("; ".join(f"{e.name}: got {e.got}, expected {e.expected}" for e in failures))


@dataclass
class TableReport:
    mass: object
    entries: list = field(default_factory=list)

    @property
    def failures(self) -> list:
        return [e for e in self.entries if not e.passed]

    @property
    def ok(self) -> bool:
        return not self.failures

    def relations(self, kind: str) -> dict:
        out: dict = {}
        for e in self.entries:
            if e.kind == kind:
                out[e.relation] = out.get(e.relation, True) and e.passed
        return out

    def raise_for_failures(self) -> None:
        if self.failures:
            raise TableMismatch(self.failures)

    def to_json(self) -> dict:
        return {
            "mass": str(self.mass),
            "ok": self.ok,
            "poisson": self.relations("poisson"),
            "commutator": self.relations("commutator"),
            "translation": self.relations("translation"),
            "failures": [e.name for e in self.failures],
            "n_entries": len(self.entries),
        }


def _families(obs: Observables):
    """Yield (relation, A, B, expected {A,B}) over all index values."""
    q, p, l, t, m = obs.q, obs.p, obs.l, obs.t, obs.mass
    zero = PhasePolynomial.zero(3)
    r3 = range(3)
    for i in r3:
        for k in r3:
            yield "{q_i,q_k}=0", (i, k), q[i], q[k], zero
            yield "{p_i,p_k}=0", (i, k), p[i], p[k], zero
            yield "{q_i,p_k}=delta_ik", (i, k), q[i], p[k], obs.one if i == k else zero
            yield "{l_i,l_k}=eps_ikl l_l", (i, k), l[i], l[k], sum(
                (l[j] * levi_civita(i, k, j) for j in r3), zero
            )
            yield "{q_i,l_k}=eps_ikl q_l", (i, k), q[i], l[k], sum(
                (q[j] * levi_civita(i, k, j) for j in r3), zero
            )
            yield "{p_i,l_k}=eps_ikl p_l", (i, k), p[i], l[k], sum(
                (p[j] * levi_civita(i, k, j) for j in r3), zero
            )
        yield "{q_i,t}=p_i/m", (i,), q[i], t, p[i] * (1 / Fraction(m))
        yield "{p_i,t}=0", (i,), p[i], t, zero
        yield "{l_i,t}=0", (i,), l[i], t, zero


def verify_tables(mass=1) -> TableReport:
    """Check the nine Poisson families, their nine commutator images and the
    translation rule ``C = -(i/hbar)[A, B]`` for every entry."""
    obs = Observables(mass)
    report = TableReport(obs.mass)
    cache: dict = {}

    def qz(a):
        if a not in cache:
            cache[a] = quantize(a)
        return cache[a]

    for rel, idx, a, b, expected in _families(obs):
        got = poisson_bracket(a, b)
        report.entries.append(TableEntry(rel, "poisson", idx, got == expected, str(got), str(expected)))

        comm = commutator(qz(a), qz(b))
        # [A, B] = -(hbar/i) * quantized({A, B})
        comm_expected = qz(expected) * (-HBAR_OVER_I)
        report.entries.append(
            TableEntry(rel.replace("{", "[").replace("}", "]"), "commutator", idx,
                       comm == comm_expected, str(comm), str(comm_expected))
        )
        c_hat = translate(comm)
        report.entries.append(
            TableEntry(rel, "translation", idx, c_hat == qz(got), str(c_hat), str(qz(got)))
        )
    return report


@dataclass
class GroenewoldReport:
    a: PhasePolynomial
    b: PhasePolynomial
    quantized_bracket: ConfigOperator
    translated_commutator: ConfigOperator
    difference: ConfigOperator

    @property
    def preserved(self) -> bool:
        return self.difference.is_zero()

    def to_json(self) -> dict:
        return {
            "A": str(self.a),
            "B": str(self.b),
            "quantized_bracket": str(self.quantized_bracket),
            "translated_commutator": str(self.translated_commutator),
            "difference": str(self.difference),
            "preserved": self.preserved,
            "difference_json": self.difference.to_json(),
        }


def bracket_defect(a: PhasePolynomial, b: PhasePolynomial) -> GroenewoldReport:
    """Compare quantize({A,B}) with -(i/hbar)[quantize(A), quantize(B)]."""
    lhs = quantize(poisson_bracket(a, b))
    rhs = translate(commutator(quantize(a), quantize(b)))
    return GroenewoldReport(a, b, lhs, rhs, lhs - rhs)


def groenewold_demo(a: PhasePolynomial | None = None, b: PhasePolynomial | None = None) -> GroenewoldReport:
    """Default pair (q^3, p^3) at n = 1, where the projection breaks the bracket."""
    if a is None:
        a = PhasePolynomial.q(0, 1, 3)
    if b is None:
        b = PhasePolynomial.p(0, 1, 3)
    return bracket_defect(a, b)


def span_defects(mass=1) -> dict:
    """Bracket defects for every pair drawn from {1, q_k, p_k, l_k, t}."""
    named = Observables(mass).span()
    return {
        (x, y): bracket_defect(named[x], named[y])
        for x, y in combinations_with_replacement(sorted(named), 2)
    }
