import json
from fractions import Fraction

import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from liouq.algebra import (
    HBAR,
    HBAR_OVER_I,
    I,
    ConfigOperator,
    DofMismatch,
    PhaseOperator,
    PhasePolynomial,
    Polynomial,
    QPolynomial,
    Scalar,
)
from sym import HBAR as H_SYM
from sym import apply_operator, phase_symbols, poly_expr, scalar_expr

fractions = st.fractions(min_value=-5, max_value=5, max_denominator=6)


@st.composite
def scalars(draw):
    terms = draw(st.dictionaries(st.integers(0, 3), st.tuples(fractions, fractions), max_size=3))
    return Scalar(terms)


@st.composite
def phase_polys(draw, dof=None, max_degree=4, hbar=True):
    n = dof or draw(st.integers(1, 3))
    exps = st.lists(st.integers(0, max_degree), min_size=2 * n, max_size=2 * n).filter(
        lambda e: sum(e) <= max_degree
    )
    coeffs = scalars() if hbar else fractions
    return PhasePolynomial(n, draw(st.dictionaries(exps.map(tuple), coeffs, max_size=5)))


# --- Scalar ------------------------------------------------------------------

def test_scalar_constants():
    assert HBAR_OVER_I == Scalar.hbar_power(1, 0, -1)
    assert I * I == -1
    assert HBAR * HBAR == Scalar.hbar_power(2)
    assert str(HBAR_OVER_I) == "-i*hbar"


def test_scalar_rejects_floats():
    with pytest.raises(TypeError):
        Scalar.coerce(0.5)
    with pytest.raises(TypeError):
        Scalar.coerce(True)


def test_scalar_division_by_monomial_only():
    x = Scalar.hbar_power(2, 3) + Scalar.hbar_power(1, 0, 1)
    assert (x / Scalar.hbar_power(1, 0, 1)) * Scalar.hbar_power(1, 0, 1) == x
    with pytest.raises(ValueError):
        x / (HBAR + 1)
    with pytest.raises((ValueError, ZeroDivisionError)):
        Scalar.const(1) / HBAR


@given(scalars(), scalars(), scalars())
@settings(max_examples=60, deadline=None)
def test_scalar_ring_against_sympy(a, b, c):
    assert scalar_expr(a * (b + c)) == sympy.expand(scalar_expr(a) * (scalar_expr(b) + scalar_expr(c)))
    assert scalar_expr(a - b) == sympy.expand(scalar_expr(a) - scalar_expr(b))
    assert a * b == b * a


@given(scalars())
@settings(max_examples=40, deadline=None)
def test_scalar_json_and_evaluate(a):
    assert Scalar.from_json(json.loads(json.dumps(a.to_json()))) == a
    want = complex(scalar_expr(a).subs(H_SYM, sympy.Rational(3, 7)))
    assert abs(a.evaluate(3 / 7) - want) < 1e-12


# --- Polynomial ----------------------------------------------------------------

def test_polynomial_construction_and_text(golden):
    h = PhasePolynomial.p(0, 1, 2) * Fraction(1, 2) + PhasePolynomial.q(0, 1, 2) * Fraction(1, 2)
    assert str(h) == "1/2*q1^2 + 1/2*p1^2"
    assert h.to_json() == json.loads(golden("harmonic_polynomial.json"))
    assert Polynomial.from_json(h.to_json()) == h
    assert h.degree() == 2 and PhasePolynomial.zero(1).degree() == -1


def test_polynomial_type_and_dof_checks():
    with pytest.raises(DofMismatch):
        PhasePolynomial.q(0, 1) + PhasePolynomial.q(0, 2)
    with pytest.raises(TypeError):
        PhasePolynomial.q(0, 1) + QPolynomial.q(0, 2)


@given(st.data())
@settings(max_examples=60, deadline=None)
def test_polynomial_arithmetic_against_sympy(data):
    a = data.draw(phase_polys())
    b = data.draw(phase_polys(dof=a.dof))
    xs = phase_symbols(a.dof)
    ea, eb = poly_expr(a, xs), poly_expr(b, xs)
    assert poly_expr(a * b, xs) == sympy.expand(ea * eb)
    assert poly_expr(a - b, xs) == sympy.expand(ea - eb)
    k = data.draw(st.integers(0, 2 * a.dof - 1))
    assert poly_expr(a.diff(k, 2), xs) == sympy.expand(sympy.diff(ea, xs[k], 2))


@given(phase_polys())
@settings(max_examples=30, deadline=None)
def test_polynomial_json_roundtrip(a):
    assert Polynomial.from_json(json.loads(json.dumps(a.to_json()))) == a


def test_polynomial_numeric_evaluation():
    p = PhasePolynomial.from_terms(1, {((2,), (1,)): 3, ((0,), (0,)): Fraction(1, 4)})
    assert p.evaluate_qp([2.0], [0.5]) == pytest.approx(3 * 4 * 0.5 + 0.25)


# --- Operators -------------------------------------------------------------------

@given(st.data())
@settings(max_examples=40, deadline=None)
def test_compose_is_operator_product(data):
    """(U o V) f = U(V f) with f a generic sympy function."""
    dof = data.draw(st.integers(1, 2))
    xs = phase_symbols(dof)
    f = sympy.Function("f")(*xs)

    def op():
        terms = {}
        for _ in range(data.draw(st.integers(1, 3))):
            d = tuple(data.draw(st.lists(st.integers(0, 2), min_size=2 * dof, max_size=2 * dof)))
            terms[d] = data.draw(phase_polys(dof=dof, max_degree=2))
        return PhaseOperator(dof, terms)

    u, v = op(), op()
    lhs = apply_operator(u.compose(v), f, xs)
    rhs = apply_operator(u, apply_operator(v, f, xs), xs)
    assert sympy.expand(lhs - rhs) == 0


def test_operator_apply_matches_sympy():
    xs = phase_symbols(1)
    u = PhaseOperator.d_dq(0, 1) * PhasePolynomial.p(0, 1) + PhaseOperator.d_dp(0, 1).power(2)
    f = PhasePolynomial.q(0, 1, 3) * PhasePolynomial.p(0, 1, 2)
    assert poly_expr(u.apply(f), xs) == sympy.expand(apply_operator(u, poly_expr(f, xs), xs))


def test_operator_rendering_and_json(golden):
    from liouq.algebra import quantize

    h = PhasePolynomial.p(0, 1, 2) * Fraction(1, 2) + PhasePolynomial.q(0, 1, 2) * Fraction(1, 2)
    qh = quantize(h)
    assert str(qh) + "\n" == golden("quantize_harmonic.txt")
    assert qh.to_json() == json.loads(golden("quantize_harmonic.json"))
    assert ConfigOperator.from_json(qh.to_json()) == qh


def test_operator_dof_mismatch():
    with pytest.raises(DofMismatch):
        PhaseOperator.identity(1).compose(PhaseOperator.identity(2))
    with pytest.raises(DofMismatch):
        PhaseOperator.identity(1) + PhaseOperator.identity(3)
