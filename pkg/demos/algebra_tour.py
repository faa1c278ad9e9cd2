"""Exact phase-space algebra: brackets, prequantization, projection and where it breaks.

Run with ``python demos/algebra_tour.py``.
"""
from fractions import Fraction

from liouq.algebra import (
    PhasePolynomial,
    bracket_defect,
    lagrangian_remainder,
    lie_derivative,
    poisson_bracket,
    prequantize,
    quantize,
    verify_tables,
)


def main():
    q, p = PhasePolynomial.q(0, 1), PhasePolynomial.p(0, 1)
    H = p * p * Fraction(1, 2) + q * q * Fraction(1, 2) + q**4 * Fraction(1, 10)

    print("H            =", H)
    print("{q, p}       =", poisson_bracket(q, p))
    print("{q, H}       =", poisson_bracket(q, H))
    print("Lbar_H       =", lagrangian_remainder(H))
    print("D_H          =", lie_derivative(H))
    print("L_H          =", prequantize(H))
    print("quantize(H)  =", quantize(H))

    rep = verify_tables()
    print(f"\ntables at n=3: {len(rep.entries)} entries, all exact: {rep.ok}")

    # the projection keeps brackets for low-degree pairs, not beyond
    for a, b in [(q, p), (q * p, q * q), (q * q, p * p), (q**3, p**3)]:
        d = bracket_defect(a, b)
        print(f"  ({a}, {b}): preserved={d.preserved}  difference={d.difference}")


if __name__ == "__main__":
    main()
