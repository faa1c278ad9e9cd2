"""Exact phase-space algebra: brackets, prequantization and projection."""
from .identities import IdentityReport, random_phase_polynomial, unit_checks, verify_identities
from .operators import ConfigOperator, DiffOperator, PhaseOperator
from .polynomial import DofMismatch, PhasePolynomial, Polynomial, QPolynomial
from .quantization import (
    check_bracket_preservation,
    check_M_condition,
    commutator,
    embed,
    lagrangian_remainder,
    lie_derivative,
    m_functional,
    poisson_bracket,
    prequantize,
    project,
    quantize,
    translate,
)
from .scalar import HBAR, HBAR_OVER_I, I, ONE, Scalar
from .tables import (
    GroenewoldReport,
    Observables,
    TableMismatch,
    TableReport,
    bracket_defect,
    groenewold_demo,
    span_defects,
    verify_tables,
)

__all__ = [
    "IdentityReport", "random_phase_polynomial", "unit_checks", "verify_identities",
    "ConfigOperator", "DiffOperator", "PhaseOperator",
    "DofMismatch", "PhasePolynomial", "Polynomial", "QPolynomial",
    "check_bracket_preservation", "check_M_condition", "commutator", "embed",
    "lagrangian_remainder", "lie_derivative", "m_functional", "poisson_bracket",
    "prequantize", "project", "quantize", "translate",
    "HBAR", "HBAR_OVER_I", "I", "ONE", "Scalar",
    "GroenewoldReport", "Observables", "TableMismatch", "TableReport",
    "bracket_defect", "groenewold_demo", "span_defects", "verify_tables",
]
