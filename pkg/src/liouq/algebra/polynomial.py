"""Sparse exact polynomials with Scalar coefficients.

Internally a polynomial is a flat dict keyed by ``exponents + (hbar_power,)``
with Gaussian-rational values; the public view groups the hbar powers back into
:class:`~liouq.algebra.scalar.Scalar` coefficients.
"""
from __future__ import annotations

from typing import Iterator, Mapping, Sequence, Tuple

from .scalar import (
    ZERO_G,
    Gauss,
    Scalar,
    as_rational,
    gadd,
    gmul,
    gneg,
)

Exps = Tuple[int, ...]


class DofMismatch(ValueError):
    """Operands live on different spaces (dof or variable layout differ)."""


def _acc(d: dict, key, g: Gauss) -> None:
    s = gadd(d.get(key, ZERO_G), g) if key in d else g
    if s == ZERO_G:
        d.pop(key, None)
    else:
        d[key] = s


class Polynomial:
    """Polynomial in ``nvars`` commuting variables over hbar-polynomial scalars."""

    __slots__ = ("nvars", "_t", "_hash")

    def __init__(self, nvars: int, terms: Mapping[Sequence[int], object] | None = None):
        if nvars < 1:
            raise ValueError("nvars must be >= 1")
        self.nvars = nvars
        flat: dict = {}
        for exps, coeff in (terms or {}).items():
            exps = tuple(int(e) for e in exps)
            if len(exps) != nvars or min(exps) < 0:
                raise ValueError(f"bad exponent vector {exps} for {nvars} variables")
            for k, g in Scalar.coerce(coeff).terms().items():
                _acc(flat, exps + (k,), g)
        self._t = flat
        self._hash = None

    # construction helpers -------------------------------------------------
    @classmethod
    def _flat(cls, nvars: int, flat: dict):
        obj = cls.__new__(cls)
        obj.nvars = nvars
        obj._t = flat
        obj._hash = None
        return obj

    def _new(self, flat: dict):
        return type(self)._flat(self.nvars, flat)

    @classmethod
    def zero(cls, nvars: int):
        return cls._flat(nvars, {})

    @classmethod
    def constant(cls, nvars: int, c=1):
        return cls(nvars, {(0,) * nvars: c})

    @classmethod
    def variable(cls, nvars: int, i: int, power: int = 1):
        e = [0] * nvars
        e[i] = power
        return cls(nvars, {tuple(e): 1})

    def _check(self, other: "Polynomial") -> None:
        if type(other) is not type(self):
            raise TypeError(f"cannot combine {type(self).__name__} with {type(other).__name__}")
        if other.nvars != self.nvars:
            raise DofMismatch(
                f"{type(self).__name__}[{self.nvars}] vs {type(other).__name__}[{other.nvars}]"
            )

    def _const(self, c):
        z = (0,) * self.nvars
        return self._new({z + (k,): g for k, g in Scalar.coerce(c).terms().items()})

    def _lift(self, other):
        if isinstance(other, Polynomial):
            self._check(other)
            return other
        return self._const(other)

    # inspection -----------------------------------------------------------
    def is_zero(self) -> bool:
        return not self._t

    def __bool__(self) -> bool:
        return bool(self._t)

    def __len__(self) -> int:
        return len(self.monomials_dict())

    def monomials_dict(self) -> dict:
        out: dict = {}
        for key, g in self._t.items():
            out.setdefault(key[:-1], {})[key[-1]] = g
        return {e: Scalar(c) for e, c in out.items()}

    def monomials(self) -> Iterator[Tuple[Exps, Scalar]]:
        md = self.monomials_dict()
        for e in sorted(md, key=lambda e: (sum(e), tuple(-x for x in e))):
            yield e, md[e]

    def coefficient(self, exps: Sequence[int]) -> Scalar:
        exps = tuple(exps)
        return Scalar({k[-1]: g for k, g in self._t.items() if k[:-1] == exps})

    def flat_terms(self) -> dict:
        return dict(self._t)

    def degree(self) -> int:
        """Total degree in the variables (hbar not counted); -1 for zero."""
        return max((sum(k[:-1]) for k in self._t), default=-1)

    def is_constant(self) -> bool:
        return all(not any(k[:-1]) for k in self._t)

    def constant_term(self) -> Scalar:
        return self.coefficient((0,) * self.nvars)

    def __eq__(self, other) -> bool:
        if isinstance(other, Polynomial):
            return type(other) is type(self) and other.nvars == self.nvars and other._t == self._t
        try:
            return self == self._lift(other)
        except TypeError:
            return NotImplemented

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((type(self).__name__, self.nvars, frozenset(self._t.items())))
        return self._hash

    # ring operations ------------------------------------------------------
    def __neg__(self):
        return self._new({k: gneg(g) for k, g in self._t.items()})

    def __add__(self, other):
        other = self._lift(other)
        flat = dict(self._t)
        for k, g in other._t.items():
            _acc(flat, k, g)
        return self._new(flat)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) - self

    def __mul__(self, other):
        if isinstance(other, Polynomial):
            self._check(other)
            flat: dict = {}
            for ka, ga in self._t.items():
                for kb, gb in other._t.items():
                    _acc(flat, tuple(x + y for x, y in zip(ka, kb)), gmul(ga, gb))
            return self._new(flat)
        try:
            s = Scalar.coerce(other)
        except TypeError:
            return NotImplemented
        return self.scale(s)

    def __rmul__(self, other):
        return self.__mul__(other)

    def scale(self, s: Scalar):
        flat: dict = {}
        for k, g in self._t.items():
            for hk, hg in s.terms().items():
                _acc(flat, k[:-1] + (k[-1] + hk,), gmul(g, hg))
        return self._new(flat)

    def __pow__(self, n: int):
        if n < 0:
            raise ValueError("negative power")
        out = self._const(1)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def diff(self, i: int, order: int = 1):
        """Partial derivative ``d^order / dx_i^order``."""
        if order == 0:
            return self
        flat: dict = {}
        for k, (re, im) in self._t.items():
            e = k[i]
            if e < order:
                continue
            f = 1
            for j in range(order):
                f *= e - j
            nk = k[:i] + (e - order,) + k[i + 1:]
            _acc(flat, nk, (re * f, im * f))
        return self._new(flat)

    def diff_multi(self, orders: Sequence[int]):
        out = self
        for i, o in enumerate(orders):
            if o:
                out = out.diff(i, o)
                if not out._t:
                    break
        return out

    def evaluate(self, values: Sequence, hbar: float = 1.0):
        """Numeric evaluation; ``values`` may hold floats or numpy arrays."""
        total = 0
        for k, (re, im) in self._t.items():
            c = complex(float(re), float(im)) * hbar ** k[-1]
            if c.imag == 0:
                c = c.real
            term = c
            for x, e in zip(values, k[:-1]):
                if e:
                    term = term * x**e
            total = total + term
        return total

    # rendering ------------------------------------------------------------
    def var_names(self) -> list:
        return [f"x{i + 1}" for i in range(self.nvars)]

    def _monomial_text(self, exps: Exps) -> str:
        names = self.var_names()
        parts = []
        for n, e in zip(names, exps):
            if e == 1:
                parts.append(n)
            elif e > 1:
                parts.append(f"{n}^{e}")
        return "*".join(parts)

    def __str__(self) -> str:
        if not self._t:
            return "0"
        out = []
        for exps, s in self.monomials():
            mono = self._monomial_text(exps)
            coeff = str(s)
            if not mono:
                out.append(coeff if len(s.terms()) == 1 else f"({coeff})")
            elif coeff == "1":
                out.append(mono)
            elif coeff == "-1":
                out.append("-" + mono)
            elif len(s.terms()) == 1 and " " not in coeff and not _is_complex_text(s):
                out.append(f"{coeff}*{mono}")
            else:
                out.append(f"({coeff})*{mono}")
        return " + ".join(out).replace("+ -", "- ")

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self})"

    def to_json(self) -> dict:
        return {
            "type": type(self).__name__,
            "nvars": self.nvars,
            "terms": [
                {"exp": list(k[:-1]), "hbar": k[-1], "re": str(g[0]), "im": str(g[1])}
                for k, g in sorted(self._t.items())
            ],
        }

    @classmethod
    def from_json(cls, data: dict):
        kind = _POLY_TYPES[data.get("type", cls.__name__)]
        flat: dict = {}
        for t in data["terms"]:
            g = (as_rational(t["re"]), as_rational(t["im"]))
            _acc(flat, tuple(t["exp"]) + (t["hbar"],), g)
        return kind._flat(data["nvars"], flat)


def _is_complex_text(s: Scalar) -> bool:
    return any(g[0] != 0 and g[1] != 0 for g in s.terms().values())


class PhasePolynomial(Polynomial):
    """Polynomial on 2n-dimensional phase space, variables ordered (q1..qn, p1..pn)."""

    __slots__ = ()

    def __init__(self, dof: int, terms: Mapping[Sequence[int], object] | None = None):
        super().__init__(2 * dof, terms)

    @classmethod
    def zero(cls, dof: int):
        return cls._flat(2 * dof, {})

    @classmethod
    def constant(cls, dof: int, c=1):
        return cls._flat(2 * dof, {}) + c

    @classmethod
    def q(cls, k: int, dof: int, power: int = 1):
        e = [0] * (2 * dof)
        e[k] = power
        return cls(dof, {tuple(e): 1})

    @classmethod
    def p(cls, k: int, dof: int, power: int = 1):
        e = [0] * (2 * dof)
        e[dof + k] = power
        return cls(dof, {tuple(e): 1})

    @classmethod
    def from_terms(cls, dof: int, terms: Mapping[Tuple[Sequence[int], Sequence[int]], object]):
        """Build from ``{(alpha, beta): coeff}`` with alpha over q and beta over p."""
        return cls(dof, {tuple(a) + tuple(b): c for (a, b), c in terms.items()})

    @property
    def dof(self) -> int:
        return self.nvars // 2

    def diff_q(self, k: int, order: int = 1):
        return self.diff(k, order)

    def diff_p(self, k: int, order: int = 1):
        return self.diff(self.dof + k, order)

    def var_names(self) -> list:
        n = self.dof
        return [f"q{i + 1}" for i in range(n)] + [f"p{i + 1}" for i in range(n)]

    def evaluate_qp(self, q: Sequence, p: Sequence, hbar: float = 1.0):
        return self.evaluate(list(q) + list(p), hbar)


class QPolynomial(Polynomial):
    """Polynomial in configuration coordinates q1..qn only."""

    __slots__ = ()

    @property
    def dof(self) -> int:
        return self.nvars

    @classmethod
    def q(cls, k: int, dof: int, power: int = 1):
        return cls.variable(dof, k, power)

    def var_names(self) -> list:
        return [f"q{i + 1}" for i in range(self.nvars)]


_POLY_TYPES = {c.__name__: c for c in (Polynomial, PhasePolynomial, QPolynomial)}
