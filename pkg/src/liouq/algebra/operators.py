"""Normal-ordered linear differential operators with polynomial coefficients.

An operator is ``sum_a c_a(x) * d^a`` with every multiplication to the left of
every derivative. Composition moves derivatives through coefficients with the
generalized Leibniz rule, so results stay in that order and equality is plain
comparison of term maps.
"""
from __future__ import annotations

from itertools import product
from math import comb
from typing import Iterator, Mapping, Sequence, Tuple

from .polynomial import DofMismatch, PhasePolynomial, Polynomial, QPolynomial
from .scalar import Scalar

Multi = Tuple[int, ...]


class DiffOperator:
    coeff_type: type = Polynomial

    __slots__ = ("nvars", "_t")

    def __init__(self, nvars: int, terms: Mapping[Sequence[int], Polynomial] | None = None):
        self.nvars = nvars
        t: dict = {}
        for d, c in (terms or {}).items():
            d = tuple(int(x) for x in d)
            if len(d) != nvars or min(d) < 0:
                raise ValueError(f"bad derivative multi-index {d}")
            c = self._coeff(c)
            if d in t:
                c = t[d] + c
            if c.is_zero():
                t.pop(d, None)
            else:
                t[d] = c
        self._t = t

    def _coeff(self, c) -> Polynomial:
        if isinstance(c, Polynomial):
            if type(c) is not self.coeff_type or c.nvars != self._coeff_nvars():
                raise DofMismatch(f"coefficient {type(c).__name__}[{c.nvars}] for {type(self).__name__}")
            return c
        return self._zero_coeff() + Scalar.coerce(c)

    def _coeff_nvars(self) -> int:
        return self.nvars

    def _zero_coeff(self) -> Polynomial:
        return self.coeff_type._flat(self._coeff_nvars(), {})

    @classmethod
    def _raw(cls, nvars: int, t: dict):
        obj = cls.__new__(cls)
        obj.nvars = nvars
        obj._t = t
        return obj

    def _new(self, t: dict):
        return type(self)._raw(self.nvars, t)

    def _check(self, other: "DiffOperator") -> None:
        if type(other) is not type(self):
            raise TypeError(f"cannot combine {type(self).__name__} with {type(other).__name__}")
        if other.nvars != self.nvars:
            raise DofMismatch(
                f"{type(self).__name__}[{self.nvars}] vs {type(other).__name__}[{other.nvars}]"
            )

    # constructors ---------------------------------------------------------
    def identity_like(self):
        return self._new({(0,) * self.nvars: self._zero_coeff() + 1})

    def zero_like(self):
        return self._new({})

    # inspection -----------------------------------------------------------
    def terms(self) -> dict:
        return dict(self._t)

    def coefficient(self, d: Sequence[int]) -> Polynomial:
        return self._t.get(tuple(d), self._zero_coeff())

    def is_zero(self) -> bool:
        return not self._t

    def __bool__(self) -> bool:
        return bool(self._t)

    def order(self) -> int:
        return max((sum(d) for d in self._t), default=-1)

    def __eq__(self, other) -> bool:
        if not isinstance(other, DiffOperator):
            return NotImplemented
        return type(other) is type(self) and other.nvars == self.nvars and other._t == self._t

    def __hash__(self) -> int:
        return hash((type(self).__name__, self.nvars, frozenset(self._t.items())))

    def items(self) -> Iterator[Tuple[Multi, Polynomial]]:
        for d in sorted(self._t, key=lambda d: (sum(d), tuple(-x for x in d))):
            yield d, self._t[d]

    # linear structure -----------------------------------------------------
    def __neg__(self):
        return self._new({d: -c for d, c in self._t.items()})

    def __add__(self, other):
        if not isinstance(other, DiffOperator):
            other = self.identity_like() * other
        self._check(other)
        t = dict(self._t)
        for d, c in other._t.items():
            s = t[d] + c if d in t else c
            if s.is_zero():
                t.pop(d, None)
            else:
                t[d] = s
        return self._new(t)

    __radd__ = __add__

    def __sub__(self, other):
        if not isinstance(other, DiffOperator):
            other = self.identity_like() * other
        return self + (-other)

    def __mul__(self, other):
        """Scalar multiplication, or left multiplication by a coefficient polynomial."""
        if isinstance(other, DiffOperator):
            return NotImplemented
        if isinstance(other, Polynomial):
            c = self._coeff(other)
            t = {d: c * v for d, v in self._t.items()}
        else:
            try:
                s = Scalar.coerce(other)
            except TypeError:
                return NotImplemented
            t = {d: v.scale(s) for d, v in self._t.items()}
        return self._new({d: v for d, v in t.items() if not v.is_zero()})

    __rmul__ = __mul__

    def __truediv__(self, other):
        s = Scalar.coerce(other)
        out: dict = {}
        for d, c in self._t.items():
            flat: dict = {}
            for k, g in c.flat_terms().items():
                q = Scalar({k[-1]: g}) / s
                for hk, hg in q.terms().items():
                    flat[k[:-1] + (hk,)] = hg
            out[d] = c._new(flat)
        return self._new(out)

    # composition ----------------------------------------------------------
    def compose(self, other):
        """Return ``self ∘ other`` in normal order."""
        self._check(other)
        out: dict = {}
        for a, u in self._t.items():
            # split d^a = sum_{g <= a} C(a, g) (d^g acting on coefficient) d^(a-g)
            for g in product(*(range(x + 1) for x in a)):
                binom = 1
                for x, y in zip(a, g):
                    binom *= comb(x, y)
                rest = tuple(x - y for x, y in zip(a, g))
                for b, v in other._t.items():
                    dv = v.diff_multi(g)
                    if dv.is_zero():
                        continue
                    term = u * dv
                    if binom != 1:
                        term = term * binom
                    key = tuple(x + y for x, y in zip(rest, b))
                    s = out[key] + term if key in out else term
                    if s.is_zero():
                        out.pop(key, None)
                    else:
                        out[key] = s
        return self._new(out)

    def __matmul__(self, other):
        return self.compose(other)

    def power(self, n: int):
        out = self.identity_like()
        for _ in range(n):
            out = out.compose(self)
        return out

    def apply(self, f: Polynomial) -> Polynomial:
        """Act on a coefficient-space polynomial."""
        f = self._coeff(f)
        total = self._zero_coeff()
        for d, c in self._t.items():
            df = f.diff_multi(d)
            if not df.is_zero():
                total = total + c * df
        return total

    # rendering ------------------------------------------------------------
    def deriv_names(self) -> list:
        return [f"x{i + 1}" for i in range(self.nvars)]

    def _deriv_text(self, d: Multi) -> str:
        order = sum(d)
        if order == 0:
            return ""
        names = self.deriv_names()
        den = []
        for n, k in zip(names, d):
            if k == 1:
                den.append(f"d{n}")
            elif k > 1:
                den.append(f"d{n}^{k}")
        num = "d" if order == 1 else f"d^{order}"
        return f"{num}/{''.join(den)}"

    def __str__(self) -> str:
        if not self._t:
            return "0"
        out = []
        for d, c in self.items():
            dt = self._deriv_text(d)
            ct = str(c)
            if not dt:
                out.append(ct if len(c) == 1 else f"({ct})")
            elif ct == "1":
                out.append(dt)
            elif ct == "-1":
                out.append("-" + dt)
            else:
                out.append(f"({ct})*{dt}")
        return " + ".join(out).replace("+ -", "- ")

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self})"

    def to_json(self) -> dict:
        return {
            "type": type(self).__name__,
            "nvars": self.nvars,
            "terms": [{"deriv": list(d), "coeff": c.to_json()} for d, c in sorted(self._t.items())],
        }

    @classmethod
    def from_json(cls, data: dict):
        kind = _OP_TYPES[data.get("type", cls.__name__)]
        t = {tuple(e["deriv"]): Polynomial.from_json(e["coeff"]) for e in data["terms"]}
        return kind._raw(data["nvars"], t)


class PhaseOperator(DiffOperator):
    """Operator on phase-space functions; derivative index ordered (d/dq1..d/dqn, d/dp1..d/dpn)."""

    coeff_type = PhasePolynomial
    __slots__ = ()

    def __init__(self, dof: int, terms=None):
        super().__init__(2 * dof, terms)

    @property
    def dof(self) -> int:
        return self.nvars // 2

    @classmethod
    def identity(cls, dof: int):
        return cls(dof, {(0,) * (2 * dof): 1})

    @classmethod
    def zero(cls, dof: int):
        return cls(dof)

    @classmethod
    def multiplication(cls, f: PhasePolynomial):
        return cls(f.dof, {(0,) * f.nvars: f})

    @classmethod
    def d_dq(cls, k: int, dof: int):
        d = [0] * (2 * dof)
        d[k] = 1
        return cls(dof, {tuple(d): 1})

    @classmethod
    def d_dp(cls, k: int, dof: int):
        d = [0] * (2 * dof)
        d[dof + k] = 1
        return cls(dof, {tuple(d): 1})

    def deriv_names(self) -> list:
        n = self.dof
        return [f"q{i + 1}" for i in range(n)] + [f"p{i + 1}" for i in range(n)]


class ConfigOperator(DiffOperator):
    """Operator on configuration-space functions: q-polynomial coefficients, d/dq only."""

    coeff_type = QPolynomial
    __slots__ = ()

    def __init__(self, dof: int, terms=None):
        super().__init__(dof, terms)

    @property
    def dof(self) -> int:
        return self.nvars

    @classmethod
    def identity(cls, dof: int):
        return cls(dof, {(0,) * dof: 1})

    @classmethod
    def zero(cls, dof: int):
        return cls(dof)

    @classmethod
    def multiplication(cls, f: QPolynomial):
        return cls(f.dof, {(0,) * f.nvars: f})

    @classmethod
    def d_dq(cls, k: int, dof: int, order: int = 1):
        d = [0] * dof
        d[k] = order
        return cls(dof, {tuple(d): 1})

    def deriv_names(self) -> list:
        return [f"q{i + 1}" for i in range(self.nvars)]


_OP_TYPES = {c.__name__: c for c in (DiffOperator, PhaseOperator, ConfigOperator)}
