"""Exact scalars: finite sums of hbar**k * (a + b*i) with rational a, b.

Real and imaginary parts are kept as ``int`` when integral and as
``fractions.Fraction`` otherwise, which keeps the common all-integer case fast.
"""
from __future__ import annotations

from fractions import Fraction
from numbers import Rational
from typing import Mapping, Tuple, Union

Number = Union[int, Fraction]
Gauss = Tuple[Number, Number]

ZERO_G: Gauss = (0, 0)


def as_rational(x) -> Number:
    """Coerce an int/Fraction/rational string into the canonical number type."""
    if isinstance(x, bool):
        raise TypeError("bool is not a valid coefficient")
    if isinstance(x, int):
        return x
    if isinstance(x, str):
        x = Fraction(x)
    if isinstance(x, Rational):
        x = Fraction(x)
        return x.numerator if x.denominator == 1 else x
    raise TypeError(f"exact rational expected, got {type(x).__name__}")


def _norm(x: Number) -> Number:
    if type(x) is Fraction and x.denominator == 1:
        return x.numerator
    return x


def gadd(a: Gauss, b: Gauss) -> Gauss:
    return (_norm(a[0] + b[0]), _norm(a[1] + b[1]))


def gsub(a: Gauss, b: Gauss) -> Gauss:
    return (_norm(a[0] - b[0]), _norm(a[1] - b[1]))


def gmul(a: Gauss, b: Gauss) -> Gauss:
    ar, ai = a
    br, bi = b
    if ai == 0 and bi == 0:
        return (_norm(ar * br), 0)
    return (_norm(ar * br - ai * bi), _norm(ar * bi + ai * br))


def gneg(a: Gauss) -> Gauss:
    return (-a[0], -a[1])


def gdiv(a: Gauss, b: Gauss) -> Gauss:
    br, bi = b
    den = br * br + bi * bi
    if den == 0:
        raise ZeroDivisionError("division by zero scalar")
    num = gmul(a, (br, -bi))
    return (_norm(Fraction(num[0]) / den), _norm(Fraction(num[1]) / den))


# powers of -i, i.e. (hbar/i)**m = (-i)**m * hbar**m
_MINUS_I_POW = ((1, 0), (0, -1), (-1, 0), (0, 1))


def minus_i_power(m: int) -> Gauss:
    return _MINUS_I_POW[m % 4]


def format_rational(x: Number) -> str:
    return str(x)


def format_gauss(g: Gauss) -> str:
    re, im = g
    if im == 0:
        return str(re)
    if re == 0:
        if im == 1:
            return "i"
        if im == -1:
            return "-i"
        return f"{im}*i"
    sign = "+" if im > 0 else "-"
    mag = abs(im)
    imag = "i" if mag == 1 else f"{mag}*i"
    return f"{re}{sign}{imag}"


class Scalar:
    """A polynomial in the formal symbol hbar with Gaussian-rational coefficients.

    Immutable; equality and hashing use the canonical term map.
    """

    __slots__ = ("_c",)

    def __init__(self, terms: Mapping[int, Gauss] | None = None):
        c = {}
        for k, g in (terms or {}).items():
            if k < 0:
                raise ValueError("negative hbar power")
            g = (as_rational(g[0]), as_rational(g[1]))
            if g != ZERO_G:
                c[int(k)] = g
        self._c = c

    @classmethod
    def _raw(cls, c: dict) -> "Scalar":
        s = cls.__new__(cls)
        s._c = c
        return s

    @classmethod
    def const(cls, re=0, im=0) -> "Scalar":
        return cls({0: (re, im)})

    @classmethod
    def hbar_power(cls, k: int = 1, re=1, im=0) -> "Scalar":
        return cls({k: (re, im)})

    @classmethod
    def coerce(cls, x) -> "Scalar":
        if isinstance(x, Scalar):
            return x
        if isinstance(x, complex):
            re, im = x.real, x.imag
            if re != int(re) or im != int(im):
                raise TypeError("only integral complex literals are exact")
            return cls.const(int(re), int(im))
        return cls.const(as_rational(x))

    def terms(self) -> dict:
        return dict(self._c)

    def is_zero(self) -> bool:
        return not self._c

    def __bool__(self) -> bool:
        return bool(self._c)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Scalar):
            try:
                other = Scalar.coerce(other)
            except TypeError:
                return NotImplemented
        return self._c == other._c

    def __hash__(self) -> int:
        return hash(frozenset(self._c.items()))

    def __neg__(self) -> "Scalar":
        return Scalar._raw({k: gneg(g) for k, g in self._c.items()})

    def __add__(self, other) -> "Scalar":
        other = Scalar.coerce(other)
        c = dict(self._c)
        for k, g in other._c.items():
            s = gadd(c.get(k, ZERO_G), g)
            if s == ZERO_G:
                c.pop(k, None)
            else:
                c[k] = s
        return Scalar._raw(c)

    __radd__ = __add__

    def __sub__(self, other) -> "Scalar":
        return self + (-Scalar.coerce(other))

    def __rsub__(self, other) -> "Scalar":
        return Scalar.coerce(other) - self

    def __mul__(self, other) -> "Scalar":
        if not isinstance(other, Scalar):
            try:
                other = Scalar.coerce(other)
            except TypeError:
                return NotImplemented
        c: dict = {}
        for k1, g1 in self._c.items():
            for k2, g2 in other._c.items():
                k = k1 + k2
                s = gadd(c.get(k, ZERO_G), gmul(g1, g2))
                if s == ZERO_G:
                    c.pop(k, None)
                else:
                    c[k] = s
        return Scalar._raw(c)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "Scalar":
        if n < 0:
            raise ValueError("negative powers are not exact in general")
        out = ONE
        for _ in range(n):
            out = out * self
        return out

    def __truediv__(self, other) -> "Scalar":
        """Exact division by a single-term scalar ``c * hbar**k``."""
        other = Scalar.coerce(other)
        if len(other._c) != 1:
            raise ValueError("can only divide by a monomial in hbar")
        (k0, g0), = other._c.items()
        c = {}
        for k, g in self._c.items():
            if k < k0:
                raise ValueError("result would contain a negative power of hbar")
            c[k - k0] = gdiv(g, g0)
        return Scalar._raw(c)

    def evaluate(self, hbar: float = 1.0) -> complex:
        return sum(complex(float(g[0]), float(g[1])) * hbar**k for k, g in self._c.items())

    def conjugate(self) -> "Scalar":
        return Scalar._raw({k: (g[0], -g[1]) for k, g in self._c.items()})

    def __str__(self) -> str:
        if not self._c:
            return "0"
        parts = []
        for k in sorted(self._c):
            g = format_gauss(self._c[k])
            if k == 0:
                parts.append(g)
                continue
            h = "hbar" if k == 1 else f"hbar^{k}"
            if g == "1":
                parts.append(h)
            elif g == "-1":
                parts.append("-" + h)
            elif self._c[k][1] != 0 and self._c[k][0] != 0:
                parts.append(f"({g})*{h}")
            else:
                parts.append(f"{g}*{h}")
        return " + ".join(parts).replace("+ -", "- ")

    def __repr__(self) -> str:
        return f"Scalar({self})"

    def to_json(self) -> list:
        return [
            {"hbar": k, "re": str(self._c[k][0]), "im": str(self._c[k][1])}
            for k in sorted(self._c)
        ]

    @classmethod
    def from_json(cls, data: list) -> "Scalar":
        return cls({d["hbar"]: (as_rational(d["re"]), as_rational(d["im"])) for d in data})


ONE = Scalar.const(1)
I = Scalar.const(0, 1)
HBAR = Scalar.hbar_power(1)
# hbar/i = -i*hbar
HBAR_OVER_I = Scalar.hbar_power(1, 0, -1)
