"""Exact Gaussian-rational numbers ``a + b*i`` with rational ``a`` and ``b``."""

from __future__ import annotations

from fractions import Fraction
from numbers import Rational

from gmpy2 import mpq

__all__ = ["GaussQ", "to_gauss", "ZERO", "ONE", "I"]

_Q0 = mpq(0)


def _q(x) -> mpq:
    if isinstance(x, mpq):
        return x
    if isinstance(x, (int, Fraction, Rational)):
        return mpq(x)
    if isinstance(x, str):
        return mpq(Fraction(x))
    if isinstance(x, float):
        return mpq(Fraction(x))
    raise TypeError(f"cannot convert {type(x).__name__} to an exact rational")


class GaussQ:
    """Immutable exact complex number with rational parts."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = _q(re)
        self.im = _q(im)

    @classmethod
    def _raw(cls, re: mpq, im: mpq) -> GaussQ:
        obj = object.__new__(cls)
        obj.re = re
        obj.im = im
        return obj

    def __add__(self, other):
        if not isinstance(other, GaussQ):
            other = to_gauss(other)
        return GaussQ._raw(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __sub__(self, other):
        if not isinstance(other, GaussQ):
            other = to_gauss(other)
        return GaussQ._raw(self.re - other.re, self.im - other.im)

    def __rsub__(self, other):
        return to_gauss(other) - self

    def __mul__(self, other):
        if not isinstance(other, GaussQ):
            other = to_gauss(other)
        a, b, c, d = self.re, self.im, other.re, other.im
        if not b and not d:
            return GaussQ._raw(a * c, _Q0)
        return GaussQ._raw(a * c - b * d, a * d + b * c)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, GaussQ):
            other = to_gauss(other)
        c, d = other.re, other.im
        den = c * c + d * d
        if not den:
            raise ZeroDivisionError("division by zero Gaussian rational")
        a, b = self.re, self.im
        return GaussQ._raw((a * c + b * d) / den, (b * c - a * d) / den)

    def __rtruediv__(self, other):
        return to_gauss(other) / self

    def __neg__(self):
        return GaussQ._raw(-self.re, -self.im)

    def __pos__(self):
        return self

    def __pow__(self, k: int):
        if not isinstance(k, int):
            raise TypeError("only integer powers are supported")
        if k < 0:
            return ONE / (self ** (-k))
        out = ONE
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def conjugate(self) -> GaussQ:
        return GaussQ._raw(self.re, -self.im)

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __eq__(self, other):
        if isinstance(other, GaussQ):
            return self.re == other.re and self.im == other.im
        try:
            other = to_gauss(other)
        except TypeError:
            return NotImplemented
        return self.re == other.re and self.im == other.im

    def __hash__(self):
        if not self.im:
            return hash(self.re)
        return hash((self.re, self.im))

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    @property
    def is_real(self) -> bool:
        return not self.im

    def __repr__(self):
        return f"GaussQ({self.re}, {self.im})"

    def __str__(self):
        if not self.im:
            return str(self.re)
        if not self.re:
            return f"{self.im}*I"
        sign = "+" if self.im > 0 else "-"
        return f"({self.re}{sign}{abs(self.im)}*I)"


def to_gauss(x) -> GaussQ:
    """Convert ints, rationals, decimal strings or exact complex pairs to :class:`GaussQ`.

    Floats are converted by their exact binary value; pass strings such as
    ``"0.3"`` when the decimal value is intended.
    """
    if isinstance(x, GaussQ):
        return x
    if isinstance(x, complex):
        return GaussQ(Fraction(x.real), Fraction(x.imag))
    if isinstance(x, tuple) and len(x) == 2:
        return GaussQ(x[0], x[1])
    return GaussQ(x, 0)


ZERO = GaussQ(0)
ONE = GaussQ(1)
I = GaussQ(0, 1)
