"""Exp-polynomials in the flow variable, Fourier operators and graded series."""

from __future__ import annotations

from collections.abc import Mapping
from math import factorial

from gmpy2 import mpq

from .coeff import GaussQ, to_gauss
from .expr import EnvelopeExpr, _add_into, _mul_into, _prune

__all__ = [
    "ExpPolyS",
    "Divergent",
    "solve_linear_flow_ode",
    "s_limit",
    "integrate_to_infinity",
    "FourierOperator",
    "EpsSeries",
]


class Divergent(ArithmeticError):
    """An s-integral or s-limit that does not exist in the exp-polynomial ring."""


def _rate(a) -> mpq:
    a = mpq(a) if not isinstance(a, mpq) else a
    if a < 0:
        raise ValueError("decay rates must be nonnegative")
    return a


class ExpPolyS:
    """Finite sum ``sum c_{a,k} s**k exp(-a*s)`` with envelope-expression ``c``.

    ``terms`` maps ``(a, k)`` to a raw term dict of an :class:`EnvelopeExpr`.
    """

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping | None = None):
        self.terms = {}
        if terms:
            for (a, k), c in terms.items():
                c = EnvelopeExpr.coerce(c).terms
                if c:
                    key = (_rate(a), int(k))
                    if key in self.terms:
                        acc = dict(self.terms[key])
                        _add_into(acc, c)
                        c = _prune(acc)
                    if c:
                        self.terms[key] = c
                    else:
                        self.terms.pop(key, None)

    @classmethod
    def _wrap(cls, terms: dict) -> ExpPolyS:
        obj = object.__new__(cls)
        obj.terms = terms
        return obj

    @classmethod
    def constant(cls, c, a=0, k: int = 0) -> ExpPolyS:
        c = EnvelopeExpr.coerce(c)
        return cls._wrap({(_rate(a), k): c.terms} if c.terms else {})

    @classmethod
    def zero(cls) -> ExpPolyS:
        return cls._wrap({})

    def coefficient(self, a, k: int = 0) -> EnvelopeExpr:
        return EnvelopeExpr._wrap(dict(self.terms.get((mpq(a), k), {})))

    def rates(self) -> set:
        return {a for a, _ in self.terms}

    def __bool__(self):
        return bool(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other):
        if not isinstance(other, ExpPolyS):
            return NotImplemented
        return self.terms == other.terms

    __hash__ = None

    def __add__(self, other: ExpPolyS) -> ExpPolyS:
        if not other.terms:
            return self
        if not self.terms:
            return other
        out = dict(self.terms)
        for key, c in other.terms.items():
            v = out.get(key)
            if v is None:
                out[key] = c
            else:
                acc = dict(v)
                _add_into(acc, c)
                acc = _prune(acc)
                if acc:
                    out[key] = acc
                else:
                    del out[key]
        return ExpPolyS._wrap(out)

    def __neg__(self):
        return ExpPolyS._wrap({key: {m: -c for m, c in t.items()} for key, t in self.terms.items()})

    def __sub__(self, other: ExpPolyS) -> ExpPolyS:
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, ExpPolyS):
            out: dict = {}
            for (a1, k1), t1 in self.terms.items():
                for (a2, k2), t2 in other.terms.items():
                    key = (a1 + a2, k1 + k2)
                    acc = out.get(key)
                    if acc is None:
                        acc = out[key] = {}
                    _mul_into(acc, t1, t2)
            return ExpPolyS._wrap({k: p for k, t in out.items() if (p := _prune(t))})
        if isinstance(other, EnvelopeExpr):
            return self * ExpPolyS.constant(other)
        g = to_gauss(other)
        if not g:
            return ExpPolyS.zero()
        return ExpPolyS._wrap({key: {m: c * g for m, c in t.items()} for key, t in self.terms.items()})

    __rmul__ = __mul__

    def conj(self) -> ExpPolyS:
        return ExpPolyS._wrap({key: {m: c.conjugate() for m, c in t.items()} for key, t in self.terms.items()})

    def ddt(self) -> ExpPolyS:
        """Time derivative of the coefficients; the s-dependence is untouched."""
        out = {}
        for key, t in self.terms.items():
            d = EnvelopeExpr._wrap(t).ddt().terms
            if d:
                out[key] = d
        return ExpPolyS._wrap(out)

    def dds(self) -> ExpPolyS:
        """Derivative in the flow variable."""
        out = ExpPolyS.zero()
        for (a, k), t in self.terms.items():
            c = EnvelopeExpr._wrap(t)
            part = {}
            if k:
                part[(a, k - 1)] = c * k
            if a:
                key = (a, k)
                part[key] = part.get(key, EnvelopeExpr()) - c * GaussQ(a)
            out = out + ExpPolyS(part)
        return out

    def integrate(self) -> ExpPolyS:
        """Indefinite integral from 0 to s."""
        return solve_linear_flow_ode(0, self, EnvelopeExpr())

    def evaluate(self, s: float, bindings) -> complex:
        from math import exp

        from .expr import numeric_eval

        tot = 0j
        for (a, k), t in self.terms.items():
            tot += numeric_eval(EnvelopeExpr._wrap(t), bindings) * s**k * exp(-float(a) * s)
        return tot

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for (a, k), t in sorted(self.terms.items(), key=lambda kv: kv[0]):
            f = f"({EnvelopeExpr._wrap(t)})"
            if k:
                f += "*s" if k == 1 else f"*s^{k}"
            if a:
                f += f"*exp(-{a}*s)"
            parts.append(f)
        return " + ".join(parts)

    def __repr__(self):
        return f"ExpPolyS({str(self)!r})"


def solve_linear_flow_ode(a, rhs: ExpPolyS, x0) -> ExpPolyS:
    """Closed-form solution of ``dX/ds = -a*X + rhs(s)`` with ``X(0) = x0``.

    A source term ``C s**k exp(-b*s)`` contributes ``C s**(k+1)/(k+1) exp(-a*s)``
    when ``b == a`` and, with ``d = b - a`` otherwise,
    ``C k!/d**(k+1) (exp(-a*s) - exp(-b*s) sum_j (d*s)**j / j!)``.
    """
    a = _rate(a)
    out: dict = {}

    def put(key, terms, scale):
        acc = out.get(key)
        if acc is None:
            acc = out[key] = {}
        _add_into(acc, terms, scale)

    x0 = EnvelopeExpr.coerce(x0)
    if x0.terms:
        put((a, 0), x0.terms, None)
    for (b, k), c in rhs.terms.items():
        if b == a:
            put((a, k + 1), c, GaussQ._raw(mpq(1, k + 1), mpq(0)))
            continue
        d = b - a
        kf = factorial(k)
        put((a, 0), c, GaussQ._raw(mpq(kf) / d ** (k + 1), mpq(0)))
        for j in range(k + 1):
            w = mpq(kf, factorial(j)) / d ** (k - j + 1)
            put((b, j), c, GaussQ._raw(-w, mpq(0)))
    return ExpPolyS._wrap({key: p for key, t in out.items() if (p := _prune(t))})


def s_limit(x: ExpPolyS) -> EnvelopeExpr:
    """Limit ``s -> infinity``; raises :class:`Divergent` on growing a=0 terms."""
    for (a, k), t in x.terms.items():
        if a == 0 and k > 0:
            raise Divergent(f"term s^{k} * ({EnvelopeExpr._wrap(t)}) grows without bound")
    return EnvelopeExpr._wrap(dict(x.terms.get((mpq(0), 0), {})))


def integrate_to_infinity(x: ExpPolyS) -> EnvelopeExpr:
    """Exact integral over ``s`` in ``[0, inf)`` using ``k!/a**(k+1)``."""
    acc: dict = {}
    for (a, k), t in x.terms.items():
        if a == 0:
            raise Divergent(f"non-decaying term s^{k} * ({EnvelopeExpr._wrap(t)})")
        _add_into(acc, t, GaussQ._raw(mpq(factorial(k)) / a ** (k + 1), mpq(0)))
    return EnvelopeExpr._wrap(_prune(acc))


class FourierOperator:
    """Harmonic index -> coefficient vector over a fixed algebra basis.

    Missing harmonics are zero.  Hermiticity means the vector at ``-n`` is the
    conjugate of the vector at ``n``.
    """

    __slots__ = ("algebra", "components")

    def __init__(self, algebra, components: Mapping | None = None):
        self.algebra = algebra
        self.components = {}
        L = algebra.dim
        for n, vec in (components or {}).items():
            vec = tuple(EnvelopeExpr.coerce(c) for c in vec)
            if len(vec) != L:
                raise ValueError(f"harmonic {n}: expected {L} coefficients, got {len(vec)}")
            if any(vec):
                self.components[int(n)] = vec

    @classmethod
    def from_labels(cls, algebra, data: Mapping) -> FourierOperator:
        """Build from ``{n: {label: expr}}``."""
        comps = {}
        for n, entries in data.items():
            vec = [EnvelopeExpr() for _ in range(algebra.dim)]
            for label, e in entries.items():
                idx = algebra.index(label)
                vec[idx] = vec[idx] + EnvelopeExpr.coerce(e)
            comps[int(n)] = vec
        return cls(algebra, comps)

    def __getitem__(self, n: int):
        v = self.components.get(n)
        if v is None:
            return tuple(EnvelopeExpr() for _ in range(self.algebra.dim))
        return v

    def harmonics(self):
        return sorted(self.components)

    @property
    def band(self) -> int:
        return max((abs(n) for n in self.components), default=0)

    def is_hermitian(self) -> bool:
        for n, v in self.components.items():
            w = self[-n]
            if any(a.conj() != b for a, b in zip(v, w)):
                return False
        return True

    def hermitian_completed(self) -> FourierOperator:
        """Fill negative harmonics by conjugation when only ``n >= 0`` is given."""
        comps = dict(self.components)
        if any(n < 0 for n in comps):
            return FourierOperator(self.algebra, comps)
        for n, v in list(comps.items()):
            if n > 0:
                comps[-n] = tuple(c.conj() for c in v)
        return FourierOperator(self.algebra, comps)

    def __eq__(self, other):
        if not isinstance(other, FourierOperator):
            return NotImplemented
        return self.algebra is other.algebra and self.components == other.components

    __hash__ = None

    def is_zero(self) -> bool:
        return not self.components

    def atoms(self) -> set:
        return {a for v in self.components.values() for c in v for a in c.atoms()}

    def by_label(self, n: int) -> dict:
        return {lab: c for lab, c in zip(self.algebra.labels, self[n]) if c}

    def matrix(self, n: int, bindings):
        """Numeric matrix of harmonic ``n`` in the algebra's representation."""
        import numpy as np

        from .expr import numeric_eval

        rep = self.algebra.rep_array()
        coeffs = np.array([numeric_eval(c, bindings) for c in self[n]], dtype=complex)
        return np.tensordot(coeffs, rep, axes=1)

    def __repr__(self):
        body = ", ".join(f"{n}: {self.by_label(n)}" for n in self.harmonics())
        return f"FourierOperator({{{body}}})"


class EpsSeries:
    """Orders ``0..N`` of an expansion in ``eps = 1/omega``.

    Adding orders beyond ``N`` drops them and sets ``truncated``.
    """

    __slots__ = ("order", "terms", "truncated")

    def __init__(self, order: int, terms: Mapping | None = None):
        if order < 0:
            raise ValueError("truncation order must be nonnegative")
        self.order = order
        self.terms: dict = {}
        self.truncated = False
        for i, op in (terms or {}).items():
            self[i] = op

    def __setitem__(self, i: int, op):
        if i > self.order:
            self.truncated = True
            return
        self.terms[i] = op

    def __getitem__(self, i: int):
        return self.terms[i]

    def __contains__(self, i):
        return i in self.terms

    def orders(self):
        return sorted(self.terms)

    def items(self):
        return sorted(self.terms.items())

    def __len__(self):
        return len(self.terms)

    def __repr__(self):
        return f"EpsSeries(order={self.order}, orders={self.orders()}, truncated={self.truncated})"

