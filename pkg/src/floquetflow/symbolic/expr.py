"""Envelope expressions: the differential ring the expansion coefficients live in.

An expression is a finite sum of monomials with exact Gaussian-rational
coefficients.  A monomial is a sorted tuple of atoms (with repetition).  An atom
is ``(name, k)``: ``k >= 0`` marks the ``k``-th time derivative of a real
envelope function ``name(t)``, ``k == -1`` marks a real time-independent
parameter.
"""

from __future__ import annotations

import math
import random
from collections.abc import Iterable, Mapping

from .coeff import ONE, ZERO, GaussQ, to_gauss

__all__ = [
    "Atom",
    "Monomial",
    "EnvelopeExpr",
    "param",
    "envelope",
    "const",
    "ddt",
    "numeric_eval",
    "equal",
    "equal_sampled",
    "UnboundAtomError",
    "atom_str",
    "parse_atom",
    "DEFAULT_ANGLE_PAIRS",
]

Atom = tuple  # (name: str, k: int)
Monomial = tuple  # sorted tuple of atoms

PARAM = -1
DEFAULT_ANGLE_PAIRS = (("cos_phi", "sin_phi"),)


class UnboundAtomError(KeyError):
    pass


# raw term-dict kernels; the flow engines call these directly


def _add_into(acc: dict, terms: dict, scale: GaussQ | None = None) -> None:
    get = acc.get
    if scale is None:
        for m, c in terms.items():
            v = get(m)
            acc[m] = c if v is None else v + c
    else:
        for m, c in terms.items():
            c = c * scale
            v = get(m)
            acc[m] = c if v is None else v + c


def _mul_into(acc: dict, t1: dict, t2: dict, scale: GaussQ | None = None) -> None:
    get = acc.get
    for m1, c1 in t1.items():
        if scale is not None:
            c1 = c1 * scale
        for m2, c2 in t2.items():
            if not m1:
                key = m2
            elif not m2:
                key = m1
            else:
                key = tuple(sorted(m1 + m2))
            c = c1 * c2
            v = get(key)
            acc[key] = c if v is None else v + c


def _prune(terms: dict) -> dict:
    return {m: c for m, c in terms.items() if c}


def _scale(terms: dict, scale: GaussQ) -> dict:
    if not scale:
        return {}
    return {m: c * scale for m, c in terms.items()}


def _conj(terms: dict) -> dict:
    return {m: c.conjugate() for m, c in terms.items()}


def _ddt_monomial(m: Monomial):
    """Yield (monomial, multiplicity) pairs of the product-rule derivative."""
    seen = {}
    for idx, (name, k) in enumerate(m):
        if k < 0:
            continue
        seen[(name, k)] = seen.get((name, k), 0) + 1
    for (name, k), mult in seen.items():
        lst = list(m)
        lst.remove((name, k))
        lst.append((name, k + 1))
        lst.sort()
        yield tuple(lst), mult


def _ddt_terms(terms: dict) -> dict:
    out: dict = {}
    for m, c in terms.items():
        for m2, mult in _ddt_monomial(m):
            cc = c * mult if mult != 1 else c
            v = out.get(m2)
            out[m2] = cc if v is None else v + cc
    return _prune(out)


class EnvelopeExpr:
    """Canonical sum of monomials; structural equality is value equality."""

    __slots__ = ("terms", "_hash")

    def __init__(self, terms: Mapping | None = None):
        self.terms = {} if not terms else {m: c for m, c in terms.items() if c}
        self._hash = None

    @classmethod
    def _wrap(cls, terms: dict) -> EnvelopeExpr:
        obj = object.__new__(cls)
        obj.terms = terms
        obj._hash = None
        return obj

    # construction helpers
    @classmethod
    def coerce(cls, x) -> EnvelopeExpr:
        if isinstance(x, EnvelopeExpr):
            return x
        g = to_gauss(x)
        return cls._wrap({(): g} if g else {})

    # arithmetic
    def __add__(self, other):
        other = EnvelopeExpr.coerce(other)
        acc = dict(self.terms)
        _add_into(acc, other.terms)
        return EnvelopeExpr._wrap(_prune(acc))

    __radd__ = __add__

    def __neg__(self):
        return EnvelopeExpr._wrap({m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-EnvelopeExpr.coerce(other))

    def __rsub__(self, other):
        return EnvelopeExpr.coerce(other) - self

    def __mul__(self, other):
        if isinstance(other, EnvelopeExpr):
            acc: dict = {}
            _mul_into(acc, self.terms, other.terms)
            return EnvelopeExpr._wrap(_prune(acc))
        return EnvelopeExpr._wrap(_scale(self.terms, to_gauss(other)))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, EnvelopeExpr):
            c = other.constant_value()
            if c is None:
                raise ValueError("division is only defined by constant expressions")
            other = c
        return self * (ONE / to_gauss(other))

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            raise ValueError("only nonnegative integer powers are supported")
        out = EnvelopeExpr.coerce(1)
        for _ in range(k):
            out = out * self
        return out

    def conj(self) -> EnvelopeExpr:
        return EnvelopeExpr._wrap(_conj(self.terms))

    def ddt(self) -> EnvelopeExpr:
        return EnvelopeExpr._wrap(_ddt_terms(self.terms))

    # queries
    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    def constant_value(self) -> GaussQ | None:
        if not self.terms:
            return ZERO
        if len(self.terms) == 1 and () in self.terms:
            return self.terms[()]
        return None

    def atoms(self) -> set:
        return {a for m in self.terms for a in m}

    def is_real(self) -> bool:
        return all(c.is_real for c in self.terms.values())

    def __eq__(self, other):
        if not isinstance(other, EnvelopeExpr):
            try:
                other = EnvelopeExpr.coerce(other)
            except TypeError:
                return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self.terms.items()))
        return self._hash

    def sorted_terms(self):
        return sorted(self.terms.items(), key=lambda mc: _monomial_key(mc[0]))

    def __str__(self):
        from .printing import format_expr

        return format_expr(self)

    def __repr__(self):
        return f"EnvelopeExpr({str(self)!r})"


def _monomial_key(m: Monomial):
    return (len(m), m)


def param(name: str) -> EnvelopeExpr:
    return EnvelopeExpr._wrap({((name, PARAM),): ONE})


def envelope(name: str, k: int = 0) -> EnvelopeExpr:
    if k < 0:
        raise ValueError("derivative order must be nonnegative")
    return EnvelopeExpr._wrap({((name, k),): ONE})


def const(x) -> EnvelopeExpr:
    return EnvelopeExpr.coerce(x)


def ddt(e: EnvelopeExpr) -> EnvelopeExpr:
    """Time derivative by the product rule; parameters are constants."""
    return EnvelopeExpr.coerce(e).ddt()


def atom_str(atom: Atom) -> str:
    name, k = atom
    return name if k < 0 else name + "'" * k


def parse_atom(key, envelopes: Iterable[str] = ()) -> Atom:
    """Normalize an atom key given as a tuple or as text (``"g''"``, ``"Delta"``)."""
    if isinstance(key, tuple):
        return key
    s = str(key)
    k = len(s) - len(s.rstrip("'"))
    name = s[: len(s) - k] if k else s
    if k or name in set(envelopes):
        return (name, k)
    return (name, PARAM)


def numeric_eval(e: EnvelopeExpr, bindings: Mapping) -> complex:
    """Evaluate with float arithmetic.

    ``bindings`` maps atoms (tuples, or their text form such as ``"g'"``) to
    numbers.  Bare names are matched both as parameters and as underived
    envelopes.
    """
    vals = _normalize_bindings(bindings)
    total = 0j
    for m, c in e.terms.items():
        v = complex(c)
        for a in m:
            try:
                v *= vals[a]
            except KeyError:
                raise UnboundAtomError(f"atom {atom_str(a)!r} is not bound") from None
        total += v
    return total


def _normalize_bindings(bindings: Mapping) -> dict:
    vals = {}
    for key, v in bindings.items():
        if isinstance(key, tuple):
            vals[key] = v
            continue
        s = str(key)
        k = len(s) - len(s.rstrip("'"))
        name = s[: len(s) - k] if k else s
        vals[(name, k)] = v
        if not k:
            vals[(name, PARAM)] = v
    return vals


def _magnitude(e: EnvelopeExpr, vals: dict) -> float:
    tot = 0.0
    for m, c in e.terms.items():
        v = abs(complex(c))
        for a in m:
            v *= abs(vals[a])
        tot += v
    return tot


def random_bindings(atoms: Iterable[Atom], rng: random.Random, angle_pairs=DEFAULT_ANGLE_PAIRS) -> dict:
    """Random real values for ``atoms``; paired angle atoms get ``cos x, sin x``."""
    vals = {}
    atoms = set(atoms)
    for cname, sname in angle_pairs:
        x = rng.uniform(-math.pi, math.pi)
        vals[(cname, PARAM)] = math.cos(x)
        vals[(sname, PARAM)] = math.sin(x)
    for a in atoms:
        if a not in vals:
            vals[a] = rng.uniform(-1.5, 1.5)
    return vals


def equal(e1, e2) -> bool:
    """Canonical-form equality."""
    return EnvelopeExpr.coerce(e1) == EnvelopeExpr.coerce(e2)


def equal_sampled(
    e1,
    e2,
    trials: int = 100,
    *,
    rtol: float = 1e-10,
    seed: int | None = 0,
    angle_pairs=DEFAULT_ANGLE_PAIRS,
) -> bool:
    """Compare two expressions at ``trials`` random real bindings.

    The tolerance is relative to the summed magnitude of all monomials, which
    keeps the test meaningful when the true value cancels to zero.
    """
    e1 = EnvelopeExpr.coerce(e1)
    e2 = EnvelopeExpr.coerce(e2)
    if e1 == e2:
        return True
    rng = random.Random(seed)
    atoms = e1.atoms() | e2.atoms()
    for _ in range(trials):
        vals = random_bindings(atoms, rng, angle_pairs)
        v1 = numeric_eval(e1, vals)
        v2 = numeric_eval(e2, vals)
        scale = max(_magnitude(e1, vals), _magnitude(e2, vals), 1e-300)
        if abs(v1 - v2) > rtol * scale:
            return False
    return True
