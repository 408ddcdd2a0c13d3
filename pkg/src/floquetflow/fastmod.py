"""First-order expansion for envelopes that vary on the scale of the drive period.

The envelope of every harmonic is itself a finite Fourier series in ``e^{i j Omega t}``
with ``rho = Omega/omega`` an exact rational, so time derivatives act as
multiplication by ``i j rho omega`` and the flow ODEs stay inside the
exp-polynomial ring with rational decay rates ``n^2 + rho j n``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import comb

import numpy as np
from gmpy2 import mpq

from .algebra import LieAlgebra, commutator
from .symbolic.coeff import GaussQ
from .symbolic.expr import PARAM, EnvelopeExpr, envelope, numeric_eval
from .symbolic.series import ExpPolyS, FourierOperator, s_limit

__all__ = [
    "ValidityViolation",
    "DoubleFourierHamiltonian",
    "FastExpansion",
    "fast_expand",
    "fast_micromotion",
    "derivative_form_heff1",
    "derivative_form_kick",
    "envelope_form",
]


class ValidityViolation(ValueError):
    """Envelope harmonics too high for the flow solution to decay (``J*rho >= 1``)."""


def _rho(x) -> mpq:
    if isinstance(x, str):
        return mpq(Fraction(x))
    if isinstance(x, float):
        raise TypeError("pass the frequency ratio as an exact rational, e.g. '1/10'")
    return mpq(x)


class DoubleFourierHamiltonian:
    """Constant coefficient vectors ``h^(n,j)`` of ``sum_{n,j} e^{i n theta} e^{i j Omega t}``.

    Entries for ``(-n, -j)`` are filled by conjugation when only ``n >= 0`` is
    supplied.  Coefficients may contain parameters but no envelope atoms.
    """

    def __init__(self, algebra: LieAlgebra, entries, omega_ratio):
        self.algebra = algebra
        self.rho = _rho(omega_ratio)
        if self.rho <= 0:
            raise ValueError("omega_ratio must be positive")
        L = algebra.dim
        ent = {}
        for (n, j), vec in entries.items():
            vec = tuple(EnvelopeExpr.coerce(c) for c in vec)
            if len(vec) != L:
                raise ValueError(f"entry ({n},{j}): expected {L} coefficients")
            for c in vec:
                for name, k in c.atoms():
                    if k != PARAM:
                        raise ValueError(f"entry ({n},{j}) uses envelope atom {name!r}; only parameters allowed")
            if any(vec):
                ent[(int(n), int(j))] = vec
        if not any(n < 0 for n, _ in ent):
            for (n, j), v in list(ent.items()):
                if n > 0:
                    ent[(-n, -j)] = tuple(c.conj() for c in v)
                elif n == 0 and (0, -j) not in ent:
                    ent[(0, -j)] = tuple(c.conj() for c in v)
        for (n, j), v in ent.items():
            w = ent.get((-n, -j))
            if w is None or any(a.conj() != b for a, b in zip(v, w)):
                raise ValueError(f"entries ({n},{j}) and ({-n},{-j}) are not conjugate")
        self.entries = ent

    @property
    def J(self) -> int:
        return max((abs(j) for _, j in self.entries), default=0)

    @property
    def band(self) -> int:
        return max((abs(n) for n, _ in self.entries), default=0)

    def validity(self) -> mpq:
        return self.J * self.rho

    def check(self) -> None:
        if self.validity() >= 1:
            raise ValidityViolation(
                f"J*Omega/omega = {self.J}*{self.rho} = {self.validity()} >= 1: envelope harmonics "
                "this high make some flow components grow instead of decay"
            )

    def get(self, n: int, j: int):
        return self.entries.get((n, j))

    def harmonic(self, n: int) -> dict:
        return {j: v for (m, j), v in self.entries.items() if m == n}

    def __repr__(self):
        return f"DoubleFourierHamiltonian(band={self.band}, J={self.J}, rho={self.rho})"


@dataclass
class FastExpansion:
    """``h_eff`` through first order, each as ``{p: vector}`` for ``e^{i p Omega t}``."""

    heff0: dict
    heff1: dict
    rho: mpq
    algebra: LieAlgebra
    diagnostics: dict = field(default_factory=dict)

    def matrix(self, order: int, t_env: float, bindings=None) -> np.ndarray:
        """Numeric matrix at envelope phase ``Omega*t = t_env``."""
        src = self.heff0 if order == 0 else self.heff1
        d = self.algebra.rep_dim
        M = np.zeros((d, d), dtype=complex)
        for p, v in src.items():
            M += np.exp(1j * p * t_env) * self.algebra.to_matrix(v, bindings or {})
        return M


def _vadd(u, v):
    return v if u is None else tuple(a + b for a, b in zip(u, v))


def fast_expand(h: DoubleFourierHamiltonian, order: int = 1) -> FastExpansion:
    """Zeroth- and first-order ``h_eff`` by solving the flow in the exp-polynomial ring."""
    if order >= 2:
        raise NotImplementedError("the fast-modulation expansion is implemented to first order only")
    h.check()
    alg = h.algebra
    rho = h.rho
    heff0 = {j: v for j, v in h.harmonic(0).items()}
    flows = {}
    for (n, j), v in h.entries.items():
        if n != 0:
            rate = n * n + rho * j * n
            if rate <= 0:
                raise ValidityViolation(f"component ({n},{j}) has non-decaying rate {rate}")
            flows[(n, j)] = tuple(ExpPolyS.constant(c, rate) for c in v)
    rhs: dict = {}
    for (m, j), u in flows.items():
        if m <= 0:
            continue
        for (mm, jj), v in flows.items():
            if mm != -m:
                continue
            c = commutator(u, v, alg)
            if any(c):
                rhs[j + jj] = _vadd(rhs.get(j + jj), tuple(x * (2 * m) for x in c))
    heff1 = {}
    for p, v in rhs.items():
        lim = tuple(s_limit(x.integrate()) for x in v)
        if any(lim):
            heff1[p] = lim
    diag = {"J": h.J, "rho": str(rho), "validity": str(h.validity())}
    return FastExpansion(heff0, heff1, rho, alg, diag)


def fast_micromotion(h: DoubleFourierHamiltonian) -> dict:
    """First-order exponent ``{(m, j): h^(m,j) / (i (m + rho j))}`` (times ``1/omega``)."""
    h.check()
    out = {}
    for (m, j), v in h.entries.items():
        if m == 0:
            continue
        w = GaussQ(0, -1) / GaussQ(m + h.rho * j)
        out[(m, j)] = tuple(c * w for c in v)
    return out


def _vddt_k(v, k):
    for _ in range(k):
        v = tuple(c.ddt() for c in v)
    return v


def derivative_form_heff1(h: FourierOperator, Lmax: int = 8, JOmega_over_omega=None) -> dict:
    """Resummed first-order ``h_eff`` in terms of envelope derivatives.

    Returns ``{"orders": {1 + l: vector}, "Lmax": Lmax, "remainder_bound": ...}``.
    Term ``l`` carries ``omega**-(1 + l)``; under fast modulation each
    derivative brings back one power of ``omega`` so all kept terms are first
    order.  ``remainder_bound`` is ``x**(Lmax+1)/(1-x)`` for ``x = J*Omega/omega``
    when that ratio is supplied.
    """
    if Lmax < 0:
        raise ValueError("Lmax must be nonnegative")
    alg = h.algebra
    n0 = h.band
    orders = {}
    for l in range(Lmax + 1):
        acc = alg.zero_vector()
        for m in range(-n0, n0 + 1):
            if m == 0:
                continue
            pref = GaussQ(mpq(1, 2 * m)) * GaussQ(0, mpq(1, 2 * m)) ** l
            for r in range(l + 1):
                c = commutator(_vddt_k(h[m], l - r), _vddt_k(h[-m], r), alg)
                if any(c):
                    w = pref * (comb(l, r) * (-1) ** r)
                    acc = tuple(a + x * w for a, x in zip(acc, c))
        orders[1 + l] = acc
    out = {"orders": orders, "Lmax": Lmax}
    if JOmega_over_omega is not None:
        x = float(JOmega_over_omega)
        out["remainder_bound"] = x ** (Lmax + 1) / (1 - x) if x < 1 else float("inf")
    return out


def derivative_form_kick(h: FourierOperator, Lmax: int = 8) -> dict:
    """First-order kick ``-i/m sum_l (i/(m omega) d/dt)^l h^(m)`` graded by ``omega`` power."""
    alg = h.algebra
    out = {}
    for l in range(Lmax + 1):
        comps = {}
        for m in h.harmonics():
            if m == 0:
                continue
            w = GaussQ(0, -1) * GaussQ(mpq(1, m)) * GaussQ(0, mpq(1, m)) ** l
            comps[m] = tuple(c * w for c in _vddt_k(h[m], l))
        out[1 + l] = FourierOperator(alg, comps)
    return out


def envelope_form(h: DoubleFourierHamiltonian):
    """Rewrite as a slow-style :class:`FourierOperator` with real envelope atoms.

    Coefficient ``l`` of harmonic ``n > 0`` becomes ``re_l_n(t) + I*im_l_n(t)``;
    harmonic 0 uses the real combination.  Returns ``(operator, bind)`` where
    ``bind(t, Omega, params)`` gives numeric values for every atom and its
    derivatives up to order 12 from the double-Fourier data.
    """
    alg = h.algebra
    labels = alg.labels
    comps = {}
    for n in range(0, h.band + 1):
        vec = []
        for li, lab in enumerate(labels):
            base = f"{lab}_{n}"
            if n == 0:
                vec.append(envelope(f"re_{base}"))
            else:
                vec.append(envelope(f"re_{base}") + envelope(f"im_{base}") * GaussQ(0, 1))
        comps[n] = vec
    op = FourierOperator(alg, comps).hermitian_completed()

    def bind(t: float, Omega: float, params=None, kmax: int = 12) -> dict:
        params = params or {}
        vals = {}
        for n in range(0, h.band + 1):
            for li, lab in enumerate(labels):
                base = f"{lab}_{n}"
                for k in range(kmax + 1):
                    z = 0j
                    for j, v in h.harmonic(n).items():
                        c = numeric_eval(v[li], params)
                        z += c * (1j * j * Omega) ** k * np.exp(1j * j * Omega * t)
                    vals[(f"re_{base}", k)] = z.real
                    vals[(f"im_{base}", k)] = z.imag
        vals.update({(str(k), PARAM): v for k, v in params.items()})
        return vals

    return op, bind
