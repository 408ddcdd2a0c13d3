"""Order-by-order solution of the Kamiltonian flow equations.

Three engines share one output type:

* ``toda_expand``: continuous flow with the sign generator, which never
  populates harmonics beyond the input band;
* ``vmm_expand``: continuous flow with the harmonic-weighted generator;
* ``discrete_expand``: repeated finite unitary steps that each remove one order
  of every off-diagonal harmonic.

Internally hbar = 1 and every order ``i`` carries ``omega**-i``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import factorial

from gmpy2 import mpq

from .algebra import LieAlgebra, commutator
from .symbolic.coeff import ONE, GaussQ
from .symbolic.expr import EnvelopeExpr
from .symbolic.series import (
    Divergent,
    EpsSeries,
    ExpPolyS,
    FourierOperator,
    s_limit,
    solve_linear_flow_ode,
)

__all__ = [
    "FlowHistory",
    "ExpansionResult",
    "InternalConsistencyError",
    "toda_expand",
    "vmm_expand",
    "discrete_expand",
    "expand",
    "reference_heff",
    "double_sum_A",
    "double_sum_B",
]

_I = GaussQ(0, 1)


class InternalConsistencyError(RuntimeError):
    """A flow solution broke a structural guarantee (divergent limit, stray harmonic)."""


def _sgn(x: int) -> int:
    return (x > 0) - (x < 0)


def _vzero(v) -> bool:
    return v is None or not any(v)


def _vadd(u, v):
    if u is None:
        return v
    if v is None:
        return u
    return tuple(a + b for a, b in zip(u, v))


def _vscale(v, c):
    return tuple(x * c for x in v)


def _vconj(v):
    return tuple(x.conj() for x in v)


def _vddt(v):
    return tuple(x.ddt() for x in v)


@dataclass
class FlowHistory:
    """Solved flow components ``H[i][n]`` as vectors of :class:`ExpPolyS`.

    ``weight(n)`` is the generator weight: the generator at order ``i`` is
    ``sum_n weight(n) P_n H[i-1][n]``.
    """

    engine: str
    algebra: LieAlgebra
    order: int
    band: int
    components: dict = field(default_factory=dict)
    steps: list = field(default_factory=list)

    def weight(self, n: int) -> int:
        if self.engine.startswith("toda"):
            return _sgn(n)
        if self.engine == "vmm":
            return n
        raise ValueError(f"engine {self.engine!r} has no continuous generator")

    def get(self, i: int, n: int):
        return self.components.get(i, {}).get(n)

    def harmonics(self, i: int):
        return sorted(n for n, v in self.components.get(i, {}).items() if not _vzero(v))

    def max_harmonic(self) -> int:
        return max((abs(n) for i in self.components for n in self.harmonics(i)), default=0)

    def generator(self, i: int) -> dict:
        """Order-``i`` generator components ``{m: vector}`` (flow variable rescaled)."""
        out = {}
        for m, v in self.components.get(i - 1, {}).items():
            w = self.weight(m) if m else 0
            if w and not _vzero(v):
                out[m] = _vscale(v, w)
        return out


@dataclass
class ExpansionResult:
    h_eff: EpsSeries
    flow_history: FlowHistory
    engine: str
    algebra: LieAlgebra
    diagnostics: dict = field(default_factory=dict)

    def order(self, i: int) -> tuple:
        return self.h_eff[i][0]

    def total(self, upto: int | None = None) -> tuple:
        upto = self.h_eff.order if upto is None else upto
        acc = self.algebra.zero_vector()
        for i, op in self.h_eff.items():
            if i <= upto:
                acc = _vadd(acc, op[0])
        return acc


def _prepare(h: FourierOperator) -> FourierOperator:
    if not h.is_hermitian():
        h = h.hermitian_completed()
        if not h.is_hermitian():
            raise ValueError("Fourier data violates h^(-n) = conj(h^(n))")
    return h


def _comm_sum(hist: dict, i: int, terms, alg) -> tuple | None:
    """``sum_{a+b=i-1} sum_(w,m,k) w [H_a^m, H_b^k]``."""
    acc = None
    for a in range(i):
        b = i - 1 - a
        Ha, Hb = hist.get(a, {}), hist.get(b, {})
        for w, m, k in terms:
            u, v = Ha.get(m), Hb.get(k)
            if _vzero(u) or _vzero(v):
                continue
            c = commutator(u, v, alg)
            acc = _vadd(acc, c if w == 1 else _vscale(c, w))
    return acc


def _continuous(h, N, engine, band, rate, dcoef, pair_terms, conjugate_negatives, check_band=None):
    if N < 0:
        raise ValueError("expansion order must be nonnegative")
    h = _prepare(h)
    alg = h.algebra
    L = alg.dim
    zero = tuple(ExpPolyS.zero() for _ in range(L))
    hist: dict = {}
    heff = EpsSeries(N)
    diag = {"stray_harmonics": 0}
    ns = [n for n in range(-band, band + 1) if n > 0 or (n < 0 and not conjugate_negatives)]
    for i in range(N + 1):
        cur = hist.setdefault(i, {})
        for n in ns:
            if i == 0:
                vec = h[n] if abs(n) <= band else None
                if vec is None or not any(vec):
                    continue
                cur[n] = tuple(ExpPolyS.constant(c, rate(n)) for c in vec)
                continue
            rhs = _comm_sum(hist, i, pair_terms(n), alg)
            prev = hist[i - 1].get(n)
            if not _vzero(prev):
                rhs = _vadd(rhs, _vscale(_vddt(prev), dcoef(n)))
            if _vzero(rhs):
                continue
            sol = tuple(solve_linear_flow_ode(rate(n), x, 0) for x in rhs)
            for x in sol:
                try:
                    lim = s_limit(x)
                except Divergent as exc:
                    raise InternalConsistencyError(f"order {i}, harmonic {n}: {exc}") from None
                if lim:
                    raise InternalConsistencyError(f"order {i}, harmonic {n} does not decay: {lim}")
            if check_band is not None and abs(n) > check_band and any(sol):
                diag["stray_harmonics"] += 1
            cur[n] = sol
        if conjugate_negatives:
            for n in [n for n in cur if n > 0]:
                cur[-n] = _vconj(cur[n])
        # zero mode
        if i == 0:
            cur[0] = tuple(ExpPolyS.constant(c) for c in h[0])
        else:
            rhs = _comm_sum(hist, i, pair_terms(0), alg)
            cur[0] = zero if _vzero(rhs) else tuple(x.integrate() for x in rhs)
        try:
            h0 = tuple(s_limit(x) for x in cur[0])
        except Divergent as exc:
            raise InternalConsistencyError(f"order {i}, zero mode: {exc}") from None
        heff[i] = FourierOperator(alg, {0: h0})
        if i == 0:
            heff[i] = FourierOperator(alg, {0: h[0]})
    history = FlowHistory(engine, alg, N, band, hist)
    return ExpansionResult(heff, history, engine, alg, diag)


def toda_expand(h: FourierOperator, N: int, *, form: str = "banded", band: int | None = None,
                conjugate_negatives: bool = True) -> ExpansionResult:
    """Expand with the sign generator through order ``N``.

    ``form="banded"`` sums only commutators that stay inside the input band.
    ``form="raw"`` uses the unrestricted sign-weighted double sum over a wider
    allocation (default ``(N+1)*n0``) and counts any harmonic that appears
    outside the input band in ``diagnostics["stray_harmonics"]``.
    """
    h = _prepare(h)
    n0 = max(h.band, 1)

    def rate(n):
        return mpq(abs(n))

    def dcoef(n):
        return _I * _sgn(n)

    if form == "banded":
        B = n0

        def pair_terms(n):
            if n > 0:
                return [(1, n, 0)] + [(2, n + l, -l) for l in range(1, n0 - n + 1)]
            if n < 0:
                return [(1, 0, n)] + [(2, l, n - l) for l in range(1, n0 + n + 1)]
            return [(2, m, -m) for m in range(1, n0 + 1)]

        return _continuous(h, N, "toda", B, rate, dcoef, pair_terms, conjugate_negatives)
    if form == "raw":
        B = band if band is not None else (N + 1) * n0

        def pair_terms(n):
            return [(_sgn(m - n), m, n - m) for m in range(-B, B + 1) if m != n and abs(n - m) <= B]

        return _continuous(h, N, "toda-raw", B, rate, dcoef, pair_terms, conjugate_negatives, check_band=n0)
    raise ValueError("form must be 'banded' or 'raw'")


def vmm_expand(h: FourierOperator, N: int, *, conjugate_negatives: bool = True) -> ExpansionResult:
    """Expand with the harmonic-weighted generator.  The band widens by ``n0`` per order."""
    h = _prepare(h)
    n0 = max(h.band, 1)
    B = (N + 1) * n0

    def pair_terms(n):
        return [(m - n, m, n - m) for m in range(-B, B + 1) if m != n and abs(n - m) <= B]

    return _continuous(
        h, N, "vmm", B, lambda n: mpq(n * n), lambda n: _I * n, pair_terms, conjugate_negatives
    )


# discrete flow on graded extended-space operators {(order, harmonic): vector}


def _ext_add(acc: dict, A: dict, scale=None) -> None:
    for key, v in A.items():
        if scale is not None:
            v = _vscale(v, scale)
        acc[key] = _vadd(acc.get(key), v)


def _ext_comm(A: dict, B: dict, N: int, alg) -> dict:
    out: dict = {}
    for (i1, n1), u in A.items():
        for (i2, n2), v in B.items():
            if i1 + i2 > N:
                continue
            c = commutator(u, v, alg)
            if any(c):
                key = (i1 + i2, n1 + n2)
                out[key] = _vadd(out.get(key), c)
    return {k: v for k, v in out.items() if any(v)}


def _ext_series(X: dict, T: dict, first_k: int, weight, N: int, alg) -> dict:
    """``sum_{k >= first_k} weight(k) ad_X^(k - first_k)(T)``."""
    acc: dict = {}
    k = first_k
    while T:
        w = weight(k)
        _ext_add(acc, T, w)
        T = _ext_comm(X, T, N, alg)
        k += 1
    return acc


def discrete_expand(h: FourierOperator, steps: int) -> ExpansionResult:
    """Apply ``steps`` discrete flow steps and keep ``h_eff`` through order ``2*steps``.

    Step ``s`` uses the generator ``X = sum_{m != 0} P_m H^m_s / (m omega)`` and
    the exact transformation ``K -> e^X K e^-X - i e^X d/dt e^-X``, with every
    adjoint series summed until it leaves the kept orders.
    """
    if steps < 1:
        raise ValueError("steps must be at least 1")
    h = _prepare(h)
    alg = h.algebra
    N = 2 * steps
    K = {(0, n): v for n, v in h.components.items() if any(v)}
    trace = []
    for s in range(steps):
        X, Y, Xd = {}, {}, {}
        for (i, m), v in K.items():
            if i == s and m != 0:
                x = _vscale(v, GaussQ(mpq(1, m)))
                X[(s + 1, m)] = x
                Y[(s, m)] = _vscale(v, -ONE)
                d = _vddt(x)
                if any(d):
                    Xd[(s + 1, m)] = d
        trace.append(X)
        new = dict(K)
        _ext_add(new, _ext_series(X, _ext_comm(X, K, N, alg), 1, lambda k: GaussQ(mpq(1, factorial(k))), N, alg))
        _ext_add(new, _ext_series(X, Y, 1, lambda k: GaussQ(mpq(1, factorial(k))), N, alg))
        _ext_add(new, _ext_series(X, Xd, 0, lambda k: _I * GaussQ(mpq(1, factorial(k + 1))), N, alg))
        K = {k: v for k, v in new.items() if v is not None and any(v)}
        for (i, m) in K:
            if m != 0 and i <= s:
                raise InternalConsistencyError(f"step {s + 1}: off-diagonal harmonic {m} survives at order {i}")
    heff = EpsSeries(N)
    for i in range(N + 1):
        heff[i] = FourierOperator(alg, {0: K.get((i, 0), alg.zero_vector())})
    band = max((abs(m) for (_, m) in K), default=0)
    history = FlowHistory("discrete", alg, N, band, {}, steps=trace)
    diag = {"kept_order": N, "final_band": band}
    return ExpansionResult(heff, history, "discrete", alg, diag)


def expand(h: FourierOperator, order: int, engine: str = "toda", steps: int | None = None) -> ExpansionResult:
    if engine == "toda":
        return toda_expand(h, order)
    if engine == "vmm":
        return vmm_expand(h, order)
    if engine == "discrete":
        if steps is None:
            steps = max(1, (order + 1) // 2)
        return discrete_expand(h, steps)
    raise ValueError(f"unknown engine {engine!r}")


# closed-form first and second orders (test fixtures)


def reference_heff(order: int, h: FourierOperator) -> FourierOperator:
    """Closed-form ``h_eff`` at order 1 or 2 from the Fourier harmonics."""
    h = _prepare(h)
    alg = h.algebra
    acc = alg.zero_vector()
    n0 = h.band
    c = lambda u, v: commutator(u, v, alg)  # noqa: E731
    if order == 1:
        for m in range(1, n0 + 1):
            acc = _vadd(acc, _vscale(c(h[m], h[-m]), GaussQ(mpq(1, m))))
        return FourierOperator(alg, {0: acc})
    if order == 2:
        for n in range(-n0, n0 + 1):
            if n == 0:
                continue
            first = _vadd(c(h[n], c(h[0], h[-n])), _vscale(c(_vddt(h[n]), h[-n]), _I))
            acc = _vadd(acc, _vscale(first, GaussQ(mpq(1, 2 * n * n))))
        acc = _vadd(acc, double_sum_A(h))
        return FourierOperator(alg, {0: acc})
    raise ValueError("reference formulas exist for orders 1 and 2 only")


def _double_sum(h: FourierOperator, weight) -> tuple:
    alg = h.algebra
    n0 = h.band
    acc = alg.zero_vector()
    for n in range(-n0, n0 + 1):
        if n == 0:
            continue
        for m in range(-2 * n0, 2 * n0 + 1):
            if m in (0, n) or abs(m) > n0 or abs(n - m) > n0:
                continue
            inner = commutator(h[n - m], h[m], alg)
            if not any(inner):
                continue
            acc = _vadd(acc, _vscale(commutator(h[-n], inner, alg), GaussQ(weight(n, m))))
    return acc


def double_sum_A(h: FourierOperator) -> tuple:
    """Triple-commutator double sum with weight ``(m-n)/(n (m^2+n^2+(m-n)^2))``."""
    return _double_sum(_prepare(h), lambda n, m: mpq(m - n, n * (m * m + n * n + (m - n) ** 2)))


def double_sum_B(h: FourierOperator) -> tuple:
    """The same double sum with weight ``1/(3 n m)``."""
    return _double_sum(_prepare(h), lambda n, m: mpq(1, 3 * n * m))
