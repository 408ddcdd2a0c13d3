"""Micromotion exponent from the flow-generator history.

The net flow transformation is the flow-ordered exponential of the generator,
larger ``s`` to the left.  Its logarithm ``Omega(s)`` obeys the Magnus ODE

    Omega' = sum_j B_j / j! ad_Omega^j (A),

which is solved order by order in ``1/omega`` inside the exp-polynomial ring.
The micromotion exponent is ``S_k = -i Omega_k(inf)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb, factorial

import numpy as np
from gmpy2 import mpq

from .algebra import commutator
from .flow import FlowHistory, InternalConsistencyError
from .symbolic.coeff import GaussQ
from .symbolic.expr import numeric_eval
from .symbolic.series import Divergent, EpsSeries, FourierOperator, s_limit

__all__ = ["MicromotionSeries", "magnus_S", "micromotion_matrix", "micromotion_unitary", "bernoulli"]

_MINUS_I = GaussQ(0, -1)


def bernoulli(n: int) -> list:
    """``B_0..B_n`` with ``B_1 = -1/2``."""
    B = [mpq(1)]
    for m in range(1, n + 1):
        B.append(-sum(comb(m + 1, k) * B[k] for k in range(m)) / mpq(m + 1))
    return B


@dataclass
class MicromotionSeries:
    """``orders[k]`` is the order-``k`` exponent as a :class:`FourierOperator`."""

    orders: EpsSeries
    algebra: object

    def __getitem__(self, k: int) -> FourierOperator:
        return self.orders[k]

    @property
    def order(self) -> int:
        return self.orders.order


def _vadd(u, v):
    if u is None:
        return v
    return tuple(a + b for a, b in zip(u, v))


def _comm_ext(X: dict, Y: dict, alg) -> dict:
    out: dict = {}
    for m1, u in X.items():
        for m2, v in Y.items():
            c = commutator(u, v, alg)
            if any(c):
                out[m1 + m2] = _vadd(out.get(m1 + m2), c)
    return {m: v for m, v in out.items() if any(v)}


def magnus_S(history: FlowHistory, N: int) -> MicromotionSeries:
    """Micromotion exponent ``S_0..S_N`` from a continuous-flow history."""
    if N > history.order:
        raise ValueError(f"history holds orders up to {history.order}, asked for {N}")
    alg = history.algebra
    B = bernoulli(max(N, 1))
    A = {p: history.generator(p) for p in range(1, N + 1)}
    omega: dict = {}
    # T[(j, p)] = order-p part of ad_Omega^j (A)
    T: dict = {}

    def nested(j: int, p: int) -> dict:
        key = (j, p)
        if key in T:
            return T[key]
        if j == 0:
            val = A.get(p, {})
        else:
            val = {}
            for q in range(1, p):
                if q not in omega:
                    continue
                inner = nested(j - 1, p - q)
                if inner and omega[q]:
                    for m, v in _comm_ext(omega[q], inner, alg).items():
                        val[m] = _vadd(val.get(m), v)
            val = {m: v for m, v in val.items() if any(v)}
        T[key] = val
        return val

    S = EpsSeries(N)
    S[0] = FourierOperator(alg, {})
    for k in range(1, N + 1):
        rhs: dict = {}
        for j in range(k):
            if not B[j]:
                continue
            w = GaussQ(B[j] / factorial(j))
            for m, v in nested(j, k).items():
                rhs[m] = _vadd(rhs.get(m), tuple(x * w for x in v))
        om = {}
        comps = {}
        for m, v in rhs.items():
            if not any(v):
                continue
            integ = tuple(x.integrate() for x in v)
            om[m] = integ
            try:
                comps[m] = tuple(s_limit(x) * _MINUS_I for x in integ)
            except Divergent as exc:
                raise InternalConsistencyError(f"Magnus order {k}, harmonic {m}: {exc}") from None
        omega[k] = om
        S[k] = FourierOperator(alg, comps)
    return MicromotionSeries(S, alg)


def micromotion_matrix(S: MicromotionSeries, phase: float, bindings, omega: float, upto: int | None = None):
    """Hermitian matrix ``sum_k omega^-k sum_m S_k^m exp(i m phase)`` in the representation."""
    alg = S.algebra
    rep = alg.rep_array()
    d = rep.shape[1]
    upto = S.order if upto is None else upto
    M = np.zeros((d, d), dtype=complex)
    for k, op in S.orders.items():
        if k > upto or op.is_zero():
            continue
        scale = omega ** (-k)
        for m in op.harmonics():
            coeffs = np.array([numeric_eval(c, bindings) for c in op[m]], dtype=complex)
            M += scale * np.exp(1j * m * phase) * np.tensordot(coeffs, rep, axes=1)
    return M


def micromotion_unitary(S: MicromotionSeries, t: float, theta: float, omega: float, bindings, upto=None):
    """``exp(-i S(omega t + theta, t))`` via the Hermitian eigendecomposition."""
    M = micromotion_matrix(S, omega * t + theta, bindings, omega, upto)
    M = 0.5 * (M + M.conj().T)
    w, V = np.linalg.eigh(M)
    return (V * np.exp(-1j * w)) @ V.conj().T
