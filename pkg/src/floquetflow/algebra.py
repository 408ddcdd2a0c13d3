"""Finite Lie algebras given by structure constants, with optional matrix representations.

``[G_l, G_m] = sum_n gamma[l][m][n] G_n``.  Coefficient vectors are sequences of
length ``dim`` indexed in the order of ``labels``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations

import numpy as np

from .symbolic.coeff import ZERO, GaussQ
from .symbolic.expr import EnvelopeExpr
from .symbolic.series import ExpPolyS

__all__ = [
    "LieAlgebra",
    "ClosureReport",
    "LinearDependenceError",
    "commutator",
    "close_from_representation",
    "builtin_su2",
    "builtin_dimer",
    "builtin",
]


class LinearDependenceError(ValueError):
    """The spanning set handed to :func:`close_from_representation` is dependent."""

    def __init__(self, message: str, dependency: dict):
        super().__init__(message)
        self.dependency = dependency


@dataclass(frozen=True)
class ClosureReport:
    residual_norm: float
    per_pair: dict = field(default_factory=dict)
    rounding_error: float = 0.0

    @property
    def exact(self) -> bool:
        return self.residual_norm == 0.0 and self.rounding_error == 0.0


class LieAlgebra:
    """Immutable algebra: labels, exact structure constants and an optional representation."""

    def __init__(self, labels, gamma, rep=None, has_identity: bool = False, name: str = "custom"):
        self.labels = tuple(str(x) for x in labels)
        L = len(self.labels)
        if L == 0:
            raise ValueError("an algebra needs at least one generator")
        if len(set(self.labels)) != L:
            raise ValueError("generator labels must be unique")
        self.dim = L
        self.name = name
        self.has_identity = bool(has_identity)
        g = [[[GaussQ(0) for _ in range(L)] for _ in range(L)] for _ in range(L)]
        for l in range(L):
            for m in range(L):
                for n in range(L):
                    v = gamma[l][m][n]
                    g[l][m][n] = v if isinstance(v, GaussQ) else _to_exact(v)
        self.gamma = tuple(tuple(tuple(row) for row in plane) for plane in g)
        for l in range(L):
            for m in range(L):
                for n in range(L):
                    if self.gamma[l][m][n] != -self.gamma[m][l][n]:
                        raise ValueError(f"structure constants not antisymmetric at ({l},{m},{n})")
        # nonzero (l<m) entries drive every commutator
        self.sparse = tuple(
            (l, m, tuple((n, self.gamma[l][m][n]) for n in range(L) if self.gamma[l][m][n]))
            for l, m in combinations(range(L), 2)
            if any(self.gamma[l][m])
        )
        if rep is not None:
            rep = [np.array(r, dtype=complex) for r in rep]
            if len(rep) != L:
                raise ValueError("representation must have one matrix per generator")
            d = rep[0].shape[0]
            for r in rep:
                if r.shape != (d, d):
                    raise ValueError("representation matrices must be square and equal-sized")
                if not np.allclose(r, r.conj().T, atol=1e-12):
                    raise ValueError("representation matrices must be Hermitian")
            rep = tuple(rep)
        self.rep = rep
        self._rep_arr = None

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"unknown generator {label!r}; known: {', '.join(self.labels)}") from None

    def rep_array(self) -> np.ndarray:
        if self.rep is None:
            raise ValueError(f"algebra {self.name!r} has no matrix representation")
        if self._rep_arr is None:
            self._rep_arr = np.stack(self.rep)
        return self._rep_arr

    @property
    def rep_dim(self) -> int:
        return self.rep_array().shape[1]

    def basis_vector(self, label_or_index) -> tuple:
        i = label_or_index if isinstance(label_or_index, int) else self.index(label_or_index)
        return tuple(EnvelopeExpr.coerce(1 if j == i else 0) for j in range(self.dim))

    def zero_vector(self) -> tuple:
        return tuple(EnvelopeExpr() for _ in range(self.dim))

    def gamma_complex(self) -> np.ndarray:
        return np.array([[[complex(v) for v in row] for row in plane] for plane in self.gamma])

    def jacobi_violations(self) -> list:
        """Index tuples ``(l, m, k, n)`` where the Jacobi identity fails exactly."""
        L = self.dim
        g = self.gamma
        bad = []
        for l in range(L):
            for m in range(L):
                for k in range(L):
                    for n in range(L):
                        acc = ZERO
                        for p in range(L):
                            acc = acc + g[l][m][p] * g[p][k][n] + g[m][k][p] * g[p][l][n] + g[k][l][p] * g[p][m][n]
                        if acc:
                            bad.append((l, m, k, n))
        return bad

    def rep_residual(self) -> float:
        """Largest elementwise mismatch between matrix commutators and the gamma expansion."""
        R = self.rep_array()
        G = self.gamma_complex()
        worst = 0.0
        for l in range(self.dim):
            for m in range(self.dim):
                lhs = R[l] @ R[m] - R[m] @ R[l]
                rhs = np.tensordot(G[l, m], R, axes=1)
                worst = max(worst, float(np.max(np.abs(lhs - rhs))))
        return worst

    def to_matrix(self, vec, bindings=None) -> np.ndarray:
        from .symbolic.expr import numeric_eval

        coeffs = np.array(
            [c if isinstance(c, (int, float, complex)) else numeric_eval(c, bindings or {}) for c in vec],
            dtype=complex,
        )
        return np.tensordot(coeffs, self.rep_array(), axes=1)

    def __repr__(self):
        return f"LieAlgebra({self.name!r}, labels={list(self.labels)})"


def _to_exact(v) -> GaussQ:
    if isinstance(v, (complex, float)):
        c = complex(v)
        return GaussQ(Fraction(c.real).limit_denominator(10**6), Fraction(c.imag).limit_denominator(10**6))
    if isinstance(v, (list, tuple)) and len(v) == 2:
        return GaussQ(Fraction(str(v[0])), Fraction(str(v[1])))
    return GaussQ(v)


def _zero_like(x):
    return ExpPolyS.zero() if isinstance(x, ExpPolyS) else EnvelopeExpr()


def commutator(u, v, alg: LieAlgebra) -> tuple:
    """Coefficient vector of ``[sum u_l G_l, sum v_m G_m]``.

    Entries may be :class:`EnvelopeExpr` or :class:`ExpPolyS`; the result has
    the entry type of ``u``.
    """
    L = alg.dim
    if len(u) != L or len(v) != L:
        raise ValueError(f"coefficient vectors must have length {L}, got {len(u)} and {len(v)}")
    out = [None] * L
    for l, m, entries in alg.sparse:
        ul, um, vl, vm = u[l], u[m], v[l], v[m]
        a = ul * vm if (ul and vm) else None
        b = um * vl if (um and vl) else None
        if a is None and b is None:
            continue
        w = a if b is None else (-b if a is None else a - b)
        if not w:
            continue
        for n, g in entries:
            t = w * g
            out[n] = t if out[n] is None else out[n] + t
    z = _zero_like(u[0] if u else None)
    return tuple(z if x is None else x for x in out)


def close_from_representation(matrices, include_identity: bool = False, labels=None, tol: float = 1e-12):
    """Derive structure constants by Frobenius projection of matrix commutators.

    Returns ``(LieAlgebra, ClosureReport)``.  With ``include_identity`` the unit
    matrix is appended to the spanning set under the label ``"1"``.
    """
    mats = [np.array(m, dtype=complex) for m in matrices]
    if not mats:
        raise ValueError("need at least one matrix")
    d = mats[0].shape[0]
    for i, m in enumerate(mats):
        if m.shape != (d, d):
            raise ValueError(f"matrix {i} is not {d}x{d}")
        if np.max(np.abs(m - m.conj().T)) > tol:
            raise ValueError(f"matrix {i} is not Hermitian to {tol:g}")
    labels = list(labels) if labels is not None else [f"G{i + 1}" for i in range(len(mats))]
    if include_identity:
        mats.append(np.eye(d, dtype=complex))
        labels.append("1")
    B = np.stack(mats)
    L = len(mats)
    gram = np.einsum("aij,bij->ab", B.conj(), B)
    w, V = np.linalg.eigh(gram)
    scale = max(1.0, float(np.max(np.abs(w))))
    if w[0] < 1e-10 * scale:
        dep = _dependency(V[:, 0], labels)
        raise LinearDependenceError("linearly dependent generators: " + _dependency_text(dep), dep)
    ginv = np.linalg.inv(gram)
    gamma = [[[GaussQ(0)] * L for _ in range(L)] for _ in range(L)]
    per_pair = {}
    worst = 0.0
    rounding = 0.0
    for l in range(L):
        for m in range(l + 1, L):
            C = B[l] @ B[m] - B[m] @ B[l]
            rhs = np.einsum("nij,ij->n", B.conj(), C)
            x = ginv @ rhs
            res = float(np.linalg.norm(C - np.tensordot(x, B, axes=1)))
            if res < tol * max(1.0, float(np.linalg.norm(C))):
                res = 0.0
            exact = [_to_exact(complex(v)) for v in x]
            recon = np.tensordot(np.array([complex(e) for e in exact]), B, axes=1)
            rerr = float(np.linalg.norm(C - recon)) - res
            rounding = max(rounding, rerr if rerr > tol else 0.0)
            per_pair[(labels[l], labels[m])] = res
            worst = max(worst, res)
            for n in range(L):
                gamma[l][m][n] = exact[n]
                gamma[m][l][n] = -exact[n]
    total = float(np.sqrt(sum(r * r for r in per_pair.values())))
    alg = LieAlgebra(labels, gamma, rep=mats, has_identity=include_identity)
    return alg, ClosureReport(residual_norm=total, per_pair=per_pair, rounding_error=rounding)


def _dependency(null, labels) -> dict:
    """Express the last generator with a nonzero null-vector weight through the others."""
    null = np.asarray(null)
    k = max(i for i in range(len(null)) if abs(null[i]) > 1e-8)
    coeffs = {}
    for i, c in enumerate(null):
        if i != k and abs(c) > 1e-8:
            v = -c / null[k]
            coeffs[labels[i]] = _to_exact(v)
    return {"dependent": labels[k], "combination": coeffs}


def _dependency_text(dep: dict) -> str:
    from .symbolic.printing import format_coeff

    parts = [lab if c == 1 else f"{format_coeff(c)}*{lab}" for lab, c in dep["combination"].items()]
    return f"{dep['dependent']} = " + " + ".join(parts)


# built-ins

_PAULI = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


def builtin_su2() -> LieAlgebra:
    """Pauli algebra, ``gamma_lmn = 2i eps_lmn``."""
    L = 3
    gamma = [[[GaussQ(0)] * L for _ in range(L)] for _ in range(L)]
    for (l, m, n), sgn in {(0, 1, 2): 1, (1, 2, 0): 1, (2, 0, 1): 1}.items():
        gamma[l][m][n] = GaussQ(0, 2 * sgn)
        gamma[m][l][n] = GaussQ(0, -2 * sgn)
    return LieAlgebra(("sx", "sy", "sz"), gamma, rep=_PAULI, name="su2")


def _boson_ops(nmax: int = 2):
    a = np.diag(np.sqrt(np.arange(1, nmax + 1)), 1).astype(complex)
    eye = np.eye(nmax + 1, dtype=complex)
    return np.kron(a, eye), np.kron(eye, a)


def dimer_matrices() -> list:
    """tau_1..tau_9 restricted to the two-particle sector.

    Basis: ``(c1^+)^2|0>/sqrt2``, ``c1^+ c2^+|0>``, ``(c2^+)^2|0>/sqrt2``.
    """
    c1, c2 = _boson_ops(2)
    d1, d2 = c1.conj().T, c2.conj().T
    n1, n2 = d1 @ c1, d2 @ c2
    hop12 = d1 @ c2
    hop21 = d2 @ c1
    t5 = 1j * (n2 @ hop12 + n1 @ hop21)
    t6 = n2 @ hop12 - n1 @ hop21
    full = [
        hop12 + hop21,
        1j * (hop12 - hop21),
        n2 - n1,
        d1 @ d1 @ c1 @ c1 + d2 @ d2 @ c2 @ c2,
        t5 + t5.conj().T,
        t6 + t6.conj().T,
        n1 @ n2,
        d1 @ d1 @ c2 @ c2 + d2 @ d2 @ c1 @ c1,
        1j * (d2 @ d2 @ c1 @ c1 - d1 @ d1 @ c2 @ c2),
    ]
    # Fock index of |n1, n2> is 3*n1 + n2
    basis = [3 * 2 + 0, 3 * 1 + 1, 3 * 0 + 2]
    return [m[np.ix_(basis, basis)] for m in full]


def builtin_dimer() -> LieAlgebra:
    """Two bosons on two sites; tau_4/2 + tau_7 is the identity in this sector."""
    labels = [f"tau{i}" for i in range(1, 10)]
    alg, report = close_from_representation(dimer_matrices(), include_identity=False, labels=labels)
    if not report.exact:
        raise RuntimeError(f"dimer algebra failed to close exactly: {report}")
    return LieAlgebra(labels, alg.gamma, rep=alg.rep, has_identity=False, name="dimer")


def builtin(name: str) -> LieAlgebra:
    table = {"su2": builtin_su2, "dimer": builtin_dimer}
    try:
        return table[name]()
    except KeyError:
        raise ValueError(f"unknown builtin algebra {name!r}; choose from {sorted(table)}") from None
