"""Stroboscopic Hamiltonian from the one-period propagator, and its Magnus terms."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import NumericModel, rk4_propagate

__all__ = ["FSResult", "fs_hamiltonian", "fs_magnus_terms", "monodromy"]


@dataclass
class FSResult:
    h_fs: np.ndarray
    eigenphases: np.ndarray
    branch_warning: bool
    unitarity_error: float


def monodromy(model: NumericModel, t_in: float, steps: int = 2000) -> np.ndarray:
    """``U(t_in + T, t_in)`` by fixed-step RK4 over one drive period."""
    T = 2 * math.pi / model.omega
    _, U = rk4_propagate(model.h_matrix, t_in, t_in + T, steps, np.eye(model.dim), record=False)
    return U


def fs_hamiltonian(model: NumericModel, t_in: float = 0.0, steps: int = 2000, branch_tol: float = 1e-6) -> FSResult:
    """``h_FS = (i/T) log U(t_in + T, t_in)`` on the principal branch.

    Eigenphases within ``branch_tol`` of ``+-pi`` set ``branch_warning``; they
    are not moved to another branch.
    """
    T = 2 * math.pi / model.omega
    U = monodromy(model, t_in, steps)
    unit_err = float(np.linalg.norm(U.conj().T @ U - np.eye(model.dim)))
    lam, V = np.linalg.eig(U)
    phases = np.angle(lam)
    warn = bool(np.any(np.abs(np.abs(phases) - math.pi) < branch_tol))
    logU = V @ np.diag(np.log(lam)) @ np.linalg.inv(V)
    h = 1j * logU / T
    return FSResult(0.5 * (h + h.conj().T), phases, warn, unit_err)


def _gauss(a, b, n: int):
    """Gauss-Legendre nodes and weights on ``[a, b]``; ``b`` may be an array."""
    x, w = np.polynomial.legendre.leggauss(n)
    b = np.asarray(b, dtype=float)
    half = 0.5 * (b - a)
    nodes = a + half[..., None] * (x + 1)
    return nodes, half[..., None] * w


def _comm(A, B):
    return A @ B - B @ A


def fs_magnus_terms(model: NumericModel, t_in: float = 0.0, nodes: int = 64):
    """First three terms of the stroboscopic Magnus series at ``t_in``.

    ``term1 = (1/T) int h``,
    ``term2 = -(i/2T) int_{t2<t1} [h1, h2]``,
    ``term3 = -(1/6T) int_{t3<t2<t1} ([h1,[h2,h3]] + [h3,[h2,h1]])``,
    each integral nested Gauss-Legendre with ``nodes`` points per level.
    """
    if nodes < 64:
        raise ValueError("at least 64 nodes per nesting level")
    T = 2 * math.pi / model.omega
    hf = model.h_matrix
    t1, w1 = _gauss(t_in, t_in + T, nodes)            # (n,)
    h1 = hf(t1)
    term1 = np.einsum("a,aij->ij", w1, h1) / T

    t2, w2 = _gauss(t_in, t1, nodes)                   # (n, n)
    h2 = hf(t2)
    F1 = np.einsum("ab,abij->aij", w2, h2)             # int_{t_in}^{t1} h
    term2 = -0.5j / T * np.einsum("a,aij->ij", w1, _comm(h1, F1))

    t3, w3 = _gauss(t_in, t2, nodes)                   # (n, n, n)
    F2 = np.einsum("abc,abcij->abij", w3, hf(t3))      # int_{t_in}^{t2} h
    H1 = h1[:, None]
    inner = _comm(H1, _comm(h2, F2)) + _comm(F2, _comm(h2, H1))
    term3 = -1.0 / (6 * T) * np.einsum("a,ab,abij->ij", w1, w2, inner)
    return term1, term2, term3
