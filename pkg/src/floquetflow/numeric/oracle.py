"""Dense-matrix flow on a truncated Kamiltonian.

The Kamiltonian restricted to harmonics ``|k| <= K`` is the block matrix
``<k|K|k'> = k omega 1 + h^(k-k')``.  The flow ``dK/ds = [G(K), K]`` uses the
generator blocks ``G_nk = w(n-k) K_nk / omega`` with ``w = sgn`` (Toda) or
``w(m) = m`` (VMM), in the rescaled flow variable where the off-diagonal
harmonic ``m`` decays at rate ``|m|`` or ``m**2``.  Nothing here touches the
symbolic machinery; it is an independent route to ``h_eff``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

__all__ = ["NonConvergence", "TruncatedKamiltonian", "OracleResult", "dense_flow_oracle"]


class NonConvergence(RuntimeError):
    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


def _weights(generator: str, idx: np.ndarray) -> np.ndarray:
    diff = idx[:, None] - idx[None, :]
    if generator == "toda":
        return np.sign(diff).astype(float)
    if generator == "vmm":
        return diff.astype(float)
    raise ValueError("generator must be 'toda' or 'vmm'")


@dataclass
class TruncatedKamiltonian:
    """Block matrix of the Kamiltonian with harmonics ``-K..K``."""

    harmonics: dict
    omega: float
    K: int

    def __post_init__(self):
        self.harmonics = {int(n): np.asarray(m, dtype=complex) for n, m in self.harmonics.items()}
        d = next(iter(self.harmonics.values())).shape[0]
        self.d = d
        self.idx = np.arange(-self.K, self.K + 1)

    @property
    def band(self) -> int:
        return max((abs(n) for n, m in self.harmonics.items() if np.any(m)), default=0)

    def matrix(self) -> np.ndarray:
        d, K = self.d, self.K
        size = (2 * K + 1) * d
        M = np.zeros((size, size), dtype=complex)
        for a, k in enumerate(self.idx):
            for b, kk in enumerate(self.idx):
                blk = self.harmonics.get(int(k - kk))
                if k == kk:
                    M[a * d:(a + 1) * d, b * d:(b + 1) * d] += k * self.omega * np.eye(d)
                if blk is not None:
                    M[a * d:(a + 1) * d, b * d:(b + 1) * d] += blk
        return M

    def block(self, M: np.ndarray, n: int, k: int) -> np.ndarray:
        a, b = n + self.K, k + self.K
        d = self.d
        return M[a * d:(a + 1) * d, b * d:(b + 1) * d]


@dataclass
class OracleResult:
    h_eff: np.ndarray
    residual: float
    s_final: float
    K: int
    generator: str
    diagnostics: dict = field(default_factory=dict)


def _offdiag_mask(K: int, d: int) -> np.ndarray:
    blocks = np.arange(2 * K + 1).repeat(d)
    return blocks[:, None] != blocks[None, :]


def _run(tk: TruncatedKamiltonian, generator: str, s_max: float, tol: float, rtol: float, atol: float):
    d = tk.d
    M0 = tk.matrix()
    size = M0.shape[0]
    W = np.kron(_weights(generator, tk.idx), np.ones((d, d))) / tk.omega
    mask = _offdiag_mask(tk.K, d)
    def rhs(_s, y):
        M = y.view(complex).reshape(size, size)
        G = W * M
        return (G @ M - M @ G).reshape(-1).view(float)

    def offdiag(y):
        M = y.view(complex).reshape(size, size)
        return float(np.linalg.norm(M[mask]))

    def event(_s, y):
        return offdiag(y) - tol

    event.terminal = True
    sol = solve_ivp(rhs, (0.0, s_max), M0.reshape(-1).view(float).copy(), method="DOP853",
                    rtol=rtol, atol=atol, events=event)
    yend = sol.y[:, -1].copy()
    Mend = yend.view(complex).reshape(size, size)
    # largest block beyond the input band at any accepted step
    n0 = tk.band
    far = np.kron(np.abs(tk.idx[:, None] - tk.idx[None, :]) > n0, np.ones((d, d), dtype=bool))
    ys = np.ascontiguousarray(sol.y.T)
    beyond = max(float(np.max(np.abs(y.view(complex).reshape(size, size)[far]), initial=0.0)) for y in ys)
    return Mend, offdiag(yend), float(sol.t[-1]), beyond


def dense_flow_oracle(harmonics: dict, omega: float, generator: str = "toda", K: int | None = None,
                      s_max: float | None = None, tol: float = 1e-12, rtol: float = 1e-12, atol: float = 1e-14,
                      doubling_check: bool = False) -> OracleResult:
    """Numeric ``h_eff`` for a static drive given as ``{n: d x d matrix}``.

    ``K`` defaults to ``3*n0 + 2``.  The flow runs until the off-diagonal
    Frobenius norm falls below ``tol`` or ``s_max`` (default ``40/min(1, n0)``)
    is reached, in which case :class:`NonConvergence` carries the residual.
    With ``doubling_check`` the run is repeated at ``2K`` and the change in the
    central block is reported as ``diagnostics["doubling_change"]``.
    """
    harmonics = {int(n): np.asarray(m, dtype=complex) for n, m in harmonics.items()}
    for n, m in harmonics.items():
        partner = harmonics.get(-n)
        if partner is None or not np.allclose(partner, m.conj().T, atol=1e-12):
            raise ValueError(f"harmonic {n} and {-n} are not Hermitian partners")
    n0 = max((abs(n) for n, m in harmonics.items() if np.any(m)), default=0)
    K = 3 * n0 + 2 if K is None else int(K)
    s_max = 40.0 / min(1, max(n0, 1)) if s_max is None else s_max
    if n0 == 0:
        return OracleResult(harmonics.get(0, 0 * next(iter(harmonics.values()))), 0.0, 0.0, K, generator)
    tk = TruncatedKamiltonian(harmonics, omega, K)
    M, res, s_end, beyond = _run(tk, generator, s_max, tol, rtol, atol)
    if res > tol * (1 + 1e-6):
        raise NonConvergence(f"off-diagonal norm {res:.3e} above {tol:g} at s = {s_end:g}", res)
    central = tk.block(M, 0, 0).copy()
    diag = {"beyond_band": beyond}
    if doubling_check:
        big = TruncatedKamiltonian(harmonics, omega, 2 * K)
        M2, _, _, _ = _run(big, generator, s_max, tol, rtol, atol)
        diag["doubling_change"] = float(np.linalg.norm(big.block(M2, 0, 0) - central))
    return OracleResult(0.5 * (central + central.conj().T), res, s_end, K, generator, diag)
