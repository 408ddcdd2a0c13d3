"""Numeric evaluation of symbolic Fourier operators and time propagation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..symbolic.expr import PARAM, numeric_eval
from ..symbolic.series import FourierOperator
from .envelopes import Constant, Envelope

__all__ = [
    "NumericModel",
    "Trajectory",
    "StepTooLarge",
    "rk4_propagate",
    "propagate_exact",
    "evolve_full",
    "max_step",
]


class StepTooLarge(ValueError):
    pass


def max_step(omega: float) -> float:
    return 2 * math.pi / (40 * omega)


class NumericModel:
    """Binds a symbolic drive to numbers.

    ``envelopes`` maps envelope names to :class:`Envelope` callables; ``params``
    maps parameter names to floats.  The phase argument of the drive is
    ``omega*t + theta``.
    """

    def __init__(self, h: FourierOperator, envelopes=None, params=None, omega: float = 1.0, theta: float = 0.0,
                 t_in: float = 0.0, t_fn: float | None = None):
        self.h = h.hermitian_completed() if not h.is_hermitian() else h
        self.algebra = h.algebra
        self.rep = self.algebra.rep_array()
        self.envelopes = {k: (v if isinstance(v, Envelope) else Constant(float(v))) for k, v in (envelopes or {}).items()}
        self.params = dict(params or {})
        self.omega = float(omega)
        self.theta = float(theta)
        self.t_in = float(t_in)
        self.t_fn = t_fn
        missing = [a for a in self.h.atoms() if not self._bound(a)]
        if missing:
            raise KeyError(f"unbound atoms: {sorted(missing)}")

    def _bound(self, atom) -> bool:
        name, k = atom
        return (name in self.params) if k == PARAM else (name in self.envelopes)

    @property
    def dim(self) -> int:
        return self.rep.shape[1]

    @property
    def is_static(self) -> bool:
        return all(isinstance(e, Constant) for e in self.envelopes.values())

    def bindings(self, t, atoms) -> dict:
        vals = {}
        for a in atoms:
            name, k = a
            if k == PARAM:
                vals[a] = self.params[name]
            else:
                vals[a] = self.envelopes[name](t, k)
        return vals

    def coefficients(self, op: FourierOperator, n: int, t) -> np.ndarray:
        """Coefficient vector of harmonic ``n`` at times ``t``: shape ``t.shape + (L,)``."""
        t = np.asarray(t, dtype=float)
        vals = self.bindings(t, op.atoms())
        cols = []
        for c in op[n]:
            v = numeric_eval(c, vals) if c else 0.0
            cols.append(np.broadcast_to(np.asarray(v, dtype=complex), t.shape))
        return np.stack(cols, axis=-1)

    def op_matrix(self, op: FourierOperator, t, phase=None) -> np.ndarray:
        """``sum_n exp(i n phase) op^(n)(t)`` as matrices; ``phase`` defaults to ``omega t + theta``."""
        t = np.asarray(t, dtype=float)
        phase = self.omega * t + self.theta if phase is None else np.asarray(phase, dtype=float)
        out = np.zeros(t.shape + (self.dim, self.dim), dtype=complex)
        for n in op.harmonics():
            c = self.coefficients(op, n, t)
            out += np.einsum("...l,lij->...ij", np.exp(1j * n * phase)[..., None] * c, self.rep)
        return out

    def h_matrix(self, t) -> np.ndarray:
        return self.op_matrix(self.h, t)

    def h_of_phase(self, phase, t=0.0) -> np.ndarray:
        phase = np.asarray(phase, dtype=float)
        return self.op_matrix(self.h, np.broadcast_to(np.asarray(t, dtype=float), phase.shape), phase)


def rk4_propagate(hfun, t0: float, t1: float, nsteps: int, y0, record: bool = True):
    """Fixed-step RK4 for ``dy/dt = -i H(t) y``; ``y0`` may be a vector or a matrix.

    ``hfun`` takes an array of times and returns stacked matrices.  Returns
    ``(times, states)`` with states at every step when ``record``.
    """
    dt = (t1 - t0) / nsteps
    grid = t0 + 0.5 * dt * np.arange(2 * nsteps + 1)
    H = -1j * hfun(grid)
    y = np.array(y0, dtype=complex)
    out = [y.copy()] if record else None
    for k in range(nsteps):
        A0, Ah, A1 = H[2 * k], H[2 * k + 1], H[2 * k + 2]
        k1 = A0 @ y
        k2 = Ah @ (y + 0.5 * dt * k1)
        k3 = Ah @ (y + 0.5 * dt * k2)
        k4 = A1 @ (y + dt * k3)
        y = y + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if record:
            out.append(y.copy())
    times = t0 + dt * np.arange(nsteps + 1)
    return times, (np.array(out) if record else y)


@dataclass
class Trajectory:
    t: np.ndarray
    states: np.ndarray
    omega: float
    meta: dict = field(default_factory=dict)

    @property
    def phase(self) -> np.ndarray:
        return self.omega * self.t

    def populations(self) -> np.ndarray:
        return np.abs(self.states) ** 2

    def norm_drift(self) -> float:
        return float(np.max(np.abs(np.linalg.norm(self.states, axis=1) - 1.0)))


def _nsteps(t0, t1, omega, dt):
    if dt is None:
        dt = max_step(omega) / 5
    if dt > max_step(omega) * (1 + 1e-12):
        raise StepTooLarge(f"step {dt:g} exceeds 2*pi/(40*omega) = {max_step(omega):g}")
    return max(1, math.ceil((t1 - t0) / dt - 1e-9))


def propagate_exact(model: NumericModel, t0: float, t1: float, psi0, dt: float | None = None,
                    error_estimate: bool = False) -> Trajectory:
    """RK4 trajectory of the full drive ``h(omega t + theta, t)``."""
    n = _nsteps(t0, t1, model.omega, dt)
    times, states = rk4_propagate(model.h_matrix, t0, t1, n, psi0)
    meta = {"steps": n, "dt": (t1 - t0) / n}
    if error_estimate:
        _, fine = rk4_propagate(model.h_matrix, t0, t1, 2 * n, psi0, record=False)
        meta["step_halving_error"] = float(np.linalg.norm(fine - states[-1]) * 16 / 15)
    return Trajectory(times, states, model.omega, meta)


def _heff_orders(heff):
    """Accept an ExpansionResult, an EpsSeries, or a mapping order -> FourierOperator."""
    series = getattr(heff, "h_eff", heff)
    if hasattr(series, "items"):
        return dict(series.items())
    return dict(series)


def evolve_full(model: NumericModel, heff, S, N: int, t0: float, t1: float, psi0, dt: float | None = None,
                micromotion: bool = True) -> Trajectory:
    """Effective evolution sandwiched by micromotion kicks.

    ``psi(t) = U_micro(omega t + theta, t) U_eff(t, t0) U_micro^dag(omega t0 + theta, t0) psi0``
    with ``U_eff`` from RK4 on ``sum_{i<=N} omega^-i h_eff_i(t)``.
    """
    from ..micromotion import micromotion_unitary

    orders = {i: op for i, op in _heff_orders(heff).items() if i <= N}
    w = model.omega

    def heff_fun(t):
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape + (model.dim, model.dim), dtype=complex)
        for i, op in orders.items():
            out += w ** (-i) * model.op_matrix(op, t, phase=np.zeros_like(t))
        return out

    n = _nsteps(t0, t1, w, dt)
    psi0 = np.asarray(psi0, dtype=complex)
    use_micro = micromotion and S is not None and N >= 1
    if use_micro:
        atoms = set().union(*(op.atoms() for _, op in S.orders.items()))
        U0 = micromotion_unitary(S, t0, model.theta, w, model.bindings(t0, atoms), upto=N)
        start = U0.conj().T @ psi0
    else:
        start = psi0
    times, states = rk4_propagate(heff_fun, t0, t1, n, start)
    if use_micro:
        out = np.empty_like(states)
        for k, t in enumerate(times):
            U = micromotion_unitary(S, t, model.theta, w, model.bindings(t, atoms), upto=N)
            out[k] = U @ states[k]
        states = out
    return Trajectory(times, states, w, {"order": N, "micromotion": use_micro, "steps": n})
