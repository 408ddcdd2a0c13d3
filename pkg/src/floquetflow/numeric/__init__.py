"""Independent numerics: propagation, dense flow oracle, stroboscopic Hamiltonian."""

from concurrent.futures import ProcessPoolExecutor

from .envelopes import Constant, Envelope, Gaussian, Polynomial, Sine, envelope_from_spec
from .transition import CURVES, TransitionCurves, rabi_drive, transition_curves
from .fs import FSResult, fs_hamiltonian, fs_magnus_terms, monodromy
from .model import (
    NumericModel,
    StepTooLarge,
    Trajectory,
    evolve_full,
    max_step,
    propagate_exact,
    rk4_propagate,
)
from .oracle import NonConvergence, OracleResult, TruncatedKamiltonian, dense_flow_oracle

__all__ = [
    "Constant", "Envelope", "Gaussian", "Polynomial", "Sine", "envelope_from_spec",
    "CURVES", "TransitionCurves", "rabi_drive", "transition_curves",
    "FSResult", "fs_hamiltonian", "fs_magnus_terms", "monodromy",
    "NumericModel", "StepTooLarge", "Trajectory", "evolve_full", "max_step", "propagate_exact", "rk4_propagate",
    "NonConvergence", "OracleResult", "TruncatedKamiltonian", "dense_flow_oracle",
    "parallel_map",
]


def parallel_map(fn, jobs, workers: int | None = None) -> list:
    """Run independent single-threaded jobs in worker processes, preserving order."""
    jobs = list(jobs)
    if workers == 1 or len(jobs) < 2:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, jobs))
