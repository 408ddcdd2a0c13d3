"""Floquet effective Hamiltonians and micromotion for amplitude-modulated drives.

Symbolic expansions in inverse frequency come from solving flow equations over
a finite Lie algebra; ``floquetflow.numeric`` holds the independent numerical
checks.
"""

from .algebra import LieAlgebra, builtin, builtin_dimer, builtin_su2, close_from_representation, commutator
from .fastmod import DoubleFourierHamiltonian, ValidityViolation, derivative_form_heff1, fast_expand
from .flow import ExpansionResult, FlowHistory, InternalConsistencyError, discrete_expand, expand, toda_expand, vmm_expand
from .micromotion import MicromotionSeries, magnus_S, micromotion_unitary
from .symbolic import EnvelopeExpr, FourierOperator, equal_sampled, format_expr, parse_expr

__version__ = "0.1.0"

__all__ = [
    "LieAlgebra", "builtin", "builtin_dimer", "builtin_su2", "close_from_representation", "commutator",
    "DoubleFourierHamiltonian", "ValidityViolation", "derivative_form_heff1", "fast_expand",
    "ExpansionResult", "FlowHistory", "InternalConsistencyError", "discrete_expand", "expand",
    "toda_expand", "vmm_expand",
    "MicromotionSeries", "magnus_S", "micromotion_unitary",
    "EnvelopeExpr", "FourierOperator", "equal_sampled", "format_expr", "parse_expr",
]
