"""Exact symbolic kernel: envelope expressions, graded series and the flow-ODE solver."""

from .coeff import GaussQ, to_gauss
from .expr import (
    EnvelopeExpr,
    UnboundAtomError,
    const,
    ddt,
    envelope,
    equal,
    equal_sampled,
    numeric_eval,
    param,
)
from .printing import ExpressionSyntaxError, format_expr, format_physical, parse_expr
from .series import (
    Divergent,
    EpsSeries,
    ExpPolyS,
    FourierOperator,
    integrate_to_infinity,
    s_limit,
    solve_linear_flow_ode,
)

__all__ = [
    "GaussQ",
    "to_gauss",
    "EnvelopeExpr",
    "UnboundAtomError",
    "const",
    "ddt",
    "envelope",
    "equal",
    "equal_sampled",
    "numeric_eval",
    "param",
    "ExpressionSyntaxError",
    "format_expr",
    "format_physical",
    "parse_expr",
    "Divergent",
    "EpsSeries",
    "ExpPolyS",
    "FourierOperator",
    "integrate_to_infinity",
    "s_limit",
    "solve_linear_flow_ode",
]
