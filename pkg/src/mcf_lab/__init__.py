"""Exact p-adic Jacobi-Perron expansions, their convergents and bound checkers."""
from .engine import (ExpansionTrace, MCFExpansion, Status, expand, from_digits,
                     identity_suite, jp_step)
from .errors import (IndexOutOfRange, InsufficientPrecision, InvalidPlan, MCFError,
                     NonPAdicDenominator, NonSimpleRoot, PrecisionExhausted)
from .padic import PAdicScalar, YElem, parse_scalar, s_function
from .report import BoundReport

__all__ = [
    "BoundReport", "ExpansionTrace", "IndexOutOfRange", "InsufficientPrecision", "InvalidPlan",
    "MCFError", "MCFExpansion", "NonPAdicDenominator", "NonSimpleRoot", "PAdicScalar",
    "PrecisionExhausted", "Status", "YElem", "expand", "from_digits", "identity_suite",
    "jp_step", "parse_scalar", "s_function",
]
__version__ = "0.1.0"
