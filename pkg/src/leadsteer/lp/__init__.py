"""Linear programming: the simplex engine, general LPs and the L1L1 formulation."""

from .l1l1 import L1L1Session, build_l1l1_lp, extract_pattern, l1l1_objective
from .program import (
    DEFAULT_MAX_ITERATIONS,
    DEFAULT_TOLERANCE,
    Certificate,
    LinearProgram,
    LpSolution,
    certificate,
    solve_lp,
)
from .lpformat import format_lp, write_lp
from .simplex import INFEASIBLE, ITERATION_LIMIT, OPTIMAL, STATUSES, UNBOUNDED

__all__ = [
    "Certificate", "L1L1Session", "LinearProgram", "LpSolution",
    "build_l1l1_lp", "certificate", "extract_pattern", "format_lp", "write_lp", "l1l1_objective", "solve_lp",
    "DEFAULT_MAX_ITERATIONS", "DEFAULT_TOLERANCE",
    "INFEASIBLE", "ITERATION_LIMIT", "OPTIMAL", "STATUSES", "UNBOUNDED",
]
