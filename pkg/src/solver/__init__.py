"""
G 算子的有限差分离散与值迭代
"""
from .grid import (
    BoundaryPolicy,
    BoundaryPolicyError,
    Grid,
    GridError,
    ValueFunction,
    make_grid,
    parse_policy,
)
from .g_operator import GOperator, SingularSystemError, g_operator, require_assumptions, resolve_policies, values_on
from .iteration import IterationReport, conditional_value, residual, residual_profile, value_iteration

__all__ = [
    "BoundaryPolicy",
    "BoundaryPolicyError",
    "GOperator",
    "Grid",
    "GridError",
    "IterationReport",
    "SingularSystemError",
    "ValueFunction",
    "conditional_value",
    "g_operator",
    "make_grid",
    "parse_policy",
    "require_assumptions",
    "residual",
    "residual_profile",
    "resolve_policies",
    "value_iteration",
    "values_on",
]
