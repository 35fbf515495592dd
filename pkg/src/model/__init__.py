"""
问题描述、表达式小语言、Ψ 计算与标准假设检验
"""
from .expression import (
    ArityError,
    BuiltinFunction,
    DomainError,
    EvaluationError,
    ExpressionError,
    ExpressionFunction,
    ExpressionSyntaxError,
    NonFiniteValueError,
    Piece,
    PiecewiseFunction,
    ScalarFunction,
    TabulatedFunction,
    UnknownIdentifierError,
    constant,
    evaluate,
    function_from_json,
    parse_expression,
    render,
)
from .problem import (
    Diffusion,
    Interval,
    ProblemFileError,
    ProblemSpec,
    ProblemSpecError,
    capped_rate,
    exponential_bm_parameters,
    is_bounded,
    load_problem,
    parse_problem,
    problem_from_dict,
    problem_to_dict,
    probe_points,
    psi,
)
from .quadrature import RefinementResult, integrate_compact, integrate_toward
from .assumptions import (
    AssumptionCheck,
    AssumptionReport,
    AssumptionViolation,
    AssumptionWarning,
    validate_problem,
)

__all__ = [
    "ArityError",
    "BuiltinFunction",
    "DomainError",
    "EvaluationError",
    "ExpressionError",
    "ExpressionFunction",
    "ExpressionSyntaxError",
    "NonFiniteValueError",
    "Piece",
    "PiecewiseFunction",
    "ScalarFunction",
    "TabulatedFunction",
    "UnknownIdentifierError",
    "constant",
    "evaluate",
    "function_from_json",
    "parse_expression",
    "render",
    "Diffusion",
    "Interval",
    "ProblemFileError",
    "ProblemSpec",
    "ProblemSpecError",
    "capped_rate",
    "exponential_bm_parameters",
    "is_bounded",
    "load_problem",
    "parse_problem",
    "problem_from_dict",
    "problem_to_dict",
    "probe_points",
    "psi",
    "RefinementResult",
    "integrate_compact",
    "integrate_toward",
    "AssumptionCheck",
    "AssumptionReport",
    "AssumptionViolation",
    "AssumptionWarning",
    "validate_problem",
]
