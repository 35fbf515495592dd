"""
形状检测、形状定理验证与增长条件检查
"""
from .detectors import ShapeReport, check_concave, check_convex, check_monotone
from .growth import GrowthReport, growth_condition_check
from .hypotheses import HypothesisAnnotation, HypothesisMismatchError, annotate_hypotheses
from .suites import bundled_suite, convex_suite, monotone_suite
from .theorems import ProblemVerdict, SolveSettings, SuiteReport, TheoremCheck, verify_problem, verify_shape_theorems

__all__ = [
    "GrowthReport",
    "HypothesisAnnotation",
    "HypothesisMismatchError",
    "ProblemVerdict",
    "ShapeReport",
    "SolveSettings",
    "SuiteReport",
    "TheoremCheck",
    "annotate_hypotheses",
    "bundled_suite",
    "check_concave",
    "check_convex",
    "check_monotone",
    "convex_suite",
    "growth_condition_check",
    "monotone_suite",
    "verify_problem",
    "verify_shape_theorems",
]
