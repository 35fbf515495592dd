"""
闭式解与特征根
"""
from .roots import ParameterDomainError, RootPair, q_roots
from .oracles import (
    ORACLES,
    AmericanSolution,
    DWSolution,
    LocalTimeValues,
    NonEqualityValues,
    Oracle,
    OptimizerError,
    SinhSolution,
    american_solution,
    american_value,
    barrier_rate_value,
    dw_solution,
    dw_value,
    h_phi,
    linear_payoff_value,
    local_time_value,
    nonequality_values,
    oracle_frame,
    sinh_drift_solution,
    sinh_drift_value,
)

__all__ = [
    "ParameterDomainError",
    "RootPair",
    "q_roots",
    "ORACLES",
    "AmericanSolution",
    "DWSolution",
    "LocalTimeValues",
    "NonEqualityValues",
    "Oracle",
    "OptimizerError",
    "SinhSolution",
    "american_solution",
    "american_value",
    "barrier_rate_value",
    "dw_solution",
    "dw_value",
    "h_phi",
    "linear_payoff_value",
    "local_time_value",
    "nonequality_values",
    "oracle_frame",
    "sinh_drift_solution",
    "sinh_drift_value",
]
