"""
蒙特卡洛引擎：路径模拟、平面标记稀疏化、耦合与估计量
"""
from .rng import ROLES, chunks, generator
from .paths import CoupledPaths, NonFiniteStateError, PathBundle, Stepper, doeblin_couple, simulate_paths
from .thinning import IntensityCapExceeded, SpaceTimeMarks, thin_events
from .estimators import Estimate, GEstimate, coupled_first_arrival, estimate_G, evaluate_policy

__all__ = [
    "ROLES",
    "CoupledPaths",
    "Estimate",
    "GEstimate",
    "IntensityCapExceeded",
    "NonFiniteStateError",
    "PathBundle",
    "SpaceTimeMarks",
    "Stepper",
    "chunks",
    "coupled_first_arrival",
    "doeblin_couple",
    "estimate_G",
    "evaluate_policy",
    "generator",
    "simulate_paths",
    "thin_events",
]
