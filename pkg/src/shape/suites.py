"""
随机问题套件

monotone_suite: 无漂移指数布朗运动上 θ、Ψ 递增的问题
convex_suite: ℝ 上的布朗运动、常数速率、凸收益（Ψ 凸、自然尺度、Kotani 成立）
"""
from __future__ import annotations

import numpy as np

from src.config import PROBLEMS_DIR
from src.model.problem import ProblemSpec, load_problem, problem_from_dict

# 形状反例：eg2_2 不在自然尺度，eg2_4 的 θ 不递增
COUNTEREXAMPLES = ("eg2_2", "eg2_4")
# 假设成立的固定问题
FIXED = ("psi_half", "dw_martingale", "linear_payoff")


def _num(v: float) -> str:
    return f"({v:.6g})"


def _monotone_problem(i: int, rng: np.random.Generator) -> ProblemSpec:
    sigma = rng.uniform(0.1, 0.4)
    beta = rng.uniform(0.05, 0.3)
    K = rng.uniform(0.5, 2.0)
    payoffs = [
        {"builtin": "call-payoff", "K": round(K, 6)},
        f"{_num(rng.uniform(0.5, 2.0))}*x",
        f"min(x, {_num(K)})",
        "sqrt(x)",
    ]
    rates = [
        _num(rng.uniform(0.2, 3.0)),
        f"{_num(rng.uniform(0.2, 1.0))} + {_num(rng.uniform(0.1, 2.0))}*x/({_num(K)}+x)",
    ]
    payoff = payoffs[rng.integers(len(payoffs))]
    rate = rates[rng.integers(len(rates))]
    return problem_from_dict({
        "name": f"monotone_{i:02d}",
        "vol": f"{_num(sigma)}*x",
        "drift": "0",
        "payoff": payoff,
        "rate": rate,
        "beta": round(beta, 6),
        "interval": {"left": 0, "right": "inf", "left_kind": "natural", "right_kind": "natural"},
        "scale": round(K, 6),
        "grid": {"nodes": 2001, "spacing": "log", "left": "linear", "right": "linear"},
        "claims": ["theta_increasing", "psi_increasing", "natural_scale"],
    }, source=f"monotone_suite[{i}]")


def _convex_problem(i: int, rng: np.random.Generator) -> ProblemSpec:
    sigma = rng.uniform(0.5, 1.5)
    beta = rng.uniform(0.2, 1.0)
    K = rng.uniform(-1.0, 1.0)
    shift = f"(x-{_num(K)})"
    payoffs = [
        f"max({shift}, 0)",
        f"abs({shift})",
        f"sqrt(1+{shift}^2)",
        f"max({shift}, 0) + {_num(rng.uniform(0.2, 1.0))}*max({_num(K - 1.0)}-x, 0)",
    ]
    return problem_from_dict({
        "name": f"convex_{i:02d}",
        "vol": _num(sigma),
        "drift": "0",
        "payoff": payoffs[rng.integers(len(payoffs))],
        "rate": _num(rng.uniform(0.5, 3.0)),
        "beta": round(beta, 6),
        "interval": {"left": "-inf", "right": "inf", "left_kind": "natural", "right_kind": "natural"},
        "grid": {"nodes": 2001, "spacing": "uniform", "left": "linear", "right": "linear"},
        "claims": ["psi_convex", "natural_scale", "kotani"],
    }, source=f"convex_suite[{i}]")


def monotone_suite(n: int, seed: int) -> list[ProblemSpec]:
    rng = np.random.default_rng(seed)
    return [_monotone_problem(i, rng) for i in range(n)]


def convex_suite(n: int, seed: int) -> list[ProblemSpec]:
    rng = np.random.default_rng(seed)
    return [_convex_problem(i, rng) for i in range(n)]


def bundled_suite(names=COUNTEREXAMPLES + FIXED) -> list[ProblemSpec]:
    return [load_problem(PROBLEMS_DIR / f"{name}.json") for name in names]


__all__ = [
    "COUNTEREXAMPLES",
    "FIXED",
    "bundled_suite",
    "convex_suite",
    "monotone_suite",
]
