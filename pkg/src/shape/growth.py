"""
增长条件检查：E[sup_{s≥t} e^{-βs} g(X_s)] → 0（t → ∞）

成立时 V^(∞) = V_θ。确定有界的收益（见 is_bounded）直接判为成立；否则在 t 网格上做蒙特卡洛估计，
sup 只取到模拟时间范围 H，之后的部分用 E[e^{-βH} g(X_H)] 作为尾项计入。
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Literal, Sequence

import numpy as np

from src.config import configurable
from src.mc.paths import simulate_paths
from src.model.problem import ProblemSpec, is_bounded

Verdict = Literal["holds", "fails", "inconclusive"]


@dataclass(frozen=True)
class GrowthReport:
    verdict: Verdict
    reason: str
    t_grid: tuple[float, ...] = ()
    estimates: tuple[float, ...] = ()
    std_errors: tuple[float, ...] = ()
    tail_bound: float = 0.0
    epsilon: float = 0.0
    n_paths: int = 0
    seed: int | None = None

    def to_json(self) -> dict[str, Any]:
        return {
            "verdict": self.verdict,
            "reason": self.reason,
            "epsilon": self.epsilon,
            "tail_bound": self.tail_bound,
            "n_paths": self.n_paths,
            "seed": self.seed,
            "table": [
                {"t": t, "estimate": e, "std_error": s}
                for t, e, s in zip(self.t_grid, self.estimates, self.std_errors)
            ],
        }


def growth_condition_check(
    p: ProblemSpec,
    t_grid: Sequence[float],
    n_paths: int,
    seed: int,
    *,
    x0: float | None = None,
    dt: float = 0.1,
    horizon: float | None = None,
    epsilon: float | None = None,
) -> GrowthReport:
    """t 网格上的衰减表与结论（holds / fails / inconclusive）"""
    eps = configurable["growth_epsilon"] if epsilon is None else epsilon
    if is_bounded(p.payoff, p.interval):
        return GrowthReport("holds", "收益有界", epsilon=eps)

    ts = np.asarray(sorted(float(t) for t in t_grid))
    if ts.size == 0 or ts[0] < 0.0:
        raise ValueError("t 网格必须非空且非负")
    H = float(horizon) if horizon is not None else max(2.0 * ts[-1], configurable["horizon_factor"] / p.beta)
    if H <= ts[-1]:
        raise ValueError(f"模拟时间范围 {H} 必须大于 t 网格的最大值 {ts[-1]}")
    start = p.query_scale() if x0 is None else x0

    bundle = simulate_paths(p.diffusion, start, dt, H, n_paths, seed)
    with np.errstate(all="ignore"):
        g = np.asarray(p.payoff.raw(bundle.states), dtype=float)
        discounted = np.exp(-p.beta * bundle.times)[None, :] * np.broadcast_to(g, bundle.states.shape)
    if not np.all(np.isfinite(discounted)):
        return GrowthReport("fails", "折现收益出现非有限值", tuple(ts), epsilon=eps, n_paths=n_paths, seed=seed)

    # 从末端向前的累计最大值即 sup_{s∈[t,H]}
    tail_sup = np.maximum.accumulate(discounted[:, ::-1], axis=1)[:, ::-1]
    index = np.minimum(np.round(ts / bundle.dt).astype(int), bundle.n_steps)
    samples = tail_sup[:, index]
    estimates = samples.mean(axis=0)
    errors = samples.std(axis=0, ddof=1) / math.sqrt(n_paths)
    tail = float(discounted[:, -1].mean())

    base = dict(t_grid=tuple(float(t) for t in ts), estimates=tuple(map(float, estimates)),
                std_errors=tuple(map(float, errors)), tail_bound=tail, epsilon=eps,
                n_paths=n_paths, seed=seed)
    if not (np.all(np.isfinite(estimates)) and math.isfinite(tail)):
        return GrowthReport("fails", "估计值溢出", **base)
    if estimates[-1] + 3.0 * errors[-1] + tail <= eps:
        return GrowthReport("holds", f"t={ts[-1]:g} 处的估计低于 ε", **base)
    if tail > eps:
        return GrowthReport("inconclusive", "模拟时间范围不足，尾项超过 ε", **base)
    return GrowthReport("fails", "估计值没有衰减到 ε 以下", **base)


__all__ = ["GrowthReport", "growth_condition_check"]
