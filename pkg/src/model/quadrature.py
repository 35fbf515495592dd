"""
带发散判据的嵌套求积

从锚点 c 向端点 e 逐级推进：有限端点每级把到 e 的距离缩小 10 倍，无穷端点每级把距离放大 10 倍。
每级只积新增的一段，累加得到部分积分 I_k，由 I_k 序列判定收敛、发散或无法判定。
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Literal

import numpy as np
import scipy.integrate as integrate

from src.config import configurable
from .expression import EvaluationError

QuadratureStatus = Literal["converged", "diverged", "inconclusive"]


@dataclass(frozen=True)
class RefinementResult:
    """一次嵌套求积的结论

    value: 收敛时为积分值（含几何尾项估计），否则为最后一级的部分积分
    witness: 发散时给出积分发散所在的子区间
    """

    status: QuadratureStatus
    value: float
    levels: tuple[float, ...] = ()
    witness: tuple[float, float] | None = None
    reason: str = ""

    @property
    def is_finite(self) -> bool:
        return self.status == "converged"

    def to_json(self) -> dict:
        out = {
            "status": self.status,
            "value": self.value if math.isfinite(self.value) else str(self.value),
            "levels": len(self.levels),
        }
        if self.witness is not None:
            out["witness"] = [w if math.isfinite(w) else str(w) for w in self.witness]
        if self.reason:
            out["reason"] = self.reason
        return out


def _scalar(f: Callable) -> Callable[[float], float]:
    def g(t: float) -> float:
        return abs(float(np.asarray(f(np.asarray([t], dtype=float)), dtype=float)[0]))
    return g


def _piece(f: Callable[[float], float], a: float, b: float) -> float:
    lo, hi = (a, b) if a <= b else (b, a)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        value, _ = integrate.quad(f, lo, hi, limit=200, epsrel=configurable["quad_rtol"])
    return value


def level_points(anchor: float, endpoint: float, budget: int) -> list[float]:
    """第 0..budget 级的推进点，不含端点本身"""
    sign = 1.0 if endpoint > anchor else -1.0
    if math.isinf(endpoint):
        unit = max(1.0, abs(anchor))
        return [anchor + sign * unit * 10.0 ** k for k in range(budget + 1)]
    dist0 = abs(endpoint - anchor)
    return [endpoint - sign * dist0 * 0.5 * 10.0 ** (-k) for k in range(budget + 1)]


def integrate_toward(
    f: Callable,
    anchor: float,
    endpoint: float,
    *,
    factor: float | None = None,
    levels: int | None = None,
    stall_ratio: float | None = None,
    budget: int | None = None,
    rtol: float | None = None,
) -> RefinementResult:
    """∫_anchor^endpoint |f| 的嵌套求积

    f 接受 numpy 数组。判据：
    - 发散：I_k ≥ factor·I_{k-levels}，或连续 levels 级增量比 ≥ stall_ratio，或出现非有限的分段值
    - 收敛：增量比 r < stall_ratio 且几何尾项 d·r/(1-r) ≤ rtol·I_k，或连续两级增量为 0
    - 其余情况在 budget 级后判为 inconclusive；f 在推进点处无法求值时同样 inconclusive
    """
    factor = configurable["divergence_factor"] if factor is None else factor
    levels = configurable["divergence_levels"] if levels is None else levels
    stall_ratio = configurable["stall_ratio"] if stall_ratio is None else stall_ratio
    budget = configurable["refinement_budget"] if budget is None else budget
    rtol = configurable["quad_rtol"] if rtol is None else rtol

    if anchor == endpoint:
        return RefinementResult("converged", 0.0)

    fs = _scalar(f)
    points = level_points(anchor, endpoint, budget)
    partials: list[float] = []
    increments: list[float] = []
    stalled = 0
    previous = anchor

    def witness(at: float) -> tuple[float, float]:
        return (min(at, endpoint), max(at, endpoint))

    for k, point in enumerate(points):
        if point == previous or point == endpoint:
            return RefinementResult(
                "inconclusive", partials[-1] if partials else 0.0, tuple(partials),
                reason=f"浮点精度在第 {k} 级耗尽",
            )
        try:
            d = _piece(fs, previous, point)
        except EvaluationError as exc:
            return RefinementResult(
                "inconclusive", partials[-1] if partials else 0.0, tuple(partials),
                reason=f"x={point!r} 附近无法求值: {exc}",
            )
        if not math.isfinite(d):
            return RefinementResult("diverged", math.inf, tuple(partials), witness(previous), "分段积分非有限")

        total = (partials[-1] if partials else 0.0) + d
        partials.append(total)
        increments.append(d)
        previous = point

        if k >= levels:
            base = partials[k - levels]
            if base > 0.0 and total >= factor * base:
                return RefinementResult(
                    "diverged", total, tuple(partials), witness(points[k - levels]),
                    f"部分积分 {levels} 级内增长超过 {factor:g} 倍",
                )
        if k >= 1:
            prev_d = increments[k - 1]
            if d == 0.0 and prev_d == 0.0:
                return RefinementResult("converged", total, tuple(partials))
            ratio = d / prev_d if prev_d > 0.0 else math.inf
            if ratio >= stall_ratio:
                stalled += 1
                if stalled >= levels:
                    return RefinementResult(
                        "diverged", total, tuple(partials), witness(points[k - levels]),
                        f"增量连续 {levels} 级不衰减",
                    )
            else:
                stalled = 0
                tail = d * ratio / (1.0 - ratio)
                if tail <= rtol * max(total, np.finfo(float).tiny):
                    return RefinementResult("converged", total + tail, tuple(partials))

    return RefinementResult(
        "inconclusive", partials[-1], tuple(partials),
        reason=f"{budget} 级内既未收敛也未发散",
    )


@dataclass(frozen=True)
class CompactResult:
    """紧子区间上的普通求积"""

    value: float
    lo: float
    hi: float
    pieces: tuple[float, ...] = field(default=())

    @property
    def is_finite(self) -> bool:
        return math.isfinite(self.value)


def integrate_compact(f: Callable, lo: float, hi: float, n_pieces: int = 8) -> CompactResult:
    """在 [lo, hi] 上分段求 ∫|f|；任一段非有限则整体非有限"""
    fs = _scalar(f)
    edges = np.linspace(lo, hi, n_pieces + 1)
    pieces = tuple(_piece(fs, a, b) for a, b in zip(edges[:-1], edges[1:]))
    return CompactResult(float(sum(pieces)), lo, hi, pieces)


__all__ = [
    "RefinementResult",
    "CompactResult",
    "integrate_toward",
    "integrate_compact",
    "level_points",
]
