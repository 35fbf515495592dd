"""
值迭代 V^(n+1) = G(max(g, V^(n)))，V^(0) = 0

V^(n) 是"只能在前 n 个事件处停止"的值，随 n 单调不减，极限为 V^(∞)。
SA3 不成立时 V^(∞) 可以严格小于 V_θ，报告里总是带上这一标记。
"""
from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field
from typing import Any, Iterable, Literal

import numpy as np

from src.config import configurable
from src.model.assumptions import AssumptionReport, AssumptionWarning
from src.model.problem import ProblemSpec, capped_rate
from .g_operator import GOperator, require_assumptions
from .grid import Grid, ValueFunction, make_grid


@dataclass(frozen=True)
class IterationReport:
    iterations: int
    increments: tuple[float, ...]
    min_increments: tuple[float, ...]
    converged: bool
    residual: float
    wall_time: float = field(default=0.0, compare=False)
    sa3_failed: bool = False
    flags: tuple[str, ...] = ()
    first_iterate: ValueFunction | None = field(default=None, compare=False, repr=False)

    @property
    def monotone(self) -> bool:
        tol = configurable["tol"]
        return all(m >= -tol for m in self.min_increments)

    def to_json(self) -> dict[str, Any]:
        # 墙钟时间只写日志，不进结果文件
        return {
            "iterations": self.iterations,
            "converged": self.converged,
            "residual": self.residual,
            "final_increment": self.increments[-1] if self.increments else None,
            "min_increment": min(self.min_increments) if self.min_increments else None,
            "sa3_failed": self.sa3_failed,
            "flags": list(self.flags),
            "increments": list(self.increments),
        }


def value_iteration(
    p: ProblemSpec,
    grid: Grid | None = None,
    tol: float | None = None,
    max_n: int | None = None,
    *,
    report: AssumptionReport | None = None,
    acknowledge: bool = False,
    acceleration: Literal["policy"] | None = None,
    left: Any = None,
    right: Any = None,
    cap_factor: float | None = None,
) -> tuple[ValueFunction, IterationReport]:
    """返回最后一个迭代值与迭代报告；到达 max_n 仍未收敛时带 not_converged 标记返回"""
    tol = configurable["tol"] if tol is None else tol
    max_n = configurable["max_n"] if max_n is None else max_n
    if acceleration not in (None, "policy"):
        raise ValueError(f"未知的加速方式 {acceleration!r}")

    start = time.perf_counter()
    report = require_assumptions(p, report, acknowledge)
    flags: list[str] = []
    if report.structural_failure:
        flags.append("assumptions_acknowledged")
    if report.sa3_failed:
        flags.append("sa3_failed")
        sites = ", ".join(f"SA3[{c.location}]" for c in report.failures() if c.assumption == "SA3")
        warnings.warn(f"{p.name or '<unnamed>'}: {sites} 不成立，V^(∞) 可能与 V_θ 不同", AssumptionWarning, stacklevel=2)
    elif not report.passed:
        flags.append("assumptions_inconclusive")
    if acceleration:
        flags.append("policy_acceleration")

    if grid is None:
        grid = make_grid(p, kinds=report.kinds)
    op = GOperator(p, grid, left, right, cap_factor=cap_factor)
    g = np.asarray(p.payoff(grid.nodes), dtype=float)

    v = np.zeros_like(g)
    first: np.ndarray | None = None
    increments: list[float] = []
    min_increments: list[float] = []
    converged = False
    n = 0
    while n < max_n:
        nxt = op.apply(np.maximum(g, v))
        if first is None:
            first = nxt
        if acceleration == "policy":
            nxt = np.maximum(nxt, op.policy_value(g >= nxt, g))
        step = nxt - v
        increments.append(float(np.max(np.abs(step))))
        min_increments.append(float(np.min(step)))
        v = nxt
        n += 1
        if increments[-1] < tol:
            converged = True
            break

    if not converged:
        flags.append("not_converged")
    result = op.wrap(v, label=f"V^({n})")
    res = residual(p, result, cap_factor=cap_factor)
    return result, IterationReport(
        iterations=n,
        increments=tuple(increments),
        min_increments=tuple(min_increments),
        converged=converged,
        residual=res,
        wall_time=time.perf_counter() - start,
        sa3_failed=report.sa3_failed,
        flags=tuple(flags),
        first_iterate=op.wrap(first, label="G_theta") if first is not None else None,
    )


def residual_profile(
    p: ProblemSpec,
    V: ValueFunction,
    kinks: Iterable[float] = (),
    collar: int | None = None,
    cap_factor: float | None = None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """内部节点上的离散残差 (1/2)a²V'' + bV' - (β+θ)V + θ(g∨V)

    返回 (节点, 残差, 是否计入)；g-V 变号处和 kinks 附近 collar 个节点不计入。
    """
    collar = configurable["residual_collar"] if collar is None else collar
    cap = configurable["rate_cap_factor"] if cap_factor is None else cap_factor
    x, v = V.grid.nodes, V.values
    xi = x[1:-1]
    hm, hp = x[1:-1] - x[:-2], x[2:] - x[1:-1]
    s = hm + hp
    d2 = 2.0 * ((v[2:] - v[1:-1]) / hp - (v[1:-1] - v[:-2]) / hm) / s
    d1 = (-hp / (hm * s)) * v[:-2] + ((hp - hm) / (hm * hp)) * v[1:-1] + (hm / (hp * s)) * v[2:]
    with np.errstate(all="ignore"):
        a = np.broadcast_to(np.asarray(p.vol.raw(xi), dtype=float), xi.shape)
        b = np.broadcast_to(np.asarray(p.drift.raw(xi), dtype=float), xi.shape)
    theta = capped_rate(p, xi, cap)
    g = np.asarray(p.payoff(xi), dtype=float)
    vi = v[1:-1]
    r = 0.5 * a * a * d2 + b * d1 - (p.beta + theta) * vi + theta * np.maximum(g, vi)

    keep = np.ones(xi.size, dtype=bool)
    sign = np.sign(g - vi)
    crossings = np.flatnonzero(sign[:-1] * sign[1:] < 0)
    centers = list(crossings) + list(crossings + 1)
    centers += [int(np.searchsorted(xi, k)) for k in kinks]
    for c in centers:
        keep[max(0, c - collar): c + collar + 1] = False
    return xi, r, keep


def residual(
    p: ProblemSpec,
    V: ValueFunction,
    kinks: Iterable[float] = (),
    collar: int | None = None,
    cap_factor: float | None = None,
) -> float:
    """残差的上确界范数"""
    _, r, keep = residual_profile(p, V, kinks, collar, cap_factor)
    if not keep.any():
        return 0.0
    return float(np.max(np.abs(r[keep])))


def conditional_value(p: ProblemSpec, V: ValueFunction) -> ValueFunction:
    """H = max(g, V)：时刻 0 恰有一个事件时的值"""
    g = np.asarray(p.payoff(V.grid.nodes), dtype=float)
    return V.with_values(np.maximum(g, V.values), label="H")


__all__ = [
    "IterationReport",
    "conditional_value",
    "residual",
    "residual_profile",
    "value_iteration",
]
