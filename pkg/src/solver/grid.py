"""
求解网格、边界策略与网格上的值函数

- 吸收端点总是网格上的精确节点
- (0,∞) 上的对数网格默认截断为 [x̄/50, 50x̄]
- ℝ 上的均匀网格默认截断为 x̄ ± 10·a(x̄)/√β
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Literal, Mapping

import numpy as np

from src.config import configurable
from src.model.expression import DomainError, parse_real
from src.model.problem import Interval, ProblemSpec

Spacing = Literal["uniform", "log"]
PolicyKind = Literal["dirichlet", "linear", "power"]


class GridError(ValueError):
    """网格参数与状态区间不相容"""


class BoundaryPolicyError(ValueError):
    """截断端点缺少边界策略，或策略在该端点不可用"""

    def __init__(self, message: str, side: str | None = None):
        self.side = side
        super().__init__(f"[{side}] {message}" if side else message)


@dataclass(frozen=True)
class BoundaryPolicy:
    """端点处的边界条件

    dirichlet: u(e) = h(e)·θ(e)/(β+θ(e))，只用于吸收端点
    linear: 通过相邻两个节点线性外推（二阶差分为零）
    power: u(x0) = u(x1)·(x0/x1)^k，exponent=None 表示按指数布朗运动自动取特征根
    """

    kind: PolicyKind
    exponent: float | None = None

    def to_json(self) -> Any:
        if self.kind == "power":
            return {"power": self.exponent}
        return self.kind


def parse_policy(value: Any, side: str) -> BoundaryPolicy:
    """解析问题文件 grid.left / grid.right 或命令行给出的策略"""
    if isinstance(value, BoundaryPolicy):
        return value
    if value in ("linear", "dirichlet"):
        return BoundaryPolicy(value)
    if value == "power":
        return BoundaryPolicy("power")
    if isinstance(value, Mapping) and set(value) == {"power"}:
        k = value["power"]
        return BoundaryPolicy("power", None if k is None else parse_real(k))
    raise BoundaryPolicyError(f"无法识别的边界策略 {value!r}", side)


@dataclass(frozen=True)
class Grid:
    nodes: np.ndarray
    spacing: Spacing
    interval: Interval
    truncated: tuple[bool, bool] = (True, True)

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        if nodes.ndim != 1 or nodes.size < configurable["min_grid_nodes"]:
            raise GridError(f"网格至少需要 {configurable['min_grid_nodes']} 个节点，实际 {nodes.size}")
        if not np.isfinite(nodes).all():
            raise GridError("网格节点必须有限")
        if not (np.diff(nodes) > 0).all():
            raise GridError("网格节点必须严格递增")
        l, r = self.interval.closure
        if nodes[0] < l or nodes[-1] > r:
            raise GridError(f"网格 [{nodes[0]}, {nodes[-1]}] 超出状态区间 [{l}, {r}]")
        for i, side in enumerate(("left", "right")):
            e = self.interval.endpoint(side)
            at_end = nodes[-i] == e if i else nodes[0] == e
            if self.truncated[i] == at_end:
                raise GridError(f"{side} 端截断标记与节点不一致")
            if self.interval.kind(side) == "absorbing" and not at_end:
                raise GridError(f"吸收端点 {e} 必须是网格节点")

    @property
    def size(self) -> int:
        return int(self.nodes.size)

    @property
    def steps(self) -> np.ndarray:
        return np.diff(self.nodes)

    @property
    def bounds(self) -> tuple[float, float]:
        return float(self.nodes[0]), float(self.nodes[-1])

    def refine(self) -> "Grid":
        """每个单元插入中点，步长减半"""
        mid = 0.5 * (self.nodes[:-1] + self.nodes[1:])
        nodes = np.empty(2 * self.size - 1)
        nodes[0::2] = self.nodes
        nodes[1::2] = mid
        return Grid(nodes, self.spacing, self.interval, self.truncated)

    def to_json(self) -> dict[str, Any]:
        return {
            "nodes": self.size,
            "spacing": self.spacing,
            "lower": float(self.nodes[0]),
            "upper": float(self.nodes[-1]),
            "truncated": {"left": self.truncated[0], "right": self.truncated[1]},
        }


def _line_half_width(p: ProblemSpec, center: float) -> float:
    a = float(np.abs(np.atleast_1d(p.vol.raw(np.array([center]))))[0])
    return configurable["line_half_width_sd"] * a / math.sqrt(p.beta)


def _truncation(p: ProblemSpec, interval: Interval, spacing: Spacing) -> tuple[float, float]:
    """两侧默认截断点；吸收端点原样返回"""
    ratio = configurable["truncation_ratio"]
    l, r = interval.closure
    finite_center = p.scale if p.scale is not None else interval.default_anchor()
    xbar = p.query_scale()

    if interval.left_kind == "absorbing":
        lo = l
    elif math.isfinite(l):
        lo = l + (finite_center - l) / ratio
    else:
        lo = finite_center - _line_half_width(p, finite_center)

    if interval.right_kind == "absorbing":
        hi = r
    elif math.isfinite(r):
        hi = r - (r - finite_center) / ratio
    elif spacing == "log":
        hi = (l if math.isfinite(l) else 0.0) + ratio * xbar
    else:
        hi = finite_center + _line_half_width(p, finite_center)
    return lo, hi


def make_grid(
    p: ProblemSpec,
    nodes: int | None = None,
    spacing: Spacing | None = None,
    lower: float | None = None,
    upper: float | None = None,
    offset: float | None = None,
    kinds: tuple[str, str] | None = None,
) -> Grid:
    """按问题文件的 grid 提示与全局默认值构造网格

    显式参数优先于 p.grid_hints，后者优先于 configurable。
    kinds 为分类后的端点类型（来自 AssumptionReport），决定哪些端点是精确节点。
    """
    hints = p.grid_hints
    interval = p.interval.with_kinds(*kinds) if kinds else p.interval
    n = int(nodes or hints.get("nodes") or configurable["grid_nodes"])

    explicit = spacing or hints.get("spacing")
    spacing = explicit or configurable["grid_spacing"]
    if spacing not in ("uniform", "log"):
        raise GridError(f"未知的网格类型 {spacing!r}")
    if spacing == "log" and not math.isfinite(interval.left):
        if explicit:
            raise GridError("对数网格需要有限的左端点")
        spacing = "uniform"

    lo, hi = _truncation(p, interval, spacing)
    left_exact = interval.left_kind == "absorbing"
    right_exact = interval.right_kind == "absorbing"
    if lower is None and "lower" in hints:
        lower = parse_real(hints["lower"])
    if upper is None and "upper" in hints:
        upper = parse_real(hints["upper"])
    if lower is not None and not left_exact:
        lo = float(lower)
    if upper is not None and not right_exact:
        hi = float(upper)
    if not lo < hi:
        raise GridError(f"截断区间为空: [{lo}, {hi}]")

    if spacing == "uniform":
        xs = np.linspace(lo, hi, n)
    else:
        origin = interval.left
        if left_exact:
            if offset is None:
                offset = parse_real(hints["offset"]) if "offset" in hints else p.query_scale() / configurable["truncation_ratio"]
            if not 0.0 < offset < hi - origin:
                raise GridError(f"对数网格的偏移 {offset} 必须落在 (0, {hi - origin}) 内")
            xs = origin + np.concatenate([[0.0], np.geomspace(offset, hi - origin, n - 1)])
        else:
            if not lo > origin:
                raise GridError(f"对数网格的下界 {lo} 必须大于左端点 {origin}")
            xs = origin + np.geomspace(lo - origin, hi - origin, n)
        if right_exact:
            xs[-1] = hi
    return Grid(xs, spacing, interval, (not left_exact, not right_exact))


@dataclass(frozen=True)
class ValueFunction:
    """网格上的值函数：节点间线性插值，截断点以外按边界策略外推"""

    grid: Grid
    values: np.ndarray
    left: BoundaryPolicy = BoundaryPolicy("linear")
    right: BoundaryPolicy = BoundaryPolicy("linear")
    label: str = field(default="", compare=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != self.grid.nodes.shape:
            raise ValueError(f"取值个数 {values.shape} 与网格节点数 {self.grid.nodes.shape} 不符")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def nodes(self) -> np.ndarray:
        return self.grid.nodes

    def _tail(self, x: np.ndarray, side: str) -> np.ndarray:
        xs, vs = self.grid.nodes, self.values
        policy = self.left if side == "left" else self.right
        i0, i1 = (0, 1) if side == "left" else (-1, -2)
        if policy.kind == "power" and policy.exponent is not None and xs[i0] > 0:
            return vs[i0] * (x / xs[i0]) ** policy.exponent
        slope = (vs[i1] - vs[i0]) / (xs[i1] - xs[i0])
        return vs[i0] + slope * (x - xs[i0])

    def __call__(self, x):
        arr = np.asarray(x, dtype=float)
        l, r = self.grid.interval.closure
        outside = (arr < l) | (arr > r) | np.isnan(arr)
        if outside.any():
            raise DomainError(float(arr[outside].flat[0]) if arr.ndim else float(arr), (l, r))
        flat = np.atleast_1d(arr)
        out = np.interp(flat, self.grid.nodes, self.values)
        lo, hi = self.grid.bounds
        below, above = flat < lo, flat > hi
        if below.any():
            out[below] = self._tail(flat[below], "left")
        if above.any():
            out[above] = self._tail(flat[above], "right")
        if arr.ndim == 0:
            return float(out[0])
        return out.reshape(arr.shape)

    def with_values(self, values: np.ndarray, label: str = "") -> "ValueFunction":
        return ValueFunction(self.grid, values, self.left, self.right, label or self.label)


__all__ = [
    "BoundaryPolicy",
    "BoundaryPolicyError",
    "Grid",
    "GridError",
    "ValueFunction",
    "make_grid",
    "parse_policy",
]
