"""
单调性、凸性、凹性检测

输入可以是 ValueFunction，也可以是 (节点, 取值) 数组对。容差按 max|value| 缩放；
另外留出一个按舍入误差估计的下限，仿射输入在 tol=0 时也判为成立。
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Literal, Union

import numpy as np

from src.config import configurable
from src.solver import ValueFunction

Property = Literal["monotone-increasing", "convex", "concave"]
Samples = Union[ValueFunction, tuple[np.ndarray, np.ndarray]]

# 舍入误差下限的 ULP 倍数
ULP_FACTOR = 8.0


@dataclass(frozen=True)
class ShapeReport:
    """一次形状检测的结论

    verdict 为 fails 时 witness 给出最坏的节点对（单调）或三元组（凸/凹），
    magnitude 为违反量（差分或二阶差分的负部）。borderline 表示成立但违反量超过了舍入下限。
    """

    property: Property
    verdict: Literal["holds", "fails"]
    tolerance: float
    scale: float
    magnitude: float = 0.0
    witness: tuple[float, ...] = ()
    borderline: bool = False

    @property
    def holds(self) -> bool:
        return self.verdict == "holds"

    @property
    def status(self) -> str:
        """holds / borderline / fails 三分类，供假设标注使用"""
        if not self.holds:
            return "fails"
        return "borderline" if self.borderline else "holds"

    def to_json(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "property": self.property,
            "verdict": self.verdict,
            "tolerance": self.tolerance,
            "scale": self.scale,
            "magnitude": self.magnitude,
            "borderline": self.borderline,
        }
        if self.witness:
            out["witness"] = list(self.witness)
        return out


def _samples(V: Samples) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(V, ValueFunction):
        x, v = V.grid.nodes, V.values
    else:
        x, v = V
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    if x.shape != v.shape or x.ndim != 1:
        raise ValueError(f"节点与取值的形状不一致: {x.shape} vs {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("形状检测要求有限的取值")
    return x, v


def _scale(v: np.ndarray) -> float:
    m = float(np.max(np.abs(v))) if v.size else 0.0
    return m if m > 0.0 else 1.0


def _report(prop: Property, margin: np.ndarray, allowed: np.ndarray, noise: np.ndarray,
            witnesses: np.ndarray, tol: float, scale: float) -> ShapeReport:
    """margin ≥ -allowed 为成立；witnesses[i] 为第 i 个 margin 对应的节点"""
    excess = -margin
    i = int(np.argmax(excess - allowed))
    worst = float(max(excess[i], 0.0))
    if excess[i] > allowed[i]:
        return ShapeReport(prop, "fails", tol, scale, worst, tuple(float(w) for w in witnesses[i]))
    borderline = bool(np.any(excess > noise))
    j = int(np.argmax(excess))
    return ShapeReport(
        prop, "holds", tol, scale, float(max(excess[j], 0.0)),
        tuple(float(w) for w in witnesses[j]) if borderline else (),
        borderline,
    )


def check_monotone(V: Samples, tol: float | None = None) -> ShapeReport:
    """V(x_{i+1}) - V(x_i) ≥ -tol·scale 对所有 i 成立"""
    tol = configurable["shape_tol_solver"] if tol is None else tol
    x, v = _samples(V)
    if x.size < 2:
        raise ValueError("单调性检测至少需要 2 个节点")
    scale = _scale(v)
    diff = np.diff(v)
    noise = np.full(diff.shape, 2.0 * ULP_FACTOR * np.finfo(float).eps * scale)
    allowed = tol * scale + noise
    pairs = np.column_stack([x[:-1], x[1:]])
    return _report("monotone-increasing", diff, allowed, noise, pairs, tol, scale)


def _second_difference(x: np.ndarray, v: np.ndarray, scale: float) -> tuple[np.ndarray, np.ndarray]:
    """非均匀网格上的二阶差分与它的舍入误差估计"""
    hm, hp = x[1:-1] - x[:-2], x[2:] - x[1:-1]
    s = hm + hp
    d2 = 2.0 * ((v[2:] - v[1:-1]) / hp - (v[1:-1] - v[:-2]) / hm) / s
    noise = 2.0 * ULP_FACTOR * np.finfo(float).eps * scale * (1.0 / hm + 1.0 / hp) * 2.0 / s
    return d2, noise


def _curvature(prop: Property, V: Samples, tol: float | None, sign: float) -> ShapeReport:
    tol = configurable["shape_tol_solver"] if tol is None else tol
    x, v = _samples(V)
    if x.size < 3:
        raise ValueError("凸性检测至少需要 3 个节点")
    scale = _scale(v)
    d2, noise = _second_difference(x, v, scale)
    triples = np.column_stack([x[:-2], x[1:-1], x[2:]])
    return _report(prop, sign * d2, tol * scale + noise, noise, triples, tol, scale)


def check_convex(V: Samples, tol: float | None = None) -> ShapeReport:
    """内部节点的二阶差分 D²_i ≥ -tol·scale"""
    return _curvature("convex", V, tol, 1.0)


def check_concave(V: Samples, tol: float | None = None) -> ShapeReport:
    """check_convex 的镜像：D²_i ≤ tol·scale"""
    return _curvature("concave", V, tol, -1.0)


__all__ = [
    "ShapeReport",
    "check_concave",
    "check_convex",
    "check_monotone",
]
