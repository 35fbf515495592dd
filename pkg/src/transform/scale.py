"""
尺度函数与自然尺度变换

s'(x) = exp(-∫_c^x 2b/a²)，s(x) = ∫_c^x s'，归一化 s(c)=0、s'(c)=1。
把 (log s', s) 当作常微分方程组从锚点 c 向两端积分，再在节点上做单调三次（PCHIP）插值制表。
b ≡ 0 时直接给出精确的仿射映射 s(x) = x - c。
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import PchipInterpolator

from src.config import configurable
from src.model.expression import (
    BuiltinFunction,
    DomainError,
    EvaluationError,
    ScalarFunction,
    TabulatedFunction,
    constant,
)
from src.model.problem import Diffusion, Interval, ProblemSpec
from src.model.quadrature import RefinementResult, integrate_toward

# log s' 越过 ±LOG_SLOPE_LIMIT 时停止积分：s' 已可忽略或 s 已发散
LOG_SLOPE_LIMIT = 50.0
FAR_FACTOR = 1e8
NEAR_OFFSET = 1e-12
NEWTON_STEPS = 2


class ScaleFunctionError(RuntimeError):
    """b/a² 在请求的紧集上不可积，或常微分方程求解失败"""

    def __init__(self, message: str, where: tuple[float, float] | None = None):
        self.where = where
        super().__init__(message if where is None else f"{message}（区间 {where}）")


@dataclass(frozen=True)
class ScaleMap:
    """尺度函数的制表表示

    s、s_prime、inverse 都是 ScalarFunction；image 是自然尺度下的状态区间，端点类型沿用原区间。
    """

    anchor: float
    interval: Interval
    image: Interval
    s: ScalarFunction
    s_prime: ScalarFunction
    inverse: ScalarFunction
    vol: ScalarFunction = field(repr=False)
    nodes: np.ndarray = field(default_factory=lambda: np.empty(0), repr=False, compare=False)
    affine: bool = False
    tabulation_error: float = 0.0
    image_limits: tuple[RefinementResult | None, RefinementResult | None] = (None, None)

    @property
    def support(self) -> tuple[float, float]:
        """制表覆盖的 m 范围"""
        if self.affine:
            return (self.image.left, self.image.right)
        return self.inverse.support

    def eta(self, m):
        """自然尺度下的扩散系数 η(m) = a(s⁻¹(m))·s'(s⁻¹(m))"""
        x = self.inverse(m)
        values = np.asarray(self.vol(x), dtype=float) * np.asarray(self.s_prime(x), dtype=float)
        return float(values) if values.ndim == 0 else values

    def to_json(self) -> dict:
        out = {
            "anchor": self.anchor,
            "affine": self.affine,
            "image": self.image.to_json(),
            "nodes": int(len(self.nodes)),
            "tabulation_error": self.tabulation_error,
        }
        limits = {}
        for side, result in zip(("left", "right"), self.image_limits):
            if result is not None:
                limits[side] = result.to_json()
        if limits:
            out["image_limits"] = limits
        return out


def _ratio(diffusion: Diffusion, x: np.ndarray) -> np.ndarray:
    with np.errstate(all="ignore"):
        a = np.asarray(diffusion.vol.raw(x), dtype=float)
        b = np.asarray(diffusion.drift.raw(x), dtype=float)
        return b / (a * a)


def _target(diffusion: Diffusion, anchor: float, endpoint: float) -> float:
    """单侧积分的终点：无穷端点取远端截断；有限端点在 b/a² 有限时取端点本身"""
    sign = 1.0 if endpoint > anchor else -1.0
    if math.isinf(endpoint):
        return anchor + sign * (abs(anchor) + 1.0) * FAR_FACTOR
    value = _ratio(diffusion, np.array([endpoint]))[0]
    if math.isfinite(value):
        return endpoint
    return endpoint - sign * max(1.0, abs(endpoint)) * NEAR_OFFSET


def _solve_side(diffusion: Diffusion, anchor: float, target: float):
    def rhs(x, y):
        r = _ratio(diffusion, np.array([x]))[0]
        return [-2.0 * r, math.exp(min(y[0], 700.0))]

    def too_flat(x, y):
        return y[0] + LOG_SLOPE_LIMIT

    def too_steep(x, y):
        return y[0] - LOG_SLOPE_LIMIT

    too_flat.terminal = True
    too_steep.terminal = True

    try:
        sol = solve_ivp(
            rhs, (anchor, target), [0.0, 0.0],
            method="DOP853", rtol=1e-10, atol=1e-14,
            dense_output=True, events=[too_flat, too_steep],
        )
    except EvaluationError as exc:
        raise ScaleFunctionError(f"b/a² 无法求值: {exc}", (anchor, target)) from exc
    if sol.status == -1 or not np.isfinite(sol.y).all():
        raise ScaleFunctionError(f"尺度函数积分失败: {sol.message}", (anchor, target))
    stop = "flat" if sol.t_events[0].size else ("steep" if sol.t_events[1].size else None)
    return sol, stop


def _side_nodes(anchor: float, stop: float, steps: np.ndarray, n: int, finite_end: bool) -> np.ndarray:
    sign = 1.0 if stop > anchor else -1.0
    d = abs(stop - anchor)
    parts = [
        anchor + sign * d * np.linspace(0.0, 1.0, n // 2),
        anchor + sign * d * np.geomspace(1e-8, 1.0, n // 4),
        steps,
    ]
    if finite_end:
        parts.append(stop - sign * d * np.geomspace(1e-10, 1.0, n // 4))
    nodes = np.unique(np.concatenate(parts))
    lo, hi = min(anchor, stop), max(anchor, stop)
    return nodes[(nodes >= lo) & (nodes <= hi)]


def _image_limit(anchor: float, endpoint: float, target: float, stop_reason: str | None,
                 slope, s_at: float, sign: float) -> tuple[float, RefinementResult | None]:
    """像区间的一端：s 在端点方向上的极限"""
    if stop_reason == "steep":
        return sign * math.inf, None
    if stop_reason == "flat" or target == endpoint:
        return s_at, None
    result = integrate_toward(slope, anchor, endpoint)
    if result.status == "diverged":
        return sign * math.inf, result
    if result.status == "converged":
        return sign * result.value, result
    # 制表范围内无法判定：远端截断处的 s 已经是对极限的最好估计
    if math.isinf(endpoint):
        return sign * math.inf, result
    return s_at, result


def scale_function(diffusion: Diffusion, anchor: float | None = None) -> ScaleMap:
    """计算尺度函数并制表；anchor 缺省时取区间的默认锚点"""
    interval = diffusion.interval
    c = interval.default_anchor() if anchor is None else float(anchor)
    if not (math.isfinite(c) and interval.left <= c <= interval.right):
        raise ScaleFunctionError(f"锚点 {c} 不在区间内部", interval.closure)

    if diffusion.is_natural_scale:
        return _affine_map(diffusion, c)

    n = configurable["scale_nodes"]
    sides = {}
    for side, endpoint in (("left", interval.left), ("right", interval.right)):
        if endpoint == c:
            sides[side] = None
            continue
        target = _target(diffusion, c, endpoint)
        sol, stop = _solve_side(diffusion, c, target)
        sides[side] = (sol, stop, endpoint, target)

    def exact(x: np.ndarray) -> np.ndarray:
        out = np.empty((2, x.size))
        for side, item in sides.items():
            if item is None:
                continue
            sol = item[0]
            mask = x <= c if side == "left" else x >= c
            if mask.any():
                out[:, mask] = sol.sol(x[mask])
        return out

    per_side = max(64, n // 2)
    node_parts = []
    for side, item in sides.items():
        if item is None:
            node_parts.append(np.array([c]))
            continue
        sol, stop, endpoint, target = item
        finite_end = math.isfinite(endpoint)
        node_parts.append(_side_nodes(c, float(sol.t[-1]), sol.t, per_side, finite_end))
    xs = np.unique(np.concatenate(node_parts))

    tabulation_error = math.inf
    for _ in range(configurable["scale_max_doublings"] + 1):
        values = exact(xs)
        s_interp = PchipInterpolator(xs, values[1])
        mid = 0.5 * (xs[:-1] + xs[1:])
        s_mid = exact(mid)[1]
        denom = np.maximum(np.abs(s_mid), np.abs(np.diff(values[1])))
        denom = np.where(denom > 0.0, denom, 1.0)
        tabulation_error = float(np.max(np.abs(s_interp(mid) - s_mid) / denom))
        if tabulation_error <= configurable["scale_rtol"]:
            break
        xs = np.unique(np.concatenate([xs, mid]))
    values = exact(xs)
    log_slope, s_values = values[0], values[1]
    return _tabulated_map(diffusion, c, xs, log_slope, s_values, sides, tabulation_error)


def _affine_map(diffusion: Diffusion, c: float) -> ScaleMap:
    interval = diffusion.interval
    image = Interval(interval.left - c, interval.right - c, interval.left_kind, interval.right_kind)
    return ScaleMap(
        anchor=c,
        interval=interval,
        image=image,
        s=BuiltinFunction("linear", (("slope", 1.0), ("intercept", -c))).bind(interval.closure),
        s_prime=constant(1.0).bind(interval.closure),
        inverse=BuiltinFunction("linear", (("slope", 1.0), ("intercept", c))).bind(image.closure),
        vol=diffusion.vol,
        nodes=np.array([interval.left, c, interval.right]),
        affine=True,
    )


def _tabulated_map(diffusion, c, xs, log_slope, s_values, sides, tabulation_error) -> ScaleMap:
    interval = diffusion.interval
    s_interp = PchipInterpolator(xs, s_values, extrapolate=False)
    l_interp = PchipInterpolator(xs, log_slope, extrapolate=False)
    x_lo, x_hi = float(xs[0]), float(xs[-1])

    strict = np.concatenate([[True], np.diff(s_values) > 0.0])
    s_strict, x_strict = s_values[strict], xs[strict]
    inv_interp = PchipInterpolator(s_strict, x_strict, extrapolate=False)
    m_lo, m_hi = float(s_strict[0]), float(s_strict[-1])

    def s_fn(x):
        x = np.asarray(x, dtype=float)
        outside = (x < x_lo) | (x > x_hi)
        if outside.any():
            raise DomainError(float(x[outside].flat[0]), (x_lo, x_hi))
        return s_interp(x)

    def slope_fn(x):
        x = np.asarray(x, dtype=float)
        outside = (x < x_lo) | (x > x_hi)
        if outside.any():
            raise DomainError(float(x[outside].flat[0]), (x_lo, x_hi))
        return np.exp(l_interp(x))

    def inverse_fn(m):
        m = np.asarray(m, dtype=float)
        outside = (m < m_lo) | (m > m_hi)
        if outside.any():
            raise DomainError(float(m[outside].flat[0]), (m_lo, m_hi))
        x = inv_interp(m)
        for _ in range(NEWTON_STEPS):
            step = (s_interp(x) - m) / np.exp(l_interp(x))
            x = np.clip(x - np.where(np.isfinite(step), step, 0.0), x_lo, x_hi)
        return x

    limits = []
    bounds = []
    for side, sign in (("left", -1.0), ("right", 1.0)):
        item = sides[side]
        if item is None:
            bounds.append(0.0)
            limits.append(None)
            continue
        sol, stop, endpoint, target = item
        s_at = float(sol.y[1, -1])
        bound, result = _image_limit(c, endpoint, target, stop, slope_fn, s_at, sign)
        bounds.append(bound)
        limits.append(result)

    left_kind, right_kind = interval.left_kind, interval.right_kind
    if math.isinf(bounds[0]) and left_kind == "absorbing":
        left_kind = "unclassified"
    if math.isinf(bounds[1]) and right_kind == "absorbing":
        right_kind = "unclassified"
    image = Interval(bounds[0], bounds[1], left_kind, right_kind)

    return ScaleMap(
        anchor=c,
        interval=interval,
        image=image,
        s=TabulatedFunction(s_fn, description="s", support=(x_lo, x_hi)).bind(interval.closure),
        s_prime=TabulatedFunction(slope_fn, description="s'", support=(x_lo, x_hi)).bind(interval.closure),
        inverse=TabulatedFunction(inverse_fn, description="s^-1", support=(m_lo, m_hi)).bind(image.closure),
        vol=diffusion.vol,
        nodes=xs,
        affine=False,
        tabulation_error=tabulation_error,
        image_limits=(limits[0], limits[1]),
    )


def to_natural_scale(p: ProblemSpec, anchor: float | None = None) -> tuple[ProblemSpec, ScaleMap]:
    """把问题变换到 M = s(X)：漂移 0，扩散 η，收益 g∘s⁻¹，速率 θ∘s⁻¹，β 不变"""
    smap = scale_function(p.diffusion, anchor)
    image = smap.image
    if smap.affine:
        c = smap.anchor

        def pull(f: ScalarFunction, label: str) -> TabulatedFunction:
            return TabulatedFunction(lambda m, f=f: f.raw(np.asarray(m) + c), description=f"{label}(m+{c!r})",
                                     allow_infinite=f.allow_infinite)

        vol = pull(p.vol, "a")
        payoff = pull(p.payoff, "g")
        rate = pull(p.rate, "theta")
    else:
        support = smap.support

        def pull(f: ScalarFunction, label: str) -> TabulatedFunction:
            return TabulatedFunction(
                lambda m, f=f: f.raw(smap.inverse.raw(np.asarray(m, dtype=float))),
                description=f"{label}∘s^-1",
                support=support,
                allow_infinite=f.allow_infinite,
            )

        def eta(m):
            x = smap.inverse.raw(np.asarray(m, dtype=float))
            return np.asarray(p.vol.raw(x), dtype=float) * np.asarray(smap.s_prime.raw(x), dtype=float)

        vol = TabulatedFunction(eta, description="eta", support=support)
        payoff = pull(p.payoff, "g")
        rate = pull(p.rate, "theta")

    diffusion = Diffusion(vol, constant(0.0), image)
    natural = ProblemSpec(
        diffusion=diffusion,
        payoff=payoff,
        rate=rate,
        beta=p.beta,
        name=f"{p.name}@natural" if p.name else "natural",
        description=p.description,
        scale=None,
        grid_hints={},
        claims=p.claims,
    )
    return natural, smap


__all__ = [
    "ScaleMap",
    "ScaleFunctionError",
    "scale_function",
    "to_natural_scale",
]
