"""
Poisson 停时问题的描述：状态区间、扩散、收益 g、速率 θ、折现 β，以及 Ψ = gθ/(β+θ)。

问题文件为 JSON 对象，键 drift / vol / payoff / rate / beta / interval 必填，
可选键 name / description / scale / grid / claims。
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Literal, Mapping

import numpy as np

from src.utils import (
    MissingRequiredKeysError,
    format_parse_error,
    parse_json_document,
    validate_required_keys,
)
from .expression import (
    BuiltinFunction,
    EvaluationError,
    ExpressionError,
    ExpressionFunction,
    Number,
    PiecewiseFunction,
    ScalarFunction,
    TabulatedFunction,
    function_from_json,
    is_zero_function,
    parse_real,
    _real_to_json,
)

EndpointKind = Literal["absorbing", "natural", "entrance", "unclassified"]
ENDPOINT_KINDS: tuple[str, ...] = ("absorbing", "natural", "entrance", "unclassified")

REQUIRED_KEYS = ["drift", "vol", "payoff", "rate", "beta", "interval"]


class ProblemSpecError(ValueError):
    """问题描述不满足基本约束（β>0、g≥0、a>0 等）"""


class ProblemFileError(ValueError):
    """问题文件无法读取或解析，line/column 在语法错误时给出"""

    def __init__(self, message: str, source: str = "<string>", line: int | None = None,
                 column: int | None = None, key: str | None = None):
        self.source = source
        self.line = line
        self.column = column
        self.key = key
        where = f"{source}[{key}]" if key is not None and line is None else source
        super().__init__(format_parse_error({"source": where, "line": line, "column": column, "message": message}))


@dataclass(frozen=True)
class Interval:
    left: float
    right: float
    left_kind: EndpointKind = "unclassified"
    right_kind: EndpointKind = "unclassified"

    def __post_init__(self):
        if not self.left < self.right:
            raise ProblemSpecError(f"区间端点必须满足 ℓ < r，实际 [{self.left}, {self.right}]")
        for kind in (self.left_kind, self.right_kind):
            if kind not in ENDPOINT_KINDS:
                raise ProblemSpecError(f"未知的端点类型 '{kind}'")
        if math.isinf(self.left) and self.left_kind == "absorbing":
            raise ProblemSpecError("无穷端点不能是吸收端点")
        if math.isinf(self.right) and self.right_kind == "absorbing":
            raise ProblemSpecError("无穷端点不能是吸收端点")

    @property
    def closure(self) -> tuple[float, float]:
        return (self.left, self.right)

    def kind(self, side: str) -> str:
        return self.left_kind if side == "left" else self.right_kind

    def endpoint(self, side: str) -> float:
        return self.left if side == "left" else self.right

    def contains(self, x: float) -> bool:
        return self.left <= x <= self.right

    def with_kinds(self, left_kind: str | None = None, right_kind: str | None = None) -> "Interval":
        return replace(
            self,
            left_kind=left_kind or self.left_kind,
            right_kind=right_kind or self.right_kind,
        )

    def default_anchor(self) -> float:
        """尺度函数的归一化点：有限区间取中点，(0,∞) 取 1，ℝ 取 0"""
        l, r = self.left, self.right
        if math.isfinite(l) and math.isfinite(r):
            return 0.5 * (l + r)
        if math.isfinite(l):
            return l + 1.0
        if math.isfinite(r):
            return r - 1.0
        return 0.0

    def to_json(self) -> dict[str, Any]:
        return {
            "left": _real_to_json(self.left),
            "right": _real_to_json(self.right),
            "left_kind": self.left_kind,
            "right_kind": self.right_kind,
        }


@dataclass(frozen=True)
class Diffusion:
    """dX = a(X) dB + b(X) dt 在区间上的描述"""

    vol: ScalarFunction
    drift: ScalarFunction
    interval: Interval

    def __post_init__(self):
        dom = self.interval.closure
        object.__setattr__(self, "vol", self.vol.bind(dom))
        object.__setattr__(self, "drift", self.drift.bind(dom))

    @property
    def is_natural_scale(self) -> bool:
        return is_zero_function(self.drift)


def exponential_bm_parameters(diffusion: Diffusion, rtol: float = 1e-12) -> tuple[float, float] | None:
    """a(x)=σx、b(x)=μx 时返回 (σ, μ)，否则返回 None"""
    if diffusion.interval.left < 0.0:
        return None
    xs = probe_points(diffusion.interval, n=33)
    xs = xs[xs > 0.0]
    try:
        with np.errstate(all="ignore"):
            a = np.asarray(diffusion.vol.raw(xs), dtype=float) / xs
            b = np.asarray(diffusion.drift.raw(xs), dtype=float) / xs
    except EvaluationError:
        return None
    if not (np.isfinite(a).all() and np.isfinite(b).all()):
        return None
    sigma, mu = float(a[0]), float(b[0])
    if sigma <= 0.0:
        return None
    if np.max(np.abs(a - sigma)) > rtol * sigma or np.max(np.abs(b - mu)) > rtol * max(abs(mu), sigma):
        return None
    return sigma, mu


def probe_points(interval: Interval, n: int = 257, include_endpoints: bool = False) -> np.ndarray:
    """覆盖区间的探测点，无穷端点方向按几何级数延伸"""
    l, r = interval.left, interval.right
    if math.isfinite(l) and math.isfinite(r):
        xs = np.linspace(l, r, n + 2)[1:-1]
    elif math.isfinite(l):
        xs = l + np.geomspace(1e-4, 1e4, n)
    elif math.isfinite(r):
        xs = r - np.geomspace(1e-4, 1e4, n)[::-1]
    else:
        xs = np.sinh(np.linspace(-10.0, 10.0, n))
    if include_endpoints:
        ends = [e for e in (l, r) if math.isfinite(e)]
        xs = np.unique(np.concatenate([xs, ends]))
    return xs


def _declares_infinite(rate: ScalarFunction) -> bool:
    """速率函数是否以分段常数的方式声明了 +∞（屏障型）"""
    if isinstance(rate, BuiltinFunction):
        if rate.name == "indicator-barrier":
            return True
        if rate.name == "constant":
            return rate.param("c") == math.inf
        return False
    if isinstance(rate, PiecewiseFunction):
        return any(_declares_infinite(p.function) for p in rate.pieces)
    if isinstance(rate, ExpressionFunction):
        return isinstance(rate.tree, Number) and rate.tree.value == math.inf
    return False


@dataclass(frozen=True)
class ProblemSpec:
    diffusion: Diffusion
    payoff: ScalarFunction
    rate: ScalarFunction
    beta: float
    name: str = ""
    description: str = ""
    scale: float | None = None
    grid_hints: Mapping[str, Any] = field(default_factory=dict, compare=False, hash=False)
    claims: tuple[str, ...] = ()

    def __post_init__(self):
        if not (isinstance(self.beta, (int, float)) and self.beta > 0 and math.isfinite(self.beta)):
            raise ProblemSpecError(f"折现率 β 必须为正的有限数，实际 {self.beta!r}")
        dom = self.interval.closure
        object.__setattr__(self, "payoff", self.payoff.bind(dom))
        infinite = self.rate.allow_infinite or _declares_infinite(self.rate)
        object.__setattr__(self, "rate", self.rate.bind(dom, allow_infinite=infinite))
        self._check_basic_constraints()

    @property
    def interval(self) -> Interval:
        return self.diffusion.interval

    @property
    def vol(self) -> ScalarFunction:
        return self.diffusion.vol

    @property
    def drift(self) -> ScalarFunction:
        return self.diffusion.drift

    def _check_basic_constraints(self) -> None:
        l, r = self.interval.closure
        for key, f in (("vol", self.vol), ("drift", self.drift), ("payoff", self.payoff), ("rate", self.rate)):
            if isinstance(f, PiecewiseFunction) and not f.covers(l, r):
                raise ProblemSpecError(f"{key} 的分段区间没有覆盖状态区间 [{l}, {r}]")

        # 远端溢出为 +inf 不影响符号检查，这里用 raw 只拦截 NaN
        absorbing = [e for e, k in ((l, self.interval.left_kind), (r, self.interval.right_kind)) if k == "absorbing"]
        interior = probe_points(self.interval)
        xs = np.unique(np.concatenate([interior, absorbing]))
        for f in (self.vol, self.drift, self.payoff, self.rate):
            if isinstance(f, TabulatedFunction) and f.support is not None:
                lo, hi = f.support
                xs = xs[(xs >= lo) & (xs <= hi)]
                interior = interior[(interior >= lo) & (interior <= hi)]
        try:
            with np.errstate(all="ignore"):
                g = np.asarray(self.payoff.raw(xs), dtype=float)
                theta = np.asarray(self.rate.raw(xs), dtype=float)
                a = np.asarray(self.vol.raw(interior), dtype=float)
        except EvaluationError as exc:
            raise ProblemSpecError(f"问题 {self.name or '<unnamed>'} 的系数无法求值: {exc}") from exc
        for key, values, pts in (("payoff", g, xs), ("rate", theta, xs), ("vol", a, interior)):
            if np.isnan(values).any():
                raise ProblemSpecError(f"{key} 在 x={pts[np.isnan(values)][0]!r} 处取值 NaN")
        if (g < 0).any():
            raise ProblemSpecError(f"收益 g 必须非负，g({xs[g < 0][0]!r}) < 0")
        if (theta < 0).any():
            raise ProblemSpecError(f"速率 θ 必须非负，θ({xs[theta < 0][0]!r}) < 0")
        if np.isposinf(theta).any() and not self.rate.allow_infinite:
            raise ProblemSpecError("θ 只能以屏障分段常数的形式取 +∞")
        if (a <= 0).any():
            raise ProblemSpecError(f"扩散系数 a 在内部必须为正，a({interior[a <= 0][0]!r}) ≤ 0")
        if not (theta > 0).any():
            raise ProblemSpecError("θ 在整个区间上恒为 0，问题平凡")

    def with_rate(self, rate: ScalarFunction) -> "ProblemSpec":
        return replace(self, rate=rate)

    def with_beta(self, beta: float) -> "ProblemSpec":
        return replace(self, beta=beta)

    def with_interval(self, interval: Interval) -> "ProblemSpec":
        return replace(self, diffusion=replace(self.diffusion, interval=interval))

    def query_scale(self) -> float:
        """截断默认值使用的特征尺度 x̄"""
        if self.scale is not None:
            return float(self.scale)
        return abs(self.interval.default_anchor()) or 1.0


def psi(p: ProblemSpec, x):
    """Ψ(x) = g(x)θ(x)/(β+θ(x))；θ=+∞ 时取极限 g(x)，θ=0 时为 0"""
    g = np.asarray(p.payoff(x), dtype=float)
    theta = np.asarray(p.rate(x), dtype=float)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(
            np.isinf(theta),
            g,
            np.where(theta == 0.0, 0.0, g * theta / (p.beta + theta)),
        )
    if out.ndim == 0:
        return float(out)
    return out


def capped_rate(p: ProblemSpec, x, cap_factor: float):
    """把屏障区域的 +∞ 速率换成 cap_factor·β，供数值求解与模拟使用；有限值保持不变"""
    theta = np.asarray(p.rate(x), dtype=float)
    return np.where(np.isposinf(theta), cap_factor * p.beta, theta)


# 无穷端点方向的尾部取值点
TAIL_POINTS = np.geomspace(1e250, 1e300, 6)


def _declares_bounded(f: ScalarFunction) -> bool | None:
    """从函数形式直接读出的有界性；读不出时为 None"""
    if isinstance(f, BuiltinFunction):
        if f.name == "constant":
            return math.isfinite(f.param("c"))
        if f.name == "indicator-barrier":
            return math.isfinite(f.param("low")) and math.isfinite(f.param("high"))
        if f.name == "linear" and f.param("slope") == 0.0:
            return math.isfinite(f.param("intercept"))
        return None
    if isinstance(f, ExpressionFunction) and isinstance(f.tree, Number):
        return math.isfinite(f.tree.value)
    if isinstance(f, PiecewiseFunction):
        if all(_declares_bounded(p.function) for p in f.pieces):
            return True
    return None


def is_bounded(f: ScalarFunction, interval: Interval, n: int = 513) -> bool:
    """f 在区间上是否确定有界；不能确定时返回 False

    常数、阶梯型内置函数以及各段都是常数的分段函数直接判定。其余函数在区间内的取值必须有限，
    并且每个无穷端点方向上 |x| 从 1e250 到 1e300 的取值已经不再变化；仍在增长
    （例如 log(1+x)、x^0.3）或溢出的都判为无界。
    """
    declared = _declares_bounded(f)
    if declared is not None:
        return declared
    tails = []
    if math.isinf(interval.right):
        tails.append(TAIL_POINTS)
    if math.isinf(interval.left):
        tails.append(-TAIL_POINTS)
    try:
        with np.errstate(all="ignore"):
            values = np.abs(np.asarray(f(probe_points(interval, n=n, include_endpoints=True)), dtype=float))
            tail_values = [np.abs(np.asarray(f(xs), dtype=float)) for xs in tails]
    except EvaluationError:
        return False
    if not np.isfinite(values).all():
        return False
    scale = max(float(values.max()), 1.0)
    for v in tail_values:
        if not np.isfinite(v).all():
            return False
        if float(np.ptp(v)) > 1e-9 * max(scale, float(v.max())):
            return False
    return True


# ---------------------------------------------------------------------------
# 问题文件
# ---------------------------------------------------------------------------

def problem_from_dict(data: Mapping[str, Any], source: str = "<dict>") -> ProblemSpec:
    """从已解析的 JSON 对象构造 ProblemSpec"""
    try:
        validate_required_keys(data, REQUIRED_KEYS)
    except MissingRequiredKeysError as exc:
        raise ProblemFileError(f"缺少必需的键 {exc.missing_keys}", source) from exc

    def _function(key: str) -> ScalarFunction:
        try:
            return function_from_json(data[key])
        except (ExpressionError, ValueError, KeyError, TypeError) as exc:
            raise ProblemFileError(str(exc), source, key=key) from exc

    raw_interval = data["interval"]
    if not isinstance(raw_interval, Mapping):
        raise ProblemFileError("interval 必须是对象", source, key="interval")
    try:
        interval = Interval(
            parse_real(raw_interval["left"]),
            parse_real(raw_interval["right"]),
            raw_interval.get("left_kind", "unclassified"),
            raw_interval.get("right_kind", "unclassified"),
        )
        beta = parse_real(data["beta"])
    except (KeyError, ValueError) as exc:
        raise ProblemFileError(str(exc), source, key="interval") from exc

    try:
        diffusion = Diffusion(_function("vol"), _function("drift"), interval)
        return ProblemSpec(
            diffusion=diffusion,
            payoff=_function("payoff"),
            rate=_function("rate"),
            beta=beta,
            name=str(data.get("name", Path(source).stem if source != "<dict>" else "")),
            description=str(data.get("description", "")),
            scale=parse_real(data["scale"]) if "scale" in data else None,
            grid_hints=dict(data.get("grid", {})),
            claims=tuple(data.get("claims", ())),
        )
    except ProblemSpecError as exc:
        raise ProblemFileError(str(exc), source) from exc


def parse_problem(text: str, source: str = "<string>") -> ProblemSpec:
    result = parse_json_document(text, required_keys=REQUIRED_KEYS, source=source)
    if not result["success"]:
        error = result["error"]
        if error["type"] == "MissingRequiredKeysError":
            raise ProblemFileError(f"缺少必需的键 {error['missing_keys']}", source)
        raise ProblemFileError(error["message"], source, error.get("line"), error.get("column"))
    return problem_from_dict(result["data"], source)


def load_problem(path: str | Path) -> ProblemSpec:
    """读取问题文件；文件不存在或格式错误时抛出 ProblemFileError"""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ProblemFileError(f"无法读取文件: {exc.strerror}", str(path)) from exc
    return parse_problem(text, source=str(path))


def problem_to_dict(p: ProblemSpec) -> dict[str, Any]:
    out: dict[str, Any] = {
        "name": p.name,
        "drift": p.drift.to_json(),
        "vol": p.vol.to_json(),
        "payoff": p.payoff.to_json(),
        "rate": p.rate.to_json(),
        "beta": p.beta,
        "interval": p.interval.to_json(),
    }
    if p.description:
        out["description"] = p.description
    if p.scale is not None:
        out["scale"] = p.scale
    if p.grid_hints:
        out["grid"] = dict(p.grid_hints)
    if p.claims:
        out["claims"] = list(p.claims)
    return out


__all__ = [
    "Diffusion",
    "Interval",
    "ProblemSpec",
    "ProblemSpecError",
    "ProblemFileError",
    "psi",
    "capped_rate",
    "exponential_bm_parameters",
    "is_bounded",
    "probe_points",
    "load_problem",
    "parse_problem",
    "problem_from_dict",
    "problem_to_dict",
]
