"""
自然尺度下的端点分类与 Kotani 条件

有限端点 ê：I_η(ê) = ∫ |m-ê| η(m)⁻² dm 有限则可达（按吸收处理），发散则为自然端点。
无穷端点：J_η = ∫ η⁻² 只作为诊断量报告；是否为进入端点由加权积分 ∫ |m| η⁻² 决定，
因为对 η 有界的扩散（例如布朗运动）J_η 总是发散，单凭它无法区分自然与进入。
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Literal

import numpy as np

from src.config import configurable
from src.model.problem import Diffusion, Interval, ProblemSpec, capped_rate
from src.model.quadrature import RefinementResult, integrate_toward
from .scale import to_natural_scale

Side = Literal["left", "right"]


class NotNaturalScaleError(ValueError):
    """输入的扩散不在自然尺度下（漂移不恒为 0）"""


@dataclass(frozen=True)
class EndpointClassification:
    side: str
    endpoint: float
    kind: str
    i_eta: RefinementResult | None = None
    j_eta: RefinementResult | None = None
    feller: RefinementResult | None = None

    @property
    def accessible(self) -> bool:
        return self.kind == "absorbing"

    def to_json(self) -> dict:
        out = {
            "side": self.side,
            "endpoint": self.endpoint if math.isfinite(self.endpoint) else str(self.endpoint),
            "kind": self.kind,
        }
        for key in ("i_eta", "j_eta", "feller"):
            result = getattr(self, key)
            if result is not None:
                out[key] = result.to_json()
        return out


def _interior_anchor(interval: Interval) -> float:
    c = interval.default_anchor()
    if interval.left < c < interval.right:
        return c
    return 0.5 * (interval.left + interval.right)


def _require_natural(diffusion: Diffusion) -> None:
    if not diffusion.is_natural_scale:
        raise NotNaturalScaleError("端点分类要求自然尺度下的扩散，请先调用 to_natural_scale")


def classify_endpoint(diffusion: Diffusion, side: Side) -> EndpointClassification:
    """按积分判据给端点分类；求积无法判定时 kind 为 unclassified"""
    _require_natural(diffusion)
    interval = diffusion.interval
    e = interval.endpoint(side)
    anchor = _interior_anchor(interval)
    eta = diffusion.vol

    def inv_sq(m):
        v = np.asarray(eta.raw(m), dtype=float)
        with np.errstate(divide="ignore"):
            return 1.0 / (v * v)

    if math.isfinite(e):
        i_eta = integrate_toward(lambda m: np.abs(m - e) * inv_sq(m), anchor, e)
        kind = {"converged": "absorbing", "diverged": "natural"}.get(i_eta.status, "unclassified")
        return EndpointClassification(side, e, kind, i_eta=i_eta)

    j_eta = integrate_toward(inv_sq, anchor, e)
    feller = integrate_toward(lambda m: np.abs(m) * inv_sq(m), anchor, e)
    kind = {"converged": "entrance", "diverged": "natural"}.get(feller.status, "unclassified")
    return EndpointClassification(side, e, kind, j_eta=j_eta, feller=feller)


def endpoint_integrals(diffusion: Diffusion) -> tuple[EndpointClassification, EndpointClassification]:
    """两端的分类结果（左、右）"""
    return classify_endpoint(diffusion, "left"), classify_endpoint(diffusion, "right")


@dataclass(frozen=True)
class KotaniVerdict:
    """一个端点上 Kotani 条件的结论

    satisfied 为 None 表示求积无法判定；有限端点 vacuous=True 且 satisfied=True
    """

    side: str
    endpoint: float
    satisfied: bool | None
    vacuous: bool = False
    integral: RefinementResult | None = None

    @property
    def status(self) -> str:
        if self.vacuous:
            return "vacuous"
        if self.satisfied is None:
            return "inconclusive"
        return "holds" if self.satisfied else "fails"

    def to_json(self) -> dict:
        out = {
            "side": self.side,
            "endpoint": self.endpoint if math.isfinite(self.endpoint) else str(self.endpoint),
            "status": self.status,
        }
        if self.integral is not None:
            out["integral"] = self.integral.to_json()
        return out


def kotani_condition(diffusion: Diffusion, rate: Callable, beta: float) -> tuple[KotaniVerdict, KotaniVerdict]:
    """在自然尺度扩散上逐端检查 ∫ |y|(β+θ(y))/a(y)² dy = ∞

    rate 为向量化的 θ；θ ≡ 0 也可以（此时不需要完整的 ProblemSpec）。
    """
    _require_natural(diffusion)
    interval = diffusion.interval
    anchor = _interior_anchor(interval)
    verdicts = []
    for side in ("left", "right"):
        e = interval.endpoint(side)
        if math.isfinite(e):
            verdicts.append(KotaniVerdict(side, e, True, vacuous=True))
            continue

        def integrand(y):
            a = np.asarray(diffusion.vol.raw(y), dtype=float)
            theta = np.asarray(rate(y), dtype=float)
            return np.abs(y) * (beta + theta) / (a * a)

        result = integrate_toward(integrand, anchor, e)
        satisfied = {"diverged": True, "converged": False}.get(result.status)
        verdicts.append(KotaniVerdict(side, e, satisfied, integral=result))
    return verdicts[0], verdicts[1]


@dataclass(frozen=True)
class KotaniReport:
    left: KotaniVerdict
    right: KotaniVerdict
    transformed: bool = False

    @property
    def satisfied(self) -> bool | None:
        """两端都成立为 True，任一端不成立为 False，否则 None"""
        values = (self.left.satisfied, self.right.satisfied)
        if False in values:
            return False
        if None in values:
            return None
        return True

    def to_json(self) -> dict:
        return {
            "satisfied": self.satisfied,
            "transformed": self.transformed,
            "left": self.left.to_json(),
            "right": self.right.to_json(),
        }


def kotani_check(p: ProblemSpec) -> KotaniReport:
    """Kotani 条件；问题不在自然尺度时先变换"""
    transformed = False
    if not p.diffusion.is_natural_scale:
        p, _ = to_natural_scale(p)
        transformed = True
    cap = configurable["rate_cap_factor"]
    left, right = kotani_condition(p.diffusion, lambda y: capped_rate(p, y, cap), p.beta)
    return KotaniReport(left, right, transformed)


__all__ = [
    "EndpointClassification",
    "KotaniVerdict",
    "KotaniReport",
    "NotNaturalScaleError",
    "classify_endpoint",
    "endpoint_integrals",
    "kotani_condition",
    "kotani_check",
]
