"""
标准假设的数值检验

- SA1: 1/a² 与 |b|/a² 局部可积（内部紧集族，以及属于状态空间的吸收端点方向）
- SA2: 端点只能是自然端点或（可达即）吸收端点，且与声明的类型一致
- SA3: θ/a² 在内部紧集上可积；可达端点 e 处 ∫_e θ|s - s(e)|/(s' a²) 有限

每一项的结论为 pass / fail / inconclusive；fail 必须附带发散所在的子区间。
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Literal

import numpy as np

from src.config import configurable
from .expression import EvaluationError
from .problem import ProblemSpec, capped_rate, probe_points
from .quadrature import RefinementResult, integrate_compact, integrate_toward

CheckStatus = Literal["pass", "fail", "inconclusive"]
ASSUMPTIONS = ("SA1", "SA2", "SA3")
COMPACT_NODES = 33


class AssumptionWarning(UserWarning):
    """假设检验失败或无法判定，但调用方选择继续"""


class AssumptionViolation(ValueError):
    """问题不满足求解所需的标准假设"""

    def __init__(self, report: "AssumptionReport"):
        self.report = report
        failed = [f"{c.assumption}[{c.location}] {c.integral}" for c in report.checks if c.status == "fail"]
        super().__init__(f"问题 {report.problem or '<unnamed>'} 不满足标准假设: {'; '.join(failed)}")


@dataclass(frozen=True)
class AssumptionCheck:
    assumption: str
    status: CheckStatus
    integral: str
    location: str
    witness: tuple[float, float] | None = None
    value: float | None = None
    detail: str = ""

    def to_json(self) -> dict:
        out = {
            "assumption": self.assumption,
            "status": self.status,
            "integral": self.integral,
            "location": self.location,
        }
        if self.witness is not None:
            out["witness"] = [w if math.isfinite(w) else str(w) for w in self.witness]
        if self.value is not None:
            out["value"] = self.value if math.isfinite(self.value) else str(self.value)
        if self.detail:
            out["detail"] = self.detail
        return out


@dataclass(frozen=True)
class AssumptionReport:
    problem: str
    checks: tuple[AssumptionCheck, ...]
    kinds: tuple[str, str] = ("unclassified", "unclassified")
    classifications: tuple = field(default=(), compare=False)

    def status(self, assumption: str) -> CheckStatus:
        statuses = [c.status for c in self.checks if c.assumption == assumption]
        if "fail" in statuses:
            return "fail"
        if "inconclusive" in statuses:
            return "inconclusive"
        return "pass"

    @property
    def passed(self) -> bool:
        return all(self.status(a) == "pass" for a in ASSUMPTIONS)

    @property
    def failed(self) -> bool:
        return any(self.status(a) == "fail" for a in ASSUMPTIONS)

    @property
    def structural_failure(self) -> bool:
        """SA1 或 SA2 失败：离散格式本身没有意义"""
        return self.status("SA1") == "fail" or self.status("SA2") == "fail"

    @property
    def sa3_failed(self) -> bool:
        return self.status("SA3") == "fail"

    def failures(self) -> list[AssumptionCheck]:
        return [c for c in self.checks if c.status == "fail"]

    def to_json(self) -> dict:
        return {
            "problem": self.problem,
            "status": {a: self.status(a) for a in ASSUMPTIONS},
            "passed": self.passed,
            "kinds": {"left": self.kinds[0], "right": self.kinds[1]},
            "checks": [c.to_json() for c in self.checks],
            "classifications": [c.to_json() for c in self.classifications],
        }


def _from_refinement(assumption: str, integral: str, location: str, result: RefinementResult) -> AssumptionCheck:
    status: CheckStatus = {"converged": "pass", "diverged": "fail"}.get(result.status, "inconclusive")
    return AssumptionCheck(
        assumption, status, integral, location,
        witness=result.witness if status == "fail" else None,
        value=result.value,
        detail=result.reason,
    )


def _compact_checks(assumption: str, integral: str, f: Callable, p: ProblemSpec) -> list[AssumptionCheck]:
    edges = probe_points(p.interval, n=COMPACT_NODES)
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        try:
            piece = integrate_compact(f, float(lo), float(hi), n_pieces=1)
        except EvaluationError as exc:
            return [AssumptionCheck(assumption, "inconclusive", integral, "core", detail=str(exc))]
        if not piece.is_finite:
            return [AssumptionCheck(assumption, "fail", integral, "core", witness=(float(lo), float(hi)),
                                    value=math.inf, detail="紧子区间上的积分非有限")]
        total += piece.value
    return [AssumptionCheck(assumption, "pass", integral, "core", value=total)]


def _interior_anchor(p: ProblemSpec) -> float:
    c = p.interval.default_anchor()
    l, r = p.interval.closure
    return c if l < c < r else 0.5 * (l + r)


def _classify(p: ProblemSpec):
    """自然尺度下两端的分类；尺度函数失败时返回异常信息"""
    from src.transform import ScaleFunctionError, endpoint_integrals, to_natural_scale

    try:
        natural, smap = to_natural_scale(p)
    except ScaleFunctionError as exc:
        return None, None, exc
    return endpoint_integrals(natural.diffusion), smap, None


def _kind_check(side: str, declared: str, found) -> tuple[AssumptionCheck, str]:
    integral = "I_eta" if math.isfinite(found.endpoint) else "|m|/eta^2"
    result = found.i_eta if found.i_eta is not None else found.feller
    if found.kind == "unclassified":
        if declared == "unclassified":
            return AssumptionCheck("SA2", "inconclusive", integral, side, detail="端点类型无法判定"), declared
        return AssumptionCheck("SA2", "pass", integral, side, detail=f"求积无法判定，沿用声明的 {declared}"), declared
    if found.kind == "entrance" or declared == "entrance":
        return AssumptionCheck("SA2", "fail", integral, side, witness=result.witness or _near(found),
                               value=result.value, detail="进入端点不满足标准假设 2"), found.kind
    if declared not in ("unclassified", found.kind):
        return AssumptionCheck("SA2", "fail", integral, side, witness=result.witness or _near(found),
                               value=result.value, detail=f"声明为 {declared}，分类结果为 {found.kind}"), found.kind
    return AssumptionCheck("SA2", "pass", integral, side, value=result.value, detail=found.kind), found.kind


def _near(found) -> tuple[float, float]:
    e = found.endpoint
    if math.isinf(e):
        return (1e16, math.inf) if e > 0 else (-math.inf, -1e16)
    return (e, e)


def validate_problem(p: ProblemSpec) -> AssumptionReport:
    """数值检验 SA1–SA3"""
    checks: list[AssumptionCheck] = []
    cap = configurable["rate_cap_factor"]

    def inv_a2(x):
        a = np.asarray(p.vol.raw(x), dtype=float)
        return 1.0 / (a * a)

    def b_a2(x):
        return np.abs(np.asarray(p.drift.raw(x), dtype=float)) * inv_a2(x)

    def theta_a2(x):
        return capped_rate(p, x, cap) * inv_a2(x)

    # SA1
    checks += _compact_checks("SA1", "1/a^2", inv_a2, p)
    checks += _compact_checks("SA1", "|b|/a^2", b_a2, p)

    # SA2
    found, smap, error = _classify(p)
    kinds = [p.interval.left_kind, p.interval.right_kind]
    classifications: tuple = ()
    if error is not None:
        checks.append(AssumptionCheck("SA1", "fail", "b/a^2", "scale", witness=error.where, detail=str(error)))
        checks.append(AssumptionCheck("SA2", "inconclusive", "I_eta", "both", detail="尺度函数不可用"))
    else:
        classifications = found
        for i, side in enumerate(("left", "right")):
            check, kinds[i] = _kind_check(side, kinds[i], found[i])
            checks.append(check)

    anchor = _interior_anchor(p)
    for i, side in enumerate(("left", "right")):
        if kinds[i] != "absorbing":
            continue
        e = p.interval.endpoint(side)
        for label, f in (("1/a^2", inv_a2), ("|b|/a^2", b_a2)):
            try:
                result = integrate_toward(f, anchor, e)
            except EvaluationError as exc:
                checks.append(AssumptionCheck("SA1", "inconclusive", label, side, detail=str(exc)))
                continue
            checks.append(_from_refinement("SA1", label, side, result))

    # SA3
    checks += _compact_checks("SA3", "theta/a^2", theta_a2, p)
    for i, side in enumerate(("left", "right")):
        if kinds[i] != "absorbing" or smap is None:
            continue
        e = p.interval.endpoint(side)
        s_e = smap.image.endpoint(side)

        def endpoint_integrand(x, s_e=s_e):
            s = np.asarray(smap.s.raw(x), dtype=float)
            slope = np.asarray(smap.s_prime.raw(x), dtype=float)
            return theta_a2(x) * np.abs(s - s_e) / slope

        result = integrate_toward(endpoint_integrand, anchor, e)
        checks.append(_from_refinement("SA3", "theta|s-s(e)|/(s' a^2)", side, result))

    return AssumptionReport(
        problem=p.name,
        checks=tuple(checks),
        kinds=(kinds[0], kinds[1]),
        classifications=classifications,
    )


__all__ = [
    "AssumptionCheck",
    "AssumptionReport",
    "AssumptionViolation",
    "AssumptionWarning",
    "validate_problem",
]
