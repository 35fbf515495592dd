"""
形状定理的假设标注

每条假设给出 holds / fails / borderline；borderline 表示违反量落在容差之内，
这类问题不参加硬断言。问题文件里的 claims 与数值结论冲突时抛出 HypothesisMismatchError。
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Literal

import numpy as np

from src.config import configurable
from src.model.problem import ProblemSpec, capped_rate, probe_points, psi
from src.transform import kotani_check
from .detectors import ShapeReport, check_concave, check_convex, check_monotone

Status = Literal["holds", "fails", "borderline", "inconclusive"]

# claims 词汇，与标注字段同名
CLAIMS = ("theta_increasing", "psi_increasing", "psi_convex", "psi_concave", "natural_scale", "kotani")


class HypothesisMismatchError(ValueError):
    """问题声明满足某条假设，但数值检查不成立"""

    def __init__(self, problem: str, claim: str, status: str):
        self.problem = problem
        self.claim = claim
        self.status = status
        super().__init__(f"{problem}: 声明 {claim}，数值检查结果为 {status}")


@dataclass(frozen=True)
class HypothesisAnnotation:
    problem: str
    theta_increasing: Status
    psi_increasing: Status
    psi_convex: Status
    psi_concave: Status
    natural_scale: Status
    kotani: Status
    witnesses: tuple[ShapeReport, ...] = ()

    def holds(self, *names: str) -> bool:
        return all(getattr(self, n) == "holds" for n in names)

    def borderline(self, *names: str) -> bool:
        return any(getattr(self, n) in ("borderline", "inconclusive") for n in names)

    def to_json(self) -> dict[str, Any]:
        out = {name: getattr(self, name) for name in CLAIMS}
        out["problem"] = self.problem
        failed = [r.to_json() for r in self.witnesses if r.status != "holds"]
        if failed:
            out["witnesses"] = failed
        return out


def _probe(p: ProblemSpec, n: int | None) -> np.ndarray:
    n = configurable["probe_nodes"] if n is None else n
    return probe_points(p.interval, n=n, include_endpoints=True)


def _kotani_status(p: ProblemSpec) -> Status:
    if not p.diffusion.is_natural_scale:
        # 只在自然尺度下作为假设使用
        return "fails"
    report = kotani_check(p)
    return {True: "holds", False: "fails"}.get(report.satisfied, "inconclusive")


def annotate_hypotheses(p: ProblemSpec, tol: float | None = None, n: int | None = None,
                        strict: bool = True) -> HypothesisAnnotation:
    """θ、Ψ 的单调性与 Ψ 的凸/凹性、自然尺度、Kotani 条件

    strict=True 时检查问题的 claims，冲突则抛出 HypothesisMismatchError。
    """
    tol = configurable["shape_tol_analytic"] if tol is None else tol
    xs = _probe(p, n)
    theta = capped_rate(p, xs, configurable["rate_cap_factor"])
    effective = np.asarray(psi(p, xs), dtype=float)

    reports = (
        check_monotone((xs, theta), tol),
        check_monotone((xs, effective), tol),
        check_convex((xs, effective), tol),
        check_concave((xs, effective), tol),
    )
    annotation = HypothesisAnnotation(
        problem=p.name or "<unnamed>",
        theta_increasing=reports[0].status,
        psi_increasing=reports[1].status,
        psi_convex=reports[2].status,
        psi_concave=reports[3].status,
        natural_scale="holds" if p.diffusion.is_natural_scale else "fails",
        kotani=_kotani_status(p),
        witnesses=reports,
    )
    if strict:
        for claim in p.claims:
            if claim not in CLAIMS:
                raise ValueError(f"{annotation.problem}: 未知的假设声明 {claim!r}")
            status = getattr(annotation, claim)
            if status == "fails":
                raise HypothesisMismatchError(annotation.problem, claim, status)
    return annotation


__all__ = [
    "CLAIMS",
    "HypothesisAnnotation",
    "HypothesisMismatchError",
    "annotate_hypotheses",
]
