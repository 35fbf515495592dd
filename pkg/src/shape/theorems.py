"""
形状定理的验证

对每个问题：标注假设 -> 值迭代 -> 按假设做断言。断言只在假设确实成立时才是硬断言；
假设不成立的问题（包括已知的形状反例）只记录观察到的形状，归入 not_applicable。
单个问题的流程由 src.subgraphs.theorem 的 LangGraph 子图执行。
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Literal, Sequence

import numpy as np

from src.config import configurable, worker_count
from src.model.problem import ProblemSpec, psi
from src.solver import IterationReport, ValueFunction
from .detectors import ShapeReport, check_concave, check_convex, check_monotone
from .hypotheses import HypothesisAnnotation

Outcome = Literal["passed", "violated", "not_applicable", "borderline", "recorded"]


@dataclass(frozen=True)
class SolveSettings:
    """套件里每个问题共用的求解与检测参数"""

    nodes: int | None = None
    tol: float | None = None
    max_n: int | None = None
    shape_tol: float | None = None

    def resolved(self) -> "SolveSettings":
        return SolveSettings(
            nodes=self.nodes,
            tol=configurable["tol"] if self.tol is None else self.tol,
            max_n=configurable["max_n"] if self.max_n is None else self.max_n,
            shape_tol=configurable["shape_tol_solver"] if self.shape_tol is None else self.shape_tol,
        )

    def to_json(self) -> dict[str, Any]:
        return {"nodes": self.nodes, "tol": self.tol, "max_n": self.max_n, "shape_tol": self.shape_tol}


@dataclass(frozen=True)
class TheoremCheck:
    name: str
    outcome: Outcome
    detail: str = ""
    report: ShapeReport | None = None

    def to_json(self) -> dict[str, Any]:
        out: dict[str, Any] = {"name": self.name, "outcome": self.outcome}
        if self.detail:
            out["detail"] = self.detail
        if self.report is not None:
            out["report"] = self.report.to_json()
        return out


@dataclass(frozen=True)
class ProblemVerdict:
    problem: str
    annotation: HypothesisAnnotation | None
    checks: tuple[TheoremCheck, ...] = ()
    observed: tuple[ShapeReport, ...] = ()
    errors: tuple[str, ...] = ()
    spec: dict[str, Any] = field(default_factory=dict, compare=False)

    @property
    def violated(self) -> tuple[TheoremCheck, ...]:
        return tuple(c for c in self.checks if c.outcome == "violated")

    @property
    def passed(self) -> bool:
        return not self.errors and not self.violated

    def check(self, name: str) -> TheoremCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def shape(self, prop: str) -> ShapeReport:
        for r in self.observed:
            if r.property == prop:
                return r
        raise KeyError(prop)

    def to_json(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "problem": self.problem,
            "passed": self.passed,
            "hypotheses": self.annotation.to_json() if self.annotation else None,
            "checks": [c.to_json() for c in self.checks],
            "observed": [r.to_json() for r in self.observed],
        }
        if self.errors:
            out["errors"] = list(self.errors)
        # 失败时附上完整问题，便于复现
        if not self.passed and self.spec:
            out["spec"] = self.spec
        return out


@dataclass(frozen=True)
class SuiteReport:
    name: str
    verdicts: tuple[ProblemVerdict, ...]
    settings: SolveSettings = SolveSettings()

    @property
    def passed(self) -> bool:
        return all(v.passed for v in self.verdicts)

    def verdict(self, problem: str) -> ProblemVerdict:
        for v in self.verdicts:
            if v.problem == problem:
                return v
        raise KeyError(problem)

    def to_json(self) -> dict[str, Any]:
        return {
            "suite": self.name,
            "passed": self.passed,
            "settings": self.settings.to_json(),
            "problems": [v.to_json() for v in self.verdicts],
        }


def _applies(annotation: HypothesisAnnotation, *names: str) -> Outcome | None:
    """假设都成立返回 None；有 borderline 返回 borderline；否则 not_applicable"""
    if annotation.holds(*names):
        return None
    if annotation.borderline(*names) and not any(getattr(annotation, n) == "fails" for n in names):
        return "borderline"
    return "not_applicable"


def _shape_check(name: str, hypotheses: tuple[str, ...], annotation: HypothesisAnnotation,
                 report: ShapeReport) -> TheoremCheck:
    gate = _applies(annotation, *hypotheses)
    if gate is not None:
        return TheoremCheck(name, gate, "假设不满足: " + ", ".join(hypotheses), report)
    return TheoremCheck(name, "passed" if report.holds else "violated", "", report)


def verify_problem(
    p: ProblemSpec,
    annotation: HypothesisAnnotation,
    V: ValueFunction,
    iteration: IterationReport,
    settings: SolveSettings | None = None,
) -> ProblemVerdict:
    """按假设对 V^(∞) 与 G_θ 做形状断言"""
    s = (settings or SolveSettings()).resolved()
    tol, shape_tol = s.tol, s.shape_tol
    G = iteration.first_iterate
    x = V.grid.nodes
    g = np.asarray(p.payoff(x), dtype=float)
    observed = (check_monotone(V, shape_tol), check_convex(V, shape_tol), check_concave(V, shape_tol))
    checks: list[TheoremCheck] = []

    # θ、Ψ 递增 ⇒ V^(∞) 递增
    checks.append(_shape_check("monotone", ("theta_increasing", "psi_increasing"), annotation, observed[0]))
    # Ψ 递增、θ 不递增：只记录，不断言
    if annotation.psi_increasing == "holds" and annotation.theta_increasing == "fails":
        checks.append(TheoremCheck("monotone_without_theta", "recorded", "θ 不递增", observed[0]))

    # 自然尺度 + Kotani + Ψ 凸 ⇒ V^(∞) 凸且 G_θ ≥ Ψ
    convex_hyp = ("natural_scale", "kotani", "psi_convex")
    checks.append(_shape_check("convex", convex_hyp, annotation, observed[1]))
    gate = _applies(annotation, *convex_hyp)
    if gate is None:
        # 截断端点上的外推节点不参与比较
        gap = (G.values - np.asarray(psi(p, x), dtype=float))[1:-1]
        worst = int(np.argmin(gap))
        ok = gap[worst] >= -2.0 * tol
        checks.append(TheoremCheck(
            "g_theta_above_psi", "passed" if ok else "violated",
            f"min(G_θ - Ψ) = {gap[worst]:.3e} at x = {x[1:-1][worst]:.6g}",
        ))
    else:
        checks.append(TheoremCheck("g_theta_above_psi", gate, "假设不满足"))

    # 自然尺度 + Kotani + Ψ 凹 ⇒ 第一次迭代后不动且 V^(∞) 凹
    concave_hyp = ("natural_scale", "kotani", "psi_concave")
    gate = _applies(annotation, *concave_hyp)
    if gate is None:
        settled = len(iteration.increments) >= 2 and iteration.increments[1] <= tol
        checks.append(TheoremCheck(
            "concave_fixed_point", "passed" if settled and observed[2].holds else "violated",
            f"iterations={iteration.iterations}", observed[2],
        ))
    else:
        checks.append(TheoremCheck("concave_fixed_point", gate, "假设不满足", observed[2]))

    # 数值上 G_θ ≤ g ⇒ V^(∞) = G_θ
    if float(np.max(G.values - g)) <= tol:
        settled = len(iteration.increments) >= 2 and iteration.increments[1] <= tol
        checks.append(TheoremCheck(
            "g_theta_below_g_fixed_point", "passed" if settled else "violated",
            f"iterations={iteration.iterations}",
        ))

    return ProblemVerdict(p.name or "<unnamed>", annotation, tuple(checks), observed)


def verify_shape_theorems(
    problems: Sequence[ProblemSpec],
    settings: SolveSettings | None = None,
    *,
    name: str = "shape",
    callbacks: list | None = None,
) -> SuiteReport:
    """逐个问题运行 annotate -> solve -> verify，问题之间并行"""
    from src.subgraphs.theorem import build_theorem_graph, initial_state, verdict_from_state

    s = settings or SolveSettings()
    graph = build_theorem_graph().compile()
    inputs = [initial_state(p, s) for p in problems]
    config: dict[str, Any] = {"max_concurrency": worker_count()}
    if callbacks:
        config["callbacks"] = callbacks
    states = graph.batch(inputs, config=config) if inputs else []
    return SuiteReport(name, tuple(verdict_from_state(state) for state in states), s)


__all__ = [
    "ProblemVerdict",
    "SolveSettings",
    "SuiteReport",
    "TheoremCheck",
    "verify_problem",
    "verify_shape_theorems",
]
