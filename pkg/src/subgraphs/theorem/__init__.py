"""
形状定理验证子图模块
"""
from src.model.problem import ProblemSpec, problem_to_dict
from src.shape.theorems import ProblemVerdict, SolveSettings
from .graph import build_theorem_graph
from .state import TheoremSubgraphState


def initial_state(p: ProblemSpec, settings: SolveSettings) -> TheoremSubgraphState:
    return {
        'problem': p,
        'settings': settings,
        'execution_history': [],
        'error_messages': [],
    }


def verdict_from_state(state: dict) -> ProblemVerdict:
    """子图终态 -> ProblemVerdict；提前结束的问题带上错误信息"""
    p = state['problem']
    verdict = state.get('verdict')
    spec = problem_to_dict(p)
    if verdict is not None and not state.get('error_messages'):
        return ProblemVerdict(verdict.problem, verdict.annotation, verdict.checks, verdict.observed, (), spec)
    return ProblemVerdict(
        p.name or '<unnamed>',
        state.get('annotation'),
        verdict.checks if verdict else (),
        verdict.observed if verdict else (),
        tuple(state.get('error_messages', [])),
        spec,
    )


__all__ = ["TheoremSubgraphState", "build_theorem_graph", "initial_state", "verdict_from_state"]
