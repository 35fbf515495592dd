"""
求解节点：值迭代得到 V^(∞) 与 G_θ
"""
from langchain_core.runnables import RunnableConfig

from src.model.assumptions import AssumptionViolation
from src.solver import BoundaryPolicyError, GridError, SingularSystemError, make_grid, value_iteration
from ..state import TheoremSubgraphState


def solve_node(
    state: TheoremSubgraphState,
    config: RunnableConfig | None = None,
) -> dict:
    """求解节点：按套件设置运行 value_iteration"""
    p = state['problem']
    s = state['settings'].resolved()
    name = p.name or '<unnamed>'
    try:
        grid = make_grid(p, nodes=s.nodes) if s.nodes else None
        V, report = value_iteration(p, grid, tol=s.tol, max_n=s.max_n)
    except (AssumptionViolation, BoundaryPolicyError, GridError, SingularSystemError) as exc:
        return {
            'error_messages': [f"求解失败: [{type(exc).__name__}] {exc}"],
            'execution_history': [f"求解: {name} 失败"],
        }

    history = [f"求解完成: {name}, 迭代 {report.iterations} 次, flags={list(report.flags)}"]
    state_update = {
        'value': V,
        'iteration': report,
        'execution_history': history,
    }
    if not report.converged:
        state_update['error_messages'] = [f"{name}: 值迭代在 {report.iterations} 次后没有收敛"]
    return state_update
