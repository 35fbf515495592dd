"""
断言节点：按假设检查 V^(∞) 与 G_θ 的形状
"""
from langchain_core.runnables import RunnableConfig

from src.shape.theorems import verify_problem
from ..state import TheoremSubgraphState


def verify_node(
    state: TheoremSubgraphState,
    config: RunnableConfig | None = None,
) -> dict:
    """断言节点：生成 ProblemVerdict"""
    verdict = verify_problem(
        state['problem'], state['annotation'], state['value'], state['iteration'], state['settings'],
    )
    violated = [c.name for c in verdict.violated]
    return {
        'verdict': verdict,
        'execution_history': [f"断言完成: {verdict.problem}, 违反={violated}"],
    }
