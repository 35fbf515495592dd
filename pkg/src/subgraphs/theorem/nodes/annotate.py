"""
标注节点：数值判断问题满足哪些形状假设
"""
from langchain_core.runnables import RunnableConfig

from src.shape.hypotheses import HypothesisMismatchError, annotate_hypotheses
from ..state import TheoremSubgraphState


def annotate_node(
    state: TheoremSubgraphState,
    config: RunnableConfig | None = None,
) -> dict:
    """标注节点：计算 θ、Ψ 的形状与自然尺度、Kotani 条件"""
    p = state['problem']
    name = p.name or '<unnamed>'
    try:
        annotation = annotate_hypotheses(p)
    except HypothesisMismatchError as exc:
        return {
            'error_messages': [f"假设声明不符: {exc}"],
            'execution_history': [f"标注: {name} 声明 {exc.claim} 不成立"],
        }
    except (ValueError, RuntimeError) as exc:
        return {
            'error_messages': [f"假设标注失败: [{type(exc).__name__}] {exc}"],
            'execution_history': [f"标注: {name} 失败"],
        }

    return {
        'annotation': annotation,
        'execution_history': [f"标注完成: {name}"],
    }
