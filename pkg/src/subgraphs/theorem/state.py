"""
形状定理验证子图的State定义
"""
from operator import add
from typing import Annotated, Any

from typing_extensions import NotRequired, TypedDict


class TheoremSubgraphState(TypedDict):
    """单个问题的验证流程：annotate -> solve -> verify"""

    # 输入
    problem: Any  # ProblemSpec
    settings: Any  # SolveSettings

    # 各节点的产出
    annotation: NotRequired[Any]  # HypothesisAnnotation
    value: NotRequired[Any]  # ValueFunction
    iteration: NotRequired[Any]  # IterationReport
    verdict: NotRequired[Any]  # ProblemVerdict

    # 执行历史和错误追踪
    execution_history: Annotated[list[str], add]  # 记录已执行的步骤，使用add策略追加
    error_messages: Annotated[list[str], add]  # 记录错误信息，使用add策略追加
