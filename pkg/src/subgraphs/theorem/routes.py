"""
形状定理验证子图的路由函数
"""
from langgraph.graph import END

from .state import TheoremSubgraphState


def route_after_annotate(state: TheoremSubgraphState) -> str:
    """假设标注失败（声明与数值不符）时直接结束"""
    if state.get('error_messages'):
        return END
    return 'solve'


def route_after_solve(state: TheoremSubgraphState) -> str:
    """求解失败时结束，否则进入断言"""
    if state.get('error_messages'):
        return END
    return 'verify'
