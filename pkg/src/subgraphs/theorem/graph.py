"""
形状定理验证子图的构建函数。

该模块仅负责搭建节点与路由，不直接编译或运行。
"""
from langgraph.graph import StateGraph, END

from .state import TheoremSubgraphState
from .nodes import annotate_node, solve_node, verify_node
from .routes import route_after_annotate, route_after_solve


def build_theorem_graph() -> StateGraph[TheoremSubgraphState]:
    """返回未编译的验证子图 StateGraph。"""
    graph = StateGraph(TheoremSubgraphState)

    graph.add_node("annotate", annotate_node)
    graph.add_node("solve", solve_node)
    graph.add_node("verify", verify_node)

    graph.set_entry_point("annotate")

    graph.add_conditional_edges(
        "annotate",
        route_after_annotate,
        {
            "solve": "solve",
            END: END,
        },
    )

    graph.add_conditional_edges(
        "solve",
        route_after_solve,
        {
            "verify": "verify",
            END: END,
        },
    )

    graph.add_edge("verify", END)

    return graph
