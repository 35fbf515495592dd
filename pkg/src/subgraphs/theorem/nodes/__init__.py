"""
形状定理验证子图的节点实现
"""
from .annotate import annotate_node
from .solve import solve_node
from .verify import verify_node

__all__ = [
    "annotate_node",
    "solve_node",
    "verify_node",
]
