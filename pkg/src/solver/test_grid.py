"""
网格与值函数的单元测试
"""
import math

import numpy as np
import pytest

from src.config import PROBLEMS_DIR
from src.model.expression import DomainError
from src.model.problem import load_problem, problem_from_dict
from .grid import BoundaryPolicy, BoundaryPolicyError, Grid, GridError, ValueFunction, make_grid, parse_policy


def brownian_line(beta: float = 0.5, **extra):
    return problem_from_dict({
        "vol": "1", "drift": "0", "payoff": "abs(x)", "rate": "1", "beta": beta,
        "interval": {"left": "-inf", "right": "inf", "left_kind": "natural", "right_kind": "natural"},
        **extra,
    })


def exponential_bm(**extra):
    return problem_from_dict({
        "vol": "0.2*x", "drift": "0.05*x", "payoff": "x", "rate": "1", "beta": 0.1,
        "interval": {"left": 0, "right": "inf", "left_kind": "natural", "right_kind": "natural"},
        **extra,
    })


class TestMakeGrid:
    """测试截断默认值与问题文件提示"""

    def test_problem_file_hints(self):
        """测试 dw 的 4001 点对数网格 [0.02, 50]"""
        grid = make_grid(load_problem(PROBLEMS_DIR / "dw.json"))
        assert grid.size == 4001
        assert grid.spacing == "log"
        assert grid.bounds == pytest.approx((0.02, 50.0), rel=1e-12)
        assert grid.truncated == (True, True)
        ratios = grid.nodes[1:] / grid.nodes[:-1]
        np.testing.assert_allclose(ratios, ratios[0], rtol=1e-9)

    def test_default_half_line(self):
        """测试 (0,∞) 默认截断为 [x̄/50, 50x̄]"""
        grid = make_grid(exponential_bm())
        assert grid.size == 2001
        assert grid.bounds == pytest.approx((0.02, 50.0), rel=1e-12)

    def test_default_line(self):
        """测试 ℝ 上默认取均匀网格 0 ± 10·a/√β"""
        grid = make_grid(brownian_line(beta=0.5))
        assert grid.spacing == "uniform"
        half = 10.0 / math.sqrt(0.5)
        assert grid.bounds == pytest.approx((-half, half), rel=1e-12)

    def test_absorbing_endpoint_is_node(self):
        """测试吸收端点是精确节点，另一侧按 x̄ + 10a/√β 截断"""
        grid = make_grid(load_problem(PROBLEMS_DIR / "psi_half.json"))
        assert grid.nodes[0] == 0.0
        assert grid.truncated == (False, True)
        assert grid.nodes[-1] == pytest.approx(1.0 + 10.0 / math.sqrt(0.3), rel=1e-12)

    def test_log_grid_with_offset(self):
        """测试锚定在吸收端点的对数网格使用显式偏移"""
        grid = make_grid(load_problem(PROBLEMS_DIR / "eg2_5.json"))
        assert grid.nodes[0] == 0.0
        assert grid.nodes[1] == pytest.approx(1e-30)
        assert grid.nodes[-1] == pytest.approx(20.0)
        assert (np.diff(grid.nodes) > 0).all()

    def test_explicit_arguments_override_hints(self):
        """测试显式参数优先于 grid 提示"""
        grid = make_grid(load_problem(PROBLEMS_DIR / "dw.json"), nodes=101, upper=10.0)
        assert grid.size == 101
        assert grid.bounds == pytest.approx((0.02, 10.0))

    def test_too_few_nodes(self):
        """测试少于 16 个节点被拒绝"""
        with pytest.raises(GridError):
            make_grid(exponential_bm(), nodes=8)

    def test_log_grid_on_line_rejected(self):
        """测试 ℝ 上显式要求对数网格报错"""
        with pytest.raises(GridError):
            make_grid(brownian_line(), spacing="log")

    def test_refine_keeps_nodes(self):
        """测试加密后节点数为 2n-1 且包含原节点"""
        grid = make_grid(exponential_bm(), nodes=101)
        fine = grid.refine()
        assert fine.size == 201
        np.testing.assert_array_equal(fine.nodes[::2], grid.nodes)


class TestGridInvariants:
    """测试 Grid 的构造检查"""

    def test_not_increasing(self):
        """测试节点不递增时报错"""
        interval = exponential_bm().interval
        nodes = np.linspace(1.0, 2.0, 20)
        nodes[5] = nodes[4]
        with pytest.raises(GridError):
            Grid(nodes, "uniform", interval)

    def test_outside_interval(self):
        """测试节点超出状态区间时报错"""
        interval = exponential_bm().interval
        with pytest.raises(GridError):
            Grid(np.linspace(-1.0, 2.0, 20), "uniform", interval)


class TestBoundaryPolicy:
    """测试边界策略的解析"""

    def test_parse(self):
        """测试 linear / power / {"power": k}"""
        assert parse_policy("linear", "left") == BoundaryPolicy("linear")
        assert parse_policy("power", "left") == BoundaryPolicy("power")
        assert parse_policy({"power": -1}, "right") == BoundaryPolicy("power", -1.0)

    def test_unknown(self):
        """测试未知策略报错并带上端点"""
        with pytest.raises(BoundaryPolicyError) as info:
            parse_policy("quadratic", "right")
        assert info.value.side == "right"


class TestValueFunction:
    """测试插值与外推"""

    def setup_method(self):
        self.grid = make_grid(exponential_bm(), nodes=101, lower=1.0, upper=4.0)

    def test_interpolation_and_power_tail(self):
        """测试节点间线性插值，截断点外按幂律外推"""
        vf = ValueFunction(self.grid, self.grid.nodes ** 2, left=BoundaryPolicy("power", 2.0))
        assert vf(self.grid.nodes[3]) == pytest.approx(self.grid.nodes[3] ** 2)
        assert vf(0.5) == pytest.approx(0.25, rel=1e-12)
        mid = 0.5 * (self.grid.nodes[0] + self.grid.nodes[1])
        assert self.grid.nodes[0] ** 2 < vf(mid) < self.grid.nodes[1] ** 2

    def test_linear_tail(self):
        """测试右端线性外推"""
        vf = ValueFunction(self.grid, 3.0 * self.grid.nodes + 1.0)
        assert vf(10.0) == pytest.approx(31.0, rel=1e-10)

    def test_outside_interval(self):
        """测试状态区间外的求值报 DomainError"""
        vf = ValueFunction(self.grid, self.grid.nodes)
        with pytest.raises(DomainError):
            vf(-1.0)

    def test_shape_mismatch(self):
        """测试取值个数与网格不符时报错"""
        with pytest.raises(ValueError):
            ValueFunction(self.grid, np.zeros(3))


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
