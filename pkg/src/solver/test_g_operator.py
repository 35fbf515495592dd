"""
离散 G 算子的单元测试
"""
import math

import numpy as np
import pytest

from src.config import PROBLEMS_DIR
from src.analytic import local_time_value, q_roots
from src.model.problem import load_problem, problem_from_dict
from .g_operator import GOperator, SingularSystemError, g_operator, resolve_policies
from .grid import BoundaryPolicy, BoundaryPolicyError, make_grid


def problem(vol="1", drift="0", payoff="1", rate="1", beta=0.5, left="-inf", right="inf",
            kinds=("natural", "natural"), **extra):
    return problem_from_dict({
        "vol": vol, "drift": drift, "payoff": payoff, "rate": rate, "beta": beta,
        "interval": {"left": left, "right": right, "left_kind": kinds[0], "right_kind": kinds[1]},
        **extra,
    })


class TestGOperator:
    """测试一次 Poisson 到达的期望"""

    def test_constant_payoff_constant_rate(self):
        """测试 h≡c、θ≡λ 时 u ≡ cλ/(β+λ)"""
        p = problem(rate="3", beta=0.5)
        grid = make_grid(p, nodes=401)
        u = g_operator(p, np.full(grid.size, 2.0), grid)
        np.testing.assert_allclose(u.values, 2.0 * 3.0 / 3.5, rtol=1e-12)

    def test_absorbing_endpoint_value(self):
        """测试吸收端点 u(e) = Ψ_h(e)，且 θ=β/(1+2x)、g=1+x 时 G_θ ≡ 1/2"""
        p = load_problem(PROBLEMS_DIR / "psi_half.json")
        u = g_operator(p, p.payoff)
        assert u.grid.nodes[0] == 0.0
        assert u.values[0] == pytest.approx(0.5, rel=1e-14)
        np.testing.assert_allclose(u.values, 0.5, rtol=1e-10)

    def test_linear_payoff_exact(self):
        """测试指数布朗运动上 G(x) = λx/(β+λ-μ)，线性函数的差分没有截断误差"""
        p = load_problem(PROBLEMS_DIR / "linear_payoff.json")
        u = g_operator(p, p.payoff)
        rho = 1.0 / (1.0 + 0.1 - 0.05)
        np.testing.assert_allclose(u.values, rho * u.grid.nodes, rtol=1e-9)

    def test_local_time_expectation(self):
        """测试 β 很小时 G(h_φ) 接近无折现的 H_φ"""
        p = load_problem(PROBLEMS_DIR / "h_phi.json")
        u = g_operator(p, p.payoff)
        xs = np.linspace(-3.0, 3.0, 61)
        expected = local_time_value(xs, phi=1.15, lam=2.0).H
        np.testing.assert_allclose(u(xs), expected, atol=5e-3)

    def test_maximum_principle_with_upwinding(self):
        """测试漂移占优时启用迎风差分，0 ≤ h ≤ 1 推出 0 ≤ u ≤ λ/(β+λ)"""
        p = problem(vol="0.01", drift="1", payoff="1", rate="2", beta=0.5, left=-5, right=5,
                    kinds=("absorbing", "absorbing"))
        grid = make_grid(p, nodes=201, spacing="uniform")
        op = GOperator(p, grid)
        assert op.diagnostics()["upwinded_rows"] > 0
        h = 0.5 * (1.0 + np.sin(3.0 * grid.nodes))
        u = op.apply(h)
        assert u.min() >= -1e-14
        assert u.max() <= 2.0 / 2.5 + 1e-14

    def test_non_finite_input(self):
        """测试右端项非有限时报 SingularSystemError 并附带网格诊断"""
        p = problem()
        grid = make_grid(p, nodes=64)
        with pytest.raises(SingularSystemError) as info:
            g_operator(p, np.full(grid.size, np.nan), grid)
        assert info.value.diagnostics["nodes"] == 64


class TestBoundaryPolicies:
    """测试截断端点的边界条件"""

    def test_auto_power_exponent(self):
        """测试指数布朗运动左端自动取 α⁺_β"""
        p = load_problem(PROBLEMS_DIR / "dw.json")
        left, right = resolve_policies(p, make_grid(p, nodes=101))
        assert left.kind == "power"
        assert left.exponent == pytest.approx(q_roots(0.2, 0.05, 0.1).plus, rel=1e-14)
        assert left.exponent == pytest.approx(1.6085, abs=1e-4)
        assert right == BoundaryPolicy("linear")

    def test_explicit_power_exponent(self):
        """测试 eg2_4 右端使用声明的指数 -1"""
        p = load_problem(PROBLEMS_DIR / "eg2_4.json")
        _, right = resolve_policies(p, make_grid(p, nodes=101))
        assert right == BoundaryPolicy("power", -1.0)

    def test_absorbing_uses_dirichlet(self):
        """测试吸收端点总是 Dirichlet 条件"""
        p = load_problem(PROBLEMS_DIR / "eg2_2.json")
        left, _ = resolve_policies(p, make_grid(p, nodes=101))
        assert left.kind == "dirichlet"

    def test_power_rejected_on_line(self):
        """测试 ℝ 上的幂律条件报错"""
        p = problem()
        with pytest.raises(BoundaryPolicyError):
            resolve_policies(p, make_grid(p, nodes=64), left="power")

    def test_power_needs_exponent(self):
        """测试非指数布朗运动不能自动确定指数"""
        p = problem(vol="1+x", left=0, kinds=("natural", "natural"), payoff="x", scale=1)
        with pytest.raises(BoundaryPolicyError):
            resolve_policies(p, make_grid(p, nodes=64, spacing="log"), left="power")

    def test_dirichlet_on_truncated_endpoint(self):
        """测试截断端点不能使用 Dirichlet 条件"""
        p = problem()
        with pytest.raises(BoundaryPolicyError):
            resolve_policies(p, make_grid(p, nodes=64), right="dirichlet")

    def test_power_tail_is_exact_for_power_payoff(self):
        """测试 h=x^{α⁺} 在左端幂律条件下 G(h) = h（Q_β(α⁺)=0 时 u=h）"""
        p = load_problem(PROBLEMS_DIR / "dw.json")
        grid = make_grid(p, nodes=801, upper=2.0)
        alpha = q_roots(0.2, 0.05, 0.1).plus
        h = grid.nodes ** alpha
        u = g_operator(p, h, grid, right={"power": alpha})
        np.testing.assert_allclose(u.values, h, rtol=1e-4)


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
