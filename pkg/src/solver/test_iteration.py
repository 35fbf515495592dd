"""
值迭代、残差与条件值的单元测试
"""
import numpy as np
import pytest

from src.config import PROBLEMS_DIR
from src.analytic import american_value, barrier_rate_value, dw_solution, dw_value, nonequality_values
from src.model.assumptions import AssumptionViolation, AssumptionWarning
from src.model.expression import constant
from src.model.problem import load_problem, problem_from_dict
from .g_operator import g_operator
from .grid import ValueFunction, make_grid
from .iteration import conditional_value, residual, value_iteration

DW = dict(K=1.0, sigma=0.2, mu=0.05, beta=0.1)
TOL = 1e-8


@pytest.fixture(scope="module")
def dw_problem():
    return load_problem(PROBLEMS_DIR / "dw.json")


@pytest.fixture(scope="module")
def dw_run(dw_problem):
    return value_iteration(dw_problem, tol=TOL)


class TestValueIteration:
    """测试 V^(n) 的单调迭代"""

    def test_first_iterate_is_g_theta(self, dw_problem):
        """测试 V^(1) 等于 G 作用于 g"""
        grid = make_grid(dw_problem, nodes=801)
        _, report = value_iteration(dw_problem, grid, max_n=3)
        direct = g_operator(dw_problem, dw_problem.payoff, grid)
        np.testing.assert_allclose(report.first_iterate.values, direct.values, rtol=1e-14, atol=1e-300)
        assert report.iterations == 3
        assert not report.converged
        assert "not_converged" in report.flags

    def test_fixed_point_after_first_iteration(self):
        """测试 G_θ ≤ g 时第二次迭代即不动：Ψ≡1/2 的例子"""
        p = load_problem(PROBLEMS_DIR / "psi_half.json")
        V, report = value_iteration(p, tol=TOL)
        assert report.converged
        assert report.iterations == 2
        np.testing.assert_allclose(V.values, 0.5, rtol=1e-10)

    def test_dupuis_wang_oracle(self, dw_run):
        """测试 V^(∞) 与闭式解在 [0.1, 3K] 上的误差不超过 1e-3"""
        V, report = dw_run
        assert report.converged
        xs = np.linspace(0.1, 3.0, 300)
        sol = dw_solution(lam=1.0, **DW)
        assert np.max(np.abs(V(xs) - dw_value(sol, xs))) <= 1e-3

    def test_monotone_in_n(self, dw_run):
        """测试每一步 V^(n+1) - V^(n) ≥ -tol"""
        _, report = dw_run
        assert report.monotone
        assert min(report.min_increments) >= -TOL

    def test_below_unconstrained_value(self, dw_run):
        """测试 V^(∞) ≤ w + 2tol"""
        V, _ = dw_run
        xs = V.grid.nodes[V.grid.nodes <= 5.0]
        assert np.all(V(xs) <= american_value(x=xs, **DW) + 2 * TOL)

    def test_rate_monotonicity(self, dw_problem, dw_run):
        """测试常数速率 λ₁ < λ₂ 时 V_{λ₁} ≤ V_{λ₂} + 2tol"""
        V_high, _ = dw_run
        V_low, _ = value_iteration(dw_problem.with_rate(constant(0.5)), V_high.grid, tol=TOL)
        assert np.all(V_low.values <= V_high.values + 2 * TOL)

    def test_grid_refinement(self, dw_problem):
        """测试网格加密一倍后相对闭式解的误差至少减半"""
        sol = dw_solution(lam=1.0, **DW)
        coarse = make_grid(dw_problem, nodes=1001)
        errors = []
        for grid in (coarse, coarse.refine()):
            V, _ = value_iteration(dw_problem, grid, tol=1e-10)
            xs = coarse.nodes[(coarse.nodes >= 0.1) & (coarse.nodes <= 3.0)]
            errors.append(np.max(np.abs(V(xs) - dw_value(sol, xs))))
        assert errors[1] <= errors[0] / 2

    def test_barrier_rate(self):
        """测试 θ=∞·1{x≤J} 截断后与闭式解相差不超过 2%，且值函数在 J 之后下降"""
        p = load_problem(PROBLEMS_DIR / "eg2_4.json")
        V, report = value_iteration(p, tol=TOL)
        assert report.converged
        xs = np.linspace(0.1, 5.0, 100)
        expected = barrier_rate_value(xs, J=1.0, sigma=np.sqrt(2.0), mu=0.0, beta=2.0)
        np.testing.assert_allclose(V(xs), expected, rtol=2e-2)
        assert V(2.0) < V(1.0)

    def test_sa3_failure_is_flagged(self):
        """测试 SA3 失败时发出警告并标记，V^(50)(0.5) 远小于 V_θ(0.5)"""
        p = load_problem(PROBLEMS_DIR / "eg2_5.json")
        with pytest.warns(AssumptionWarning):
            V, report = value_iteration(p, max_n=50)
        assert report.sa3_failed
        assert "sa3_failed" in report.flags
        assert V(0.0) == pytest.approx(0.5, rel=1e-12)
        assert V(0.5) < 0.05
        assert nonequality_values(0.5, beta=1.0).v_theta > 0.2

    def test_structural_failure_requires_acknowledgment(self):
        """测试 SA2 失败时拒绝求解，显式确认后继续并标记"""
        p = problem_from_dict({
            "vol": "x", "drift": "0", "payoff": "1", "rate": "1", "beta": 0.5,
            "interval": {"left": 0, "right": 1, "left_kind": "absorbing", "right_kind": "absorbing"},
        })
        with pytest.raises(AssumptionViolation):
            value_iteration(p, max_n=5)
        _, report = value_iteration(p, max_n=5, acknowledge=True)
        assert "assumptions_acknowledged" in report.flags

    def test_policy_acceleration(self, dw_problem):
        """测试 λ=1e4 时策略加速收敛且保持单调（普通迭代每步只收缩 1e-5）"""
        p = dw_problem.with_rate(constant(1e4))
        V, report = value_iteration(p, tol=TOL, max_n=2000, acceleration="policy")
        assert report.converged
        assert "policy_acceleration" in report.flags
        assert report.monotone
        xs = np.linspace(0.1, 3.0, 100)
        sol = dw_solution(lam=1e4, **DW)
        assert np.max(np.abs(V(xs) - dw_value(sol, xs))) <= 1e-2

    @pytest.mark.slow
    def test_large_rate_approaches_american(self, dw_problem):
        """测试 λ=1e4 时 4001 点对数网格上的 V^(∞) 与永久美式看涨的误差不超过 5e-3"""
        p = dw_problem.with_rate(constant(1e4))
        grid = make_grid(p)
        assert grid.nodes.size == 4001
        assert grid.nodes[0] == pytest.approx(0.02)
        assert grid.nodes[-1] == pytest.approx(50.0)
        V, report = value_iteration(p, grid, tol=TOL, acceleration="policy")
        assert report.converged
        xs = np.linspace(0.1, 3.0, 300)
        assert np.max(np.abs(V(xs) - american_value(x=xs, **DW))) <= 5e-3

    def test_report_json_has_no_wall_time(self, dw_run):
        """测试报告的 JSON 形式不含墙钟时间"""
        _, report = dw_run
        data = report.to_json()
        assert "wall_time" not in data
        assert data["iterations"] == report.iterations
        assert report.wall_time > 0


class TestResidual:
    """测试离散 ODE 残差"""

    def test_zero(self):
        """测试 g=0、V=0 时残差为 0"""
        p = problem_from_dict({
            "vol": "1", "drift": "0", "payoff": "0", "rate": "1", "beta": 0.5,
            "interval": {"left": "-inf", "right": "inf", "left_kind": "natural", "right_kind": "natural"},
        })
        grid = make_grid(p, nodes=101)
        assert residual(p, ValueFunction(grid, np.zeros(grid.size))) == 0.0

    def test_linear_payoff_identity(self):
        """测试 ρx 满足 ℒ(ρx) - (β+λ)ρx + λx = 0"""
        p = load_problem(PROBLEMS_DIR / "linear_payoff.json")
        grid = make_grid(p)
        rho = 1.0 / (1.0 + 0.1 - 0.05)
        assert residual(p, ValueFunction(grid, rho * grid.nodes)) <= 1e-8

    def test_dupuis_wang_oracle(self, dw_problem):
        """测试闭式解在 L 以外的残差不超过 1e-2·β·K"""
        sol = dw_solution(lam=1.0, **DW)
        grid = make_grid(dw_problem)
        V = ValueFunction(grid, dw_value(sol, grid.nodes))
        assert residual(dw_problem, V, kinks=[sol.L]) <= 1e-2 * 0.1 * 1.0


class TestConditionalValue:
    """测试 H = max(g, V)"""

    def test_dupuis_wang(self, dw_problem):
        """测试 H 在 (0,L] 上等于 V，在 [L,∞) 上等于 g"""
        sol = dw_solution(lam=1.0, **DW)
        grid = make_grid(dw_problem, nodes=801)
        V = ValueFunction(grid, dw_value(sol, grid.nodes))
        H = conditional_value(dw_problem, V)
        below = grid.nodes < sol.L
        np.testing.assert_array_equal(H.values[below], V.values[below])
        np.testing.assert_allclose(H.values[~below], grid.nodes[~below] - 1.0, rtol=1e-15)

    def test_below_payoff(self):
        """测试 V ≤ g 时 H = g"""
        p = load_problem(PROBLEMS_DIR / "psi_half.json")
        grid = make_grid(p, nodes=101)
        H = conditional_value(p, ValueFunction(grid, np.full(grid.size, 0.5)))
        np.testing.assert_allclose(H.values, 1.0 + grid.nodes)


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
