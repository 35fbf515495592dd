"""
嵌套求积与发散判据的单元测试
"""
import math

import numpy as np
import pytest

from .quadrature import integrate_compact, integrate_toward, level_points


class TestLevelPoints:
    """测试推进点"""

    def test_finite_endpoint_shrinks_distance(self):
        """测试有限端点每级距离缩小 10 倍"""
        pts = level_points(1.0, 0.0, 3)
        np.testing.assert_allclose(pts, [0.5, 0.05, 0.005, 0.0005])

    def test_infinite_endpoint_grows_distance(self):
        """测试无穷端点每级距离放大 10 倍"""
        pts = level_points(0.0, -math.inf, 2)
        assert pts == [-1.0, -10.0, -100.0]


class TestIntegrateToward:
    """测试收敛、发散与无法判定三种结论"""

    def test_convergent_tail(self):
        """测试 ∫_1^∞ x⁻² = 1"""
        result = integrate_toward(lambda x: x ** -2.0, 1.0, math.inf)
        assert result.status == "converged"
        assert result.value == pytest.approx(1.0, rel=1e-4)

    def test_harmonic_tail_diverges(self):
        """测试 ∫_1^∞ 1/x 发散，见证区间延伸到无穷"""
        result = integrate_toward(lambda x: 1.0 / x, 1.0, math.inf)
        assert result.status == "diverged"
        assert result.witness[1] == math.inf
        assert not result.is_finite

    def test_singularity_at_finite_endpoint(self):
        """测试 ∫_0 x⁻² 在 0 处发散，见证区间包含 0"""
        result = integrate_toward(lambda x: x ** -2.0, 1.0, 0.0)
        assert result.status == "diverged"
        assert result.witness[0] == 0.0

    def test_integrable_singularity(self):
        """测试 ∫_0^1 x^(-1/2) = 2"""
        result = integrate_toward(lambda x: x ** -0.5, 1.0, 0.0)
        assert result.status == "converged"
        assert result.value == pytest.approx(2.0, rel=1e-5)

    def test_zero_integrand(self):
        """测试恒为 0 的被积函数"""
        result = integrate_toward(lambda x: np.zeros_like(x), 0.0, math.inf)
        assert result.status == "converged"
        assert result.value == 0.0

    def test_budget_exhausted_is_inconclusive(self):
        """测试预算内无法判定时报告 inconclusive 而不是 pass"""
        result = integrate_toward(lambda x: x ** -1.1, 1.0, math.inf, budget=3)
        assert result.status == "inconclusive"
        assert result.to_json()["status"] == "inconclusive"


class TestIntegrateCompact:
    """测试紧区间求积"""

    def test_polynomial(self):
        """测试 ∫_0^2 |x-1| = 1"""
        result = integrate_compact(lambda x: x - 1.0, 0.0, 2.0)
        assert result.value == pytest.approx(1.0, rel=1e-10)
        assert result.is_finite


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
