"""
时间变换系数的单元测试
"""
import math

import numpy as np
import pytest

from src.config import PROBLEMS_DIR
from src.model import Diffusion, Interval, ProblemSpec, load_problem, parse_expression
from .time_change import time_change_coefficients


def problem(rate: str, beta: float, vol: str = "1", drift: str = "0") -> ProblemSpec:
    return ProblemSpec(
        diffusion=Diffusion(parse_expression(vol), parse_expression(drift),
                            Interval(0.0, math.inf, "absorbing", "natural")),
        payoff=parse_expression("1+x"),
        rate=parse_expression(rate),
        beta=beta,
    )


class TestTimeChangeCoefficients:
    """测试 Y 的系数 a/√(β+θ)、b/(β+θ)"""

    def test_constant_rate(self):
        """测试常数速率 λ 时系数按 β+λ 缩放"""
        p = problem("2", 0.5, vol="0.2*x", drift="0.05*x")
        y = time_change_coefficients(p)
        xs = np.array([0.5, 1.0, 4.0])
        np.testing.assert_allclose(y.vol(xs), 0.2 * xs / math.sqrt(2.5), rtol=1e-15)
        np.testing.assert_allclose(y.drift(xs), 0.05 * xs / 2.5, rtol=1e-15)
        assert y.interval == p.interval

    def test_state_dependent_rate(self):
        """测试 θ=β/(1+2x)、a=1 时 a_Y = √((1+2x)/(β(2+2x)))"""
        beta = 0.3
        y = time_change_coefficients(problem("0.3/(1+2*x)", beta))
        xs = np.linspace(0.0, 10.0, 21)
        np.testing.assert_allclose(y.vol(xs), np.sqrt((1 + 2 * xs) / (beta * (2 + 2 * xs))), rtol=1e-12)
        np.testing.assert_array_equal(y.drift(xs), 0.0)
        assert y.is_natural_scale is False

    def test_barrier_rate_capped(self):
        """测试屏障区域的 +∞ 速率用 cap·β 截断"""
        p = load_problem(PROBLEMS_DIR / "eg2_4.json")
        y = time_change_coefficients(p, cap_factor=100.0)
        a = math.sqrt(2.0)
        assert y.vol(0.5) == pytest.approx(a * 0.5 / math.sqrt(2.0 + 200.0), rel=1e-14)
        assert y.vol(2.0) == pytest.approx(a * 2.0 / math.sqrt(2.0), rel=1e-14)


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
