"""
问题描述与 Ψ 计算的单元测试
"""
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from src.config import PROBLEMS_DIR
from .expression import constant, parse_expression
from .problem import (
    Diffusion,
    Interval,
    ProblemFileError,
    ProblemSpec,
    ProblemSpecError,
    capped_rate,
    is_bounded,
    load_problem,
    parse_problem,
    problem_from_dict,
    problem_to_dict,
    psi,
)


def make_problem(payoff="1+x", rate="1", beta=0.5, vol="1", drift="0",
                 interval=Interval(0.0, math.inf, "absorbing", "natural")) -> ProblemSpec:
    return ProblemSpec(
        diffusion=Diffusion(parse_expression(vol), parse_expression(drift), interval),
        payoff=parse_expression(payoff),
        rate=parse_expression(rate),
        beta=beta,
    )


class TestInterval:
    """测试状态区间的约束"""

    def test_left_must_be_below_right(self):
        """测试 ℓ < r"""
        with pytest.raises(ProblemSpecError):
            Interval(1.0, 1.0)

    def test_infinite_endpoint_not_absorbing(self):
        """测试无穷端点不能是吸收端点"""
        with pytest.raises(ProblemSpecError):
            Interval(0.0, math.inf, "natural", "absorbing")

    def test_unknown_kind(self):
        """测试未知端点类型"""
        with pytest.raises(ProblemSpecError):
            Interval(0.0, 1.0, "reflecting")

    def test_default_anchor(self):
        """测试默认锚点"""
        assert Interval(0.0, 2.0).default_anchor() == 1.0
        assert Interval(0.0, math.inf).default_anchor() == 1.0
        assert Interval(-math.inf, math.inf).default_anchor() == 0.0


class TestProblemSpec:
    """测试 ProblemSpec 的基本约束"""

    def test_beta_positive(self):
        """测试 β 必须为正"""
        with pytest.raises(ProblemSpecError):
            make_problem(beta=0.0)

    def test_payoff_nonnegative(self):
        """测试 g ≥ 0"""
        with pytest.raises(ProblemSpecError, match="非负"):
            make_problem(payoff="x-1")

    def test_rate_nonnegative(self):
        """测试 θ ≥ 0"""
        with pytest.raises(ProblemSpecError):
            make_problem(rate="x-1")

    def test_vol_positive_interior(self):
        """测试扩散系数在内部为正"""
        with pytest.raises(ProblemSpecError):
            make_problem(vol="x-1")

    def test_trivial_rate_rejected(self):
        """测试 θ ≡ 0 的平凡问题被拒绝"""
        with pytest.raises(ProblemSpecError):
            make_problem(rate="0")

    def test_infinite_rate_needs_barrier_form(self):
        """测试 θ 只能以屏障形式取 +∞"""
        with pytest.raises(ProblemSpecError):
            make_problem(rate="1/x", interval=Interval(0.0, 1.0, "absorbing", "absorbing"))

    def test_piecewise_must_cover(self):
        """测试分段函数必须覆盖状态区间"""
        data = {
            "vol": "1", "drift": "0", "beta": 1, "rate": "1",
            "payoff": {"piecewise": [{"from": 0, "to": 1, "expr": "x"}]},
            "interval": {"left": 0, "right": 2},
        }
        with pytest.raises(ProblemFileError, match="覆盖"):
            problem_from_dict(data)

    def test_with_beta_and_rate(self):
        """测试 with_beta / with_rate 返回新问题"""
        p = make_problem()
        q = p.with_beta(2.0).with_rate(constant(3.0))
        assert q.beta == 2.0
        assert q.rate(1.0) == 3.0
        assert p.beta == 0.5


class TestPsi:
    """测试 Ψ = gθ/(β+θ)"""

    def test_psi_half(self):
        """测试 g=1+x、θ=β/(1+2x) 时 Ψ ≡ 1/2"""
        p = make_problem(payoff="1+x", rate="0.3/(1+2*x)", beta=0.3)
        xs = np.linspace(0.0, 20.0, 101)
        np.testing.assert_allclose(psi(p, xs), 0.5, rtol=1e-14)

    def test_zero_rate(self):
        """测试 θ(x)=0 处 Ψ=0"""
        p = make_problem(rate="max(x-1, 0)")
        assert psi(p, 0.5) == 0.0

    def test_infinite_rate_gives_payoff(self):
        """测试 θ=+∞ 处 Ψ 取极限 g"""
        data = {
            "vol": "sqrt(2)*x", "drift": "0", "beta": 2, "payoff": "x",
            "rate": {"builtin": "indicator-barrier", "J": 1, "low": "inf", "high": 0},
            "interval": {"left": 0, "right": "inf", "left_kind": "natural", "right_kind": "natural"},
        }
        p = problem_from_dict(data)
        assert psi(p, 0.5) == 0.5
        assert psi(p, 2.0) == 0.0

    def test_constant_rate_scales_call_payoff(self):
        """测试常数速率时 Ψ = λg/(β+λ)"""
        p = make_problem(payoff="max(x-1, 0)", rate="1", beta=0.1)
        xs = np.array([0.5, 1.0, 2.0, 3.0])
        np.testing.assert_allclose(psi(p, xs), np.maximum(xs - 1.0, 0.0) / 1.1, rtol=1e-14)

    @settings(max_examples=100, deadline=None)
    @given(
        x=st.floats(0.0, 50.0),
        c=st.floats(1e-3, 1e3),
        beta=st.floats(1e-3, 10.0),
    )
    def test_rescaling_invariance_and_bound(self, x, c, beta):
        """测试 θ→cθ、β→cβ 时 Ψ 不变，且 Ψ ≤ g"""
        p = make_problem(payoff="1+x^2", rate="1+x", beta=beta)
        q = p.with_rate(parse_expression(f"{c!r}*(1+x)")).with_beta(c * beta)
        assert psi(p, x) <= p.payoff(x)
        assert psi(q, x) == pytest.approx(psi(p, x), rel=1e-12)


class TestCappedRate:
    """测试 +∞ 速率的截断"""

    def test_only_infinite_values_capped(self):
        """测试只替换 +∞，有限值保持不变"""
        data = {
            "vol": "1", "drift": "0", "beta": 2, "payoff": "x",
            "rate": {"builtin": "indicator-barrier", "J": 1, "low": "inf", "high": 5e6},
            "interval": {"left": 0, "right": "inf", "left_kind": "absorbing", "right_kind": "natural"},
        }
        p = problem_from_dict(data)
        np.testing.assert_array_equal(capped_rate(p, np.array([0.5, 2.0]), 1e4), [2e4, 5e6])


class TestIsBounded:
    """测试有界性判定"""

    def test_bounded_and_unbounded(self):
        """测试有界与无界收益"""
        interval = Interval(0.0, math.inf)
        assert is_bounded(parse_expression("x/(1+x)").bind(interval.closure), interval)
        assert not is_bounded(parse_expression("x").bind(interval.closure), interval)

    @pytest.mark.parametrize("text", ["log(1+x)", "x^0.3", "sqrt(x)", "exp(x)", "x^2"])
    def test_slow_growth_is_unbounded(self, text):
        """测试缓慢增长的收益不会被判为有界"""
        interval = Interval(0.0, math.inf)
        assert not is_bounded(parse_expression(text).bind(interval.closure), interval)

    @pytest.mark.parametrize("text", ["exp(-x)", "1-exp(-x)", "min(x, 3)", "2"])
    def test_settled_tail_is_bounded(self, text):
        """测试尾部已经稳定的收益判为有界"""
        interval = Interval(0.0, math.inf)
        assert is_bounded(parse_expression(text).bind(interval.closure), interval)

    def test_both_tails_checked(self):
        """测试 ℝ 上两个方向的尾部都要稳定"""
        interval = Interval(-math.inf, math.inf)
        assert not is_bounded(parse_expression("log(1+abs(x))").bind(interval.closure), interval)
        assert is_bounded(parse_expression("exp(-x^2)").bind(interval.closure), interval)

    def test_declared_forms(self):
        """测试内置常数与分段常数直接判定"""
        p = load_problem(PROBLEMS_DIR / "eg2_5.json")
        assert is_bounded(p.payoff, p.interval)
        assert is_bounded(constant(3.0), Interval(0.0, math.inf))


class TestProblemFiles:
    """测试问题文件的读取与错误定位"""

    def test_missing_keys(self):
        """测试缺少必需键"""
        with pytest.raises(ProblemFileError, match="缺少必需的键"):
            parse_problem('{"drift": "0"}')

    def test_missing_keys_listed(self):
        """测试缺少的键逐个列出，并带上文件来源"""
        with pytest.raises(ProblemFileError) as info:
            parse_problem('{"drift": "0", "vol": "1"}', source="p.json")
        message = str(info.value)
        assert message.startswith("p.json: 缺少必需的键")
        for key in ("payoff", "rate", "beta", "interval"):
            assert f"'{key}'" in message
        with pytest.raises(ProblemFileError, match="缺少必需的键"):
            problem_from_dict({"drift": "0"}, source="p.json")

    def test_message_carries_position(self):
        """测试错误信息以 来源:行:列 开头"""
        with pytest.raises(ProblemFileError) as info:
            parse_problem('{\n  "drift": "0",\n  "vol": oops\n}', source="bad.json")
        assert str(info.value).startswith("bad.json:3:")

    def test_syntax_error_position(self):
        """测试 JSON 语法错误带行列号"""
        with pytest.raises(ProblemFileError) as info:
            parse_problem('{\n  "drift": "0",\n  "vol": oops\n}', source="bad.json")
        assert info.value.line == 3
        assert info.value.source == "bad.json"

    def test_bad_expression_names_key(self):
        """测试表达式错误指出出错的键"""
        data = {
            "vol": "1", "drift": "0", "beta": 1, "rate": "1", "payoff": "x +",
            "interval": {"left": 0, "right": 1},
        }
        with pytest.raises(ProblemFileError) as info:
            problem_from_dict(data, source="p.json")
        assert info.value.key == "payoff"

    def test_missing_file(self, tmp_path):
        """测试文件不存在"""
        with pytest.raises(ProblemFileError):
            load_problem(tmp_path / "nope.json")

    @pytest.mark.parametrize("name", [
        "dw", "dw_martingale", "eg2_2", "eg2_3", "eg2_4", "eg2_5", "exp_square", "h_phi", "linear_payoff", "psi_half",
    ])
    def test_bundled_problems_load(self, name):
        """测试随仓库分发的问题文件都能读取"""
        p = load_problem(PROBLEMS_DIR / f"{name}.json")
        assert p.name == name
        assert p.beta > 0

    def test_problem_to_dict_reloads(self, tmp_path):
        """测试序列化后可以重新读取"""
        p = load_problem(PROBLEMS_DIR / "eg2_5.json")
        path = tmp_path / "eg2_5.json"
        path.write_text(json.dumps(problem_to_dict(p)), encoding="utf-8")
        q = load_problem(path)
        xs = np.array([0.0, 0.5, 2.0])
        np.testing.assert_array_equal(q.rate(xs), p.rate(xs))
        np.testing.assert_array_equal(q.payoff(xs), p.payoff(xs))
        assert q.interval == p.interval


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
