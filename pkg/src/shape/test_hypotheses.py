"""
形状假设标注的单元测试
"""
import pytest

from src.config import PROBLEMS_DIR
from src.model.problem import load_problem, problem_from_dict
from .hypotheses import HypothesisMismatchError, annotate_hypotheses


def bundled(name):
    return load_problem(PROBLEMS_DIR / f"{name}.json")


def call_on_line(claims):
    return problem_from_dict({
        "name": "call_line", "vol": "1", "drift": "0", "payoff": "max(x, 0)", "rate": "2", "beta": 0.5,
        "interval": {"left": "-inf", "right": "inf", "left_kind": "natural", "right_kind": "natural"},
        "claims": claims,
    })


class TestAnnotateHypotheses:
    """测试 θ、Ψ 形状与尺度、Kotani 的数值标注"""

    def test_martingale_call(self):
        """测试无漂移指数布朗运动上的看涨收益：Ψ 递增且凸，Kotani 成立"""
        a = annotate_hypotheses(bundled("dw_martingale"))
        assert a.holds("theta_increasing", "psi_increasing", "psi_convex", "natural_scale", "kotani")
        assert a.psi_concave == "fails"

    def test_barrier_rate_not_increasing(self):
        """测试屏障速率 θ 不递增"""
        a = annotate_hypotheses(bundled("eg2_4"))
        assert a.theta_increasing == "fails"
        assert a.psi_convex == "fails"

    def test_drifted_problem_not_natural(self):
        """测试带漂移的例子不在自然尺度，Kotani 不作为假设"""
        a = annotate_hypotheses(bundled("eg2_2"))
        assert a.natural_scale == "fails"
        assert a.kotani == "fails"
        assert a.holds("theta_increasing", "psi_increasing")

    def test_constant_psi(self):
        """测试 Ψ≡1/2 同时凸和凹"""
        a = annotate_hypotheses(bundled("psi_half"))
        assert a.holds("psi_convex", "psi_concave", "natural_scale", "kotani")

    def test_claim_mismatch(self):
        """测试声明与数值检查冲突"""
        with pytest.raises(HypothesisMismatchError) as info:
            annotate_hypotheses(call_on_line(["psi_concave"]))
        assert info.value.claim == "psi_concave"
        a = annotate_hypotheses(call_on_line(["psi_concave"]), strict=False)
        assert a.psi_convex == "holds"

    def test_unknown_claim(self):
        """测试未知的假设声明"""
        with pytest.raises(ValueError, match="未知"):
            annotate_hypotheses(call_on_line(["psi_smooth"]))

    def test_json_lists_failed_witnesses(self):
        """测试 JSON 中附带不成立假设的证据"""
        data = annotate_hypotheses(bundled("eg2_4")).to_json()
        assert data["theta_increasing"] == "fails"
        assert any(w["property"] == "monotone-increasing" for w in data["witnesses"])


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
