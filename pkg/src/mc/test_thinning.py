"""
平面标记稀疏化的单元测试
"""
import math

import numpy as np
import pytest
from scipy import stats

from src.model.expression import parse_expression
from src.model.problem import Diffusion, Interval
from .paths import simulate_paths
from .thinning import IntensityCapExceeded, SpaceTimeMarks, draw_step_marks, first_accepted, thin_events

BM = Diffusion(parse_expression("1"), parse_expression("0"), Interval(-math.inf, math.inf, "natural", "natural"))


def poisson_chisquare(counts: np.ndarray, mean: float, top: int) -> float:
    """计数直方图对 Poisson(mean) 的卡方检验 p 值，最后一格合并尾部"""
    observed = np.array([np.sum(counts == k) for k in range(top)] + [np.sum(counts >= top)])
    pmf = stats.poisson.pmf(np.arange(top), mean)
    expected = counts.size * np.append(pmf, 1.0 - pmf.sum())
    return stats.chisquare(observed, expected).pvalue


class TestSpaceTimeMarks:
    """测试 [0,horizon]×[0,z_max] 上的标记"""

    def setup_method(self):
        self.marks = SpaceTimeMarks.generate(horizon=2.0, z_max=1.5, n_paths=10_000, seed=21)

    def test_counts_are_poisson(self):
        """测试每条路径的标记数服从 Poisson(horizon·z_max)"""
        assert poisson_chisquare(self.marks.counts(), 3.0, 9) > 1e-3

    def test_uniform_on_rectangle(self):
        """测试标记在矩形上均匀分布"""
        assert stats.kstest(self.marks.times / 2.0, "uniform").pvalue > 1e-3
        assert stats.kstest(self.marks.heights / 1.5, "uniform").pvalue > 1e-3

    def test_sorted_within_path(self):
        """测试每条路径内的标记按时间升序"""
        for i in range(100):
            u, _ = self.marks.marks(i)
            assert np.all(np.diff(u) >= 0)

    def test_reproducible(self):
        """测试相同种子给出相同标记"""
        again = SpaceTimeMarks.generate(horizon=2.0, z_max=1.5, n_paths=10_000, seed=21)
        np.testing.assert_array_equal(again.times, self.marks.times)
        np.testing.assert_array_equal(again.offsets, self.marks.offsets)


class TestThinEvents:
    """测试稀疏化得到的事件"""

    def setup_method(self):
        self.bundle = simulate_paths(BM, 0.0, 0.01, 1.5, 10_000, seed=22)
        self.marks = SpaceTimeMarks.generate(horizon=1.5, z_max=3.5, n_paths=10_000, seed=23)

    def test_zero_rate(self):
        """测试 θ≡0 时没有事件"""
        events = thin_events(self.bundle, lambda s: np.zeros_like(s), self.marks)
        assert all(e.size == 0 for e in events)

    def test_constant_rate_counts(self):
        """测试 θ≡λ 时事件数服从 Poisson(λ·horizon)"""
        events = thin_events(self.bundle, lambda s: np.full_like(s, 2.0), self.marks)
        counts = np.array([e.size for e in events])
        assert poisson_chisquare(counts, 3.0, 9) > 1e-3

    def test_inclusion_under_shared_marks(self):
        """测试 θ₁ ≤ θ₂ 时 θ₁ 的事件集合包含于 θ₂ 的事件集合"""
        low = thin_events(self.bundle, lambda s: 1.0 + np.tanh(s), self.marks)
        high = thin_events(self.bundle, lambda s: 1.5 + np.tanh(s) + 0.5 * np.abs(np.sin(s)), self.marks)
        for a, b in zip(low, high):
            assert np.isin(a, b).all()
            assert np.all(np.diff(a) >= 0)
        assert sum(b.size for b in high) > sum(a.size for a in low)

    def test_cap_exceeded(self):
        """测试 θ 超过 z_max 时报错"""
        with pytest.raises(IntensityCapExceeded) as info:
            thin_events(self.bundle, lambda s: np.full_like(s, 10.0), self.marks)
        assert info.value.z_max == 3.5
        assert info.value.observed == 10.0


class TestStepMarks:
    """测试逐步生成的标记与整条路径稀疏化一致"""

    def test_first_event_matches_thin_events(self):
        """测试把逐步标记拼成 SpaceTimeMarks 后，thin_events 的首个事件与 first_accepted 逐位相同"""
        n, dt, z_max = 2000, 0.01, 3.5
        bundle = simulate_paths(BM, 0.0, dt, 1.5, n, seed=24)
        rate = lambda s: 1.0 + np.minimum(np.abs(s), 2.0)
        rng = np.random.default_rng(25)

        streaming = np.full(n, np.inf)
        owners, times, heights = [], [], []
        for k in range(bundle.n_steps):
            step = draw_step_marks(rng, n, n, z_max, dt)
            theta = rate(bundle.states[:, k])
            first = first_accepted(step, theta, np.isinf(streaming))
            hit = np.isfinite(first)
            streaming[hit] = k * dt + first[hit]
            owners.append(step.owner)
            times.append(k * dt + step.offset)
            heights.append(step.height)

        owner, u, z = np.concatenate(owners), np.concatenate(times), np.concatenate(heights)
        order = np.lexsort((u, owner))
        offsets = np.concatenate([[0], np.cumsum(np.bincount(owner, minlength=n))])
        marks = SpaceTimeMarks(bundle.n_steps * dt, z_max, u[order], z[order], offsets, seed=25)
        events = thin_events(bundle, rate, marks)
        whole = np.array([e[0] if e.size else np.inf for e in events])

        np.testing.assert_array_equal(whole, streaming)
        assert np.isfinite(streaming).mean() > 0.5


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
