"""
平面标记的 Poisson 稀疏化

[0, horizon] × [0, z_max] 上的单位强度 Poisson 点 (u, z) 中，
z ≤ θ(X_u) 的点给出强度为 θ(X) 的事件。θ(X) 在每个时间步内取左端点的值。
共用同一组标记时，θ₁ ≤ θ₂ 的事件集合逐点包含于 θ₂ 的事件集合。

SpaceTimeMarks / thin_events 对已经模拟好的整条路径一次性稀疏化；估计量用
draw_step_marks / first_accepted 逐步生成同一个矩形的标记（每步一条 [t, t+dt) × [0, z_max]），
路径推进到哪里就稀疏化到哪里，不必保存整条路径。两者对同一组标记给出相同的首个事件时刻。
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from src.config import configurable
from .paths import PathBundle
from .rng import chunks, generator


class IntensityCapExceeded(RuntimeError):
    """路径上的 θ 超过了标记高度上限 z_max"""

    def __init__(self, z_max: float, observed: float):
        self.z_max = z_max
        self.observed = observed
        super().__init__(f"θ 取到 {observed}，超过标记上限 z_max={z_max}")


@dataclass(frozen=True)
class SpaceTimeMarks:
    """每条路径一组标记，按 CSR 存放：第 i 条路径的标记为 [offsets[i], offsets[i+1])，时间升序"""

    horizon: float
    z_max: float
    times: np.ndarray
    heights: np.ndarray
    offsets: np.ndarray
    seed: int
    stream: int = 0

    @property
    def n_paths(self) -> int:
        return int(self.offsets.size - 1)

    def counts(self) -> np.ndarray:
        return np.diff(self.offsets)

    def marks(self, path: int) -> tuple[np.ndarray, np.ndarray]:
        lo, hi = self.offsets[path], self.offsets[path + 1]
        return self.times[lo:hi], self.heights[lo:hi]

    @classmethod
    def generate(cls, horizon: float, z_max: float, n_paths: int, seed: int, stream: int = 0) -> "SpaceTimeMarks":
        if not (horizon > 0.0 and z_max > 0.0):
            raise ValueError(f"horizon 与 z_max 必须为正，实际 {horizon}, {z_max}")
        chunk_size = configurable["chunk_size"]
        times, heights, counts = [], [], []
        for c in chunks(n_paths, chunk_size):
            rng = generator(seed, stream, c.index, "marks")
            n = rng.poisson(horizon * z_max, size=chunk_size)[:c.size]
            total = int(n.sum())
            u = rng.uniform(0.0, horizon, size=total)
            z = rng.uniform(0.0, z_max, size=total)
            owner = np.repeat(np.arange(c.size), n)
            order = np.lexsort((u, owner))
            times.append(u[order])
            heights.append(z[order])
            counts.append(n)
        counts = np.concatenate(counts)
        offsets = np.concatenate([[0], np.cumsum(counts)])
        return cls(horizon, z_max, np.concatenate(times), np.concatenate(heights), offsets, seed, stream)


def thin_events(bundle: PathBundle, rate: Callable, marks: SpaceTimeMarks) -> list[np.ndarray]:
    """每条路径的事件时刻（升序）；rate 作用在状态数组上，返回非负强度"""
    if marks.n_paths != bundle.n_paths:
        raise ValueError(f"标记组数 {marks.n_paths} 与路径数 {bundle.n_paths} 不符")
    theta = np.asarray(rate(bundle.states), dtype=float)
    observed = float(np.max(theta))
    if observed > marks.z_max:
        raise IntensityCapExceeded(marks.z_max, observed)

    events = []
    for i in range(bundle.n_paths):
        u, z = marks.marks(i)
        inside = u < bundle.n_steps * bundle.dt
        u, z = u[inside], z[inside]
        k = np.minimum((u / bundle.dt).astype(np.int64), bundle.n_steps - 1)
        events.append(u[z <= theta[i, k]])
    return events


@dataclass(frozen=True)
class StepMarks:
    """一个时间步 [t, t+dt) 内的标记：owner 为所属路径，offset 为步内时刻"""

    owner: np.ndarray
    offset: np.ndarray
    height: np.ndarray


def draw_step_marks(rng: np.random.Generator, size: int, chunk_size: int, z_max: float, dt: float) -> StepMarks:
    """一个时间步内的标记，与 SpaceTimeMarks 在 [t, t+dt) × [0, z_max] 上的部分同分布"""
    n = rng.poisson(z_max * dt, size=chunk_size)[:size]
    total = int(n.sum())
    return StepMarks(
        np.repeat(np.arange(size), n),
        rng.uniform(0.0, dt, size=total),
        rng.uniform(0.0, z_max, size=total),
    )


def first_accepted(marks: StepMarks, theta: np.ndarray, eligible: np.ndarray) -> np.ndarray:
    """每条路径在本步内第一个被接受的标记的步内时刻，没有则为 +inf"""
    first = np.full(theta.shape, np.inf)
    if marks.owner.size:
        ok = eligible[marks.owner] & (marks.height <= theta[marks.owner])
        np.minimum.at(first, marks.owner[ok], marks.offset[ok])
    return first


__all__ = [
    "IntensityCapExceeded",
    "SpaceTimeMarks",
    "StepMarks",
    "draw_step_marks",
    "first_accepted",
    "thin_events",
]
