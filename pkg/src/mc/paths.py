"""
扩散路径模拟

指数布朗运动用对数空间的精确格式，其余用 Euler–Maruyama。
状态限制在闭区间内；越过吸收端点的路径在线性插值的穿越时刻停在端点上。
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from src.config import configurable
from src.model.problem import Diffusion, exponential_bm_parameters
from .rng import chunks, generator


class NonFiniteStateError(RuntimeError):
    """某条路径的状态变成 NaN 或 ±inf"""

    def __init__(self, path_id: int, value: float, time: float):
        self.path_id = path_id
        self.value = value
        self.time = time
        super().__init__(f"路径 {path_id} 在 t={time} 处状态为 {value}")


class Stepper:
    """一步推进：x -> x(t+dt)，同时处理端点"""

    def __init__(self, diffusion: Diffusion):
        self.diffusion = diffusion
        self.interval = diffusion.interval
        self.exact = exponential_bm_parameters(diffusion)
        self.absorbing = (self.interval.left_kind == "absorbing", self.interval.right_kind == "absorbing")

    @property
    def scheme(self) -> str:
        return "exact-log" if self.exact else "euler"

    def _increment(self, x: np.ndarray, z: np.ndarray, dt: float) -> np.ndarray:
        if self.exact:
            sigma, mu = self.exact
            return x * np.exp((mu - 0.5 * sigma * sigma) * dt + sigma * math.sqrt(dt) * z)
        with np.errstate(all="ignore"):
            a = np.broadcast_to(np.asarray(self.diffusion.vol.raw(x), dtype=float), x.shape)
            b = np.broadcast_to(np.asarray(self.diffusion.drift.raw(x), dtype=float), x.shape)
        return x + b * dt + a * math.sqrt(dt) * z

    def advance(self, x: np.ndarray, frozen: np.ndarray, z: np.ndarray, dt: float,
                t: float = 0.0, offset: int = 0) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """返回 (新状态, 本步新吸收的路径, 吸收时刻在本步内的比例)"""
        new = np.where(frozen, x, self._increment(x, z, dt))
        bad = ~np.isfinite(new)
        if bad.any():
            i = int(np.flatnonzero(bad)[0])
            raise NonFiniteStateError(offset + i, float(new[i]), t + dt)

        l, r = self.interval.closure
        absorbed = np.zeros(x.shape, dtype=bool)
        fraction = np.ones(x.shape)
        for side, end, crossed in (("left", l, new <= l), ("right", r, new >= r)):
            crossed &= ~frozen
            if not crossed.any():
                continue
            if self.absorbing[side == "right"]:
                with np.errstate(all="ignore"):
                    frac = np.clip((x - end) / (x - new), 0.0, 1.0)
                fraction = np.where(crossed, frac, fraction)
                absorbed |= crossed
            new = np.where(crossed, end, new)
        return new, absorbed, fraction


@dataclass(frozen=True)
class PathBundle:
    """路径样本：states[i, k] 为第 i 条路径在 k·dt 处的状态"""

    dt: float
    states: np.ndarray
    absorbed_at: np.ndarray
    seed: int
    stream: int = 0

    @property
    def n_paths(self) -> int:
        return int(self.states.shape[0])

    @property
    def n_steps(self) -> int:
        return int(self.states.shape[1] - 1)

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.n_steps + 1)

    @property
    def final(self) -> np.ndarray:
        return self.states[:, -1]


def check_start(diffusion: Diffusion, x0: float) -> None:
    if not diffusion.interval.contains(x0) or not math.isfinite(x0):
        raise ValueError(f"起点 {x0} 不在状态区间 {diffusion.interval.closure} 内")


def step_count(dt: float, horizon: float) -> int:
    if not dt > 0.0:
        raise ValueError(f"时间步长必须为正，实际 {dt}")
    if not horizon > 0.0:
        raise ValueError(f"时间范围必须为正，实际 {horizon}")
    return max(1, int(math.ceil(horizon / dt - 1e-9)))


def _simulate_block(stepper: Stepper, x0: np.ndarray, steps: int, dt: float, rng, chunk_size: int,
                    offset: int) -> tuple[np.ndarray, np.ndarray]:
    size = x0.size
    states = np.empty((size, steps + 1))
    states[:, 0] = x0
    absorbed_at = np.full(size, -1, dtype=np.int64)
    frozen = at_absorbing(stepper, x0)
    absorbed_at[frozen] = 0
    x = x0.copy()
    for k in range(steps):
        z = rng.standard_normal(chunk_size)[:size]
        x, hit, _ = stepper.advance(x, frozen, z, dt, k * dt, offset)
        absorbed_at[hit] = k + 1
        frozen |= hit
        states[:, k + 1] = x
    return states, absorbed_at


def at_absorbing(stepper: Stepper, x: np.ndarray) -> np.ndarray:
    l, r = stepper.interval.closure
    return (stepper.absorbing[0] & (x == l)) | (stepper.absorbing[1] & (x == r))


def simulate_paths(diffusion: Diffusion, x0: float, dt: float, horizon: float, n_paths: int,
                   seed: int, stream: int = 0) -> PathBundle:
    """在 [0, horizon] 上模拟 n_paths 条从 x0 出发的路径"""
    check_start(diffusion, x0)
    steps = step_count(dt, horizon)
    stepper = Stepper(diffusion)
    chunk_size = configurable["chunk_size"]
    states = np.empty((n_paths, steps + 1))
    absorbed_at = np.empty(n_paths, dtype=np.int64)
    for c in chunks(n_paths, chunk_size):
        rng = generator(seed, stream, c.index, "noise")
        block, hits = _simulate_block(stepper, np.full(c.size, float(x0)), steps, dt, rng, chunk_size, c.start)
        states[c.start:c.stop] = block
        absorbed_at[c.start:c.stop] = hits
    return PathBundle(dt, states, absorbed_at, seed, stream)


@dataclass(frozen=True)
class CoupledPaths:
    """Doeblin 耦合：相遇之前独立，相遇之后 upper 跟随 lower"""

    lower: PathBundle
    upper: PathBundle
    meet_index: np.ndarray

    @property
    def met(self) -> np.ndarray:
        return self.meet_index >= 0


def couple_step(stepper: Stepper, lower: np.ndarray, upper: np.ndarray, met: np.ndarray,
                frozen: tuple[np.ndarray, np.ndarray], z_lower: np.ndarray, z_upper: np.ndarray,
                dt: float, t: float, offset: int):
    """耦合对的一步；返回 (lower, upper, 本步新相遇, 两侧新吸收)"""
    new_lower, hit_lower, _ = stepper.advance(lower, frozen[0], z_lower, dt, t, offset)
    new_upper, hit_upper, _ = stepper.advance(upper, frozen[1] | met, z_upper, dt, t, offset)
    meeting = ~met & (new_lower >= new_upper)
    joined = met | meeting
    new_upper = np.where(joined, new_lower, new_upper)
    hit_upper = np.where(joined, hit_lower, hit_upper)
    return new_lower, new_upper, meeting, (hit_lower, hit_upper)


def doeblin_couple(diffusion: Diffusion, x: float, y: float, dt: float, horizon: float, n_paths: int,
                   seed: int, stream: int = 0) -> CoupledPaths:
    """从 x ≤ y 出发的耦合路径对；每个网格时刻 lower ≤ upper"""
    if x > y:
        raise ValueError(f"需要 x ≤ y，实际 x={x}, y={y}")
    check_start(diffusion, x)
    check_start(diffusion, y)
    steps = step_count(dt, horizon)
    stepper = Stepper(diffusion)
    chunk_size = configurable["chunk_size"]
    lower = np.empty((n_paths, steps + 1))
    upper = np.empty((n_paths, steps + 1))
    absorbed = (np.full(n_paths, -1, dtype=np.int64), np.full(n_paths, -1, dtype=np.int64))
    meet_index = np.full(n_paths, -1, dtype=np.int64)

    for c in chunks(n_paths, chunk_size):
        noise = generator(seed, stream, c.index, "noise")
        other = generator(seed, stream, c.index, "coupling")
        lo, up = np.full(c.size, float(x)), np.full(c.size, float(y))
        met = lo >= up
        meets = np.where(met, 0, -1)
        frozen = (at_absorbing(stepper, lo), at_absorbing(stepper, up))
        hits = (np.where(frozen[0], 0, -1), np.where(frozen[1], 0, -1))
        lower[c.start:c.stop, 0], upper[c.start:c.stop, 0] = lo, up
        for k in range(steps):
            z_lo = noise.standard_normal(chunk_size)[:c.size]
            z_up = other.standard_normal(chunk_size)[:c.size]
            lo, up, meeting, (h_lo, h_up) = couple_step(stepper, lo, up, met, frozen, z_lo, z_up, dt, k * dt, c.start)
            meets = np.where(meeting, k + 1, meets)
            met |= meeting
            hits = (np.where(h_lo, k + 1, hits[0]), np.where(h_up & (hits[1] < 0), k + 1, hits[1]))
            frozen = (frozen[0] | h_lo, frozen[1] | h_up)
            lower[c.start:c.stop, k + 1], upper[c.start:c.stop, k + 1] = lo, up
        meet_index[c.start:c.stop] = meets
        absorbed[0][c.start:c.stop], absorbed[1][c.start:c.stop] = hits

    return CoupledPaths(
        PathBundle(dt, lower, absorbed[0], seed, stream),
        PathBundle(dt, upper, absorbed[1], seed, stream),
        meet_index,
    )


__all__ = [
    "CoupledPaths",
    "NonFiniteStateError",
    "PathBundle",
    "Stepper",
    "at_absorbing",
    "check_start",
    "couple_step",
    "doeblin_couple",
    "simulate_paths",
    "step_count",
]
