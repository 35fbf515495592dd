"""
流式蒙特卡洛估计量

- estimate_G: 直接估计 E[e^{-βT₁} g(X_{T₁})]，以及时间变换后的 E[Ψ(Y_T)]，T ~ Exp(1)
- evaluate_policy: 阈值策略"第一个 X ≥ L 的事件处停止"的值
- coupled_first_arrival: Doeblin 耦合加共用标记下两个起点的 G 估计

路径按块生成，块之间互不依赖；部分和按块序号合并，结果与线程数无关。
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from src.config import configurable, worker_count
from src.model.assumptions import AssumptionReport, AssumptionViolation, validate_problem
from src.model.problem import ProblemSpec, capped_rate, probe_points, psi
from src.transform.time_change import time_change_coefficients
from .paths import Stepper, at_absorbing, check_start, couple_step, step_count
from .rng import Chunk, chunks, generator
from .thinning import IntensityCapExceeded, draw_step_marks, first_accepted

MAX_CAP_DOUBLINGS = 16


@dataclass(frozen=True)
class Estimate:
    mean: float
    std_error: float
    n_paths: int
    seed: int
    flags: tuple[str, ...] = ()
    unfinished_mass: float = 0.0
    bias_bound: float = 0.0
    label: str = field(default="", compare=False)

    @property
    def error_budget(self) -> float:
        """3 倍标准误加上未完成路径的偏差上界"""
        return 3.0 * self.std_error + self.bias_bound

    def to_json(self) -> dict[str, Any]:
        return {
            "estimate": self.mean,
            "std_error": self.std_error,
            "n_paths": self.n_paths,
            "seed": self.seed,
            "flags": list(self.flags),
            "unfinished_mass": self.unfinished_mass,
            "bias_bound": self.bias_bound,
        }


@dataclass(frozen=True)
class GEstimate:
    direct: Estimate
    time_changed: Estimate

    @property
    def difference(self) -> float:
        return self.direct.mean - self.time_changed.mean

    @property
    def combined_error(self) -> float:
        return math.hypot(self.direct.std_error, self.time_changed.std_error)

    @property
    def agree(self) -> bool:
        slack = self.direct.bias_bound + self.time_changed.bias_bound
        return abs(self.difference) <= 3.0 * self.combined_error + slack

    def to_json(self) -> dict[str, Any]:
        return {
            "direct": self.direct.to_json(),
            "time_changed": self.time_changed.to_json(),
            "difference": self.difference,
            "agree": self.agree,
        }


@dataclass
class _Partial:
    total: float = 0.0
    total_sq: float = 0.0
    count: int = 0
    unfinished: int = 0
    tail: float = 0.0
    flags: set[str] = field(default_factory=set)


@dataclass(frozen=True)
class _Settings:
    dt: float
    horizon: float
    seed: int
    stream: int
    cap: float

    @property
    def steps(self) -> int:
        return step_count(self.dt, self.horizon)


def _settings(p: ProblemSpec, dt, horizon, seed, stream, cap_factor) -> _Settings:
    return _Settings(
        dt=1.0 / configurable["steps_per_unit"] if dt is None else float(dt),
        horizon=configurable["horizon_factor"] / p.beta if horizon is None else float(horizon),
        seed=configurable["seed"] if seed is None else int(seed),
        stream=int(stream),
        cap=configurable["rate_cap_factor"] if cap_factor is None else cap_factor,
    )


def _initial_z_max(p: ProblemSpec, cap: float) -> float:
    xs = probe_points(p.interval, include_endpoints=True)
    return max(float(np.max(capped_rate(p, xs, cap))), 1e-12)


def _run(task: Callable[[Chunk], Any], n_paths: int) -> list[Any]:
    blocks = list(chunks(n_paths, configurable["chunk_size"]))
    workers = min(worker_count(), len(blocks))
    if workers == 1:
        return [task(c) for c in blocks]
    with ThreadPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(task, blocks))


def _with_cap(run: Callable[[Chunk, float], Any], z_max: float) -> Callable[[Chunk], Any]:
    """z_max 不够时放大并重新生成该块"""
    def task(c: Chunk):
        cap = z_max
        for _ in range(MAX_CAP_DOUBLINGS):
            try:
                result = run(c, cap)
            except IntensityCapExceeded as exc:
                cap = max(2.0 * cap, 1.25 * exc.observed)
                continue
            if cap != z_max:
                for part in (result if isinstance(result, tuple) else (result,)):
                    part.flags.add("z_max_enlarged")
            return result
        raise IntensityCapExceeded(cap, float("inf"))
    return task


def _combine(parts: list[_Partial], n_paths: int, seed: int, label: str) -> Estimate:
    total = float(np.sum([q.total for q in parts]))
    total_sq = float(np.sum([q.total_sq for q in parts]))
    unfinished = int(sum(q.unfinished for q in parts))
    tail = max((q.tail for q in parts), default=0.0)
    mean = total / n_paths
    var = max(total_sq / n_paths - mean * mean, 0.0) * n_paths / max(n_paths - 1, 1)
    flags = set().union(*(q.flags for q in parts))
    mass = unfinished / n_paths
    if mass > configurable["unfinished_mass"]:
        flags.add("unfinished_mass")
    return Estimate(
        mean=mean,
        std_error=math.sqrt(var / n_paths),
        n_paths=n_paths,
        seed=seed,
        flags=tuple(sorted(flags)),
        unfinished_mass=mass,
        bias_bound=mass * tail,
        label=label,
    )


def _require_sa3(p: ProblemSpec, report: AssumptionReport | None, acknowledge: bool) -> None:
    report = validate_problem(p) if report is None else report
    if (report.structural_failure or report.sa3_failed) and not acknowledge:
        raise AssumptionViolation(report)


def _first_arrival_chunk(p: ProblemSpec, s: _Settings, x0: float, level: float) -> Callable[[Chunk, float], _Partial]:
    """第一个满足 X ≥ level 的事件处停止，记录 e^{-βτ} g(X_τ)；标记逐步生成，与 thin_events 的首个事件相同"""
    stepper = Stepper(p.diffusion)
    chunk_size = configurable["chunk_size"]

    def run(c: Chunk, z_max: float) -> _Partial:
        noise = generator(s.seed, s.stream, c.index, "noise")
        marks = generator(s.seed, s.stream, c.index, "marks")
        x = np.full(c.size, float(x0))
        frozen = at_absorbing(stepper, x)
        done = np.zeros(c.size, dtype=bool)
        value = np.zeros(c.size)
        for k in range(s.steps):
            if done.all():
                break
            t = k * s.dt
            theta = capped_rate(p, x, s.cap)
            observed = float(theta[~done].max())
            if observed > z_max:
                raise IntensityCapExceeded(z_max, observed)
            step = draw_step_marks(marks, c.size, chunk_size, z_max, s.dt)
            first = first_accepted(step, theta, ~done & (x >= level))
            hit = np.isfinite(first)
            if hit.any():
                value[hit] = np.exp(-p.beta * (t + first[hit])) * p.payoff(x[hit])
                done |= hit
            z = noise.standard_normal(chunk_size)[:c.size]
            x, absorbed, _ = stepper.advance(x, frozen | done, z, s.dt, t, c.start)
            frozen |= absorbed

        part = _Partial(float(np.sum(value)), float(np.sum(value * value)), c.size)
        left = ~done
        if left.any():
            part.unfinished = int(left.sum())
            part.tail = math.exp(-p.beta * s.steps * s.dt) * float(np.max(p.payoff(x[left])))
        return part

    return run


def _time_changed_chunk(p: ProblemSpec, s: _Settings, x0: float) -> Callable[[Chunk], _Partial]:
    """Y 在独立的 Exp(1) 时刻 T 的 Ψ(Y_T)，Y 的时钟吸收了折现"""
    stepper = Stepper(time_change_coefficients(p, cap_factor=s.cap))
    chunk_size = configurable["chunk_size"]
    steps = step_count(s.dt, configurable["horizon_factor"])

    def run(c: Chunk) -> _Partial:
        noise = generator(s.seed, s.stream, c.index, "noise")
        clock = generator(s.seed, s.stream, c.index, "exp")
        arrival = clock.standard_exponential(chunk_size)[:c.size]
        y = np.full(c.size, float(x0))
        frozen = at_absorbing(stepper, y)
        done = np.zeros(c.size, dtype=bool)
        value = np.zeros(c.size)
        for k in range(steps):
            if done.all():
                break
            hit = ~done & (arrival < (k + 1) * s.dt)
            if hit.any():
                value[hit] = psi(p, y[hit])
                done |= hit
            z = noise.standard_normal(chunk_size)[:c.size]
            y, absorbed, _ = stepper.advance(y, frozen | done, z, s.dt, k * s.dt, c.start)
            frozen |= absorbed

        part = _Partial(float(np.sum(value)), float(np.sum(value * value)), c.size)
        left = ~done
        if left.any():
            part.unfinished = int(left.sum())
            part.tail = float(np.max(psi(p, y[left])))
        return part

    return run


def estimate_G(
    p: ProblemSpec,
    x: float,
    n_paths: int | None = None,
    dt: float | None = None,
    horizon: float | None = None,
    seed: int | None = None,
    *,
    stream: int = 0,
    report: AssumptionReport | None = None,
    acknowledge: bool = False,
    cap_factor: float | None = None,
) -> GEstimate:
    """G_θ(x) 的两个估计：直接稀疏化与时间变换"""
    _require_sa3(p, report, acknowledge)
    check_start(p.diffusion, x)
    n = configurable["paths"] if n_paths is None else int(n_paths)
    s = _settings(p, dt, horizon, seed, stream, cap_factor)
    z_max = _initial_z_max(p, s.cap)
    direct = _run(_with_cap(_first_arrival_chunk(p, s, x, -math.inf), z_max), n)
    changed = _run(_time_changed_chunk(p, s, x), n)
    return GEstimate(
        _combine(direct, n, s.seed, "direct"),
        _combine(changed, n, s.seed, "time_changed"),
    )


def evaluate_policy(
    p: ProblemSpec,
    threshold: float,
    x: float,
    n_paths: int | None = None,
    dt: float | None = None,
    horizon: float | None = None,
    seed: int | None = None,
    *,
    stream: int = 0,
    cap_factor: float | None = None,
) -> Estimate:
    """τ = 第一个满足 X ≥ threshold 的事件时刻"""
    if not p.interval.contains(threshold):
        raise ValueError(f"阈值 {threshold} 不在状态区间 {p.interval.closure} 内")
    check_start(p.diffusion, x)
    n = configurable["paths"] if n_paths is None else int(n_paths)
    s = _settings(p, dt, horizon, seed, stream, cap_factor)
    z_max = _initial_z_max(p, s.cap)
    parts = _run(_with_cap(_first_arrival_chunk(p, s, x, threshold), z_max), n)
    return _combine(parts, n, s.seed, f"policy L={threshold}")


def _coupled_chunk(p: ProblemSpec, s: _Settings, x: float, y: float) -> Callable[[Chunk, float], tuple[_Partial, _Partial]]:
    stepper = Stepper(p.diffusion)
    chunk_size = configurable["chunk_size"]

    def run(c: Chunk, z_max: float) -> tuple[_Partial, _Partial]:
        noise = generator(s.seed, s.stream, c.index, "noise")
        other = generator(s.seed, s.stream, c.index, "coupling")
        marks = generator(s.seed, s.stream, c.index, "marks")
        lo, up = np.full(c.size, float(x)), np.full(c.size, float(y))
        met = lo >= up
        frozen = (at_absorbing(stepper, lo), at_absorbing(stepper, up))
        done = [np.zeros(c.size, dtype=bool), np.zeros(c.size, dtype=bool)]
        value = [np.zeros(c.size), np.zeros(c.size)]
        for k in range(s.steps):
            if done[0].all() and done[1].all():
                break
            t = k * s.dt
            step = draw_step_marks(marks, c.size, chunk_size, z_max, s.dt)
            for j, state in enumerate((lo, up)):
                theta = capped_rate(p, state, s.cap)
                observed = float(theta.max())
                if observed > z_max:
                    raise IntensityCapExceeded(z_max, observed)
                first = first_accepted(step, theta, ~done[j])
                hit = np.isfinite(first)
                if hit.any():
                    value[j][hit] = np.exp(-p.beta * (t + first[hit])) * p.payoff(state[hit])
                    done[j] |= hit
            z_lo = noise.standard_normal(chunk_size)[:c.size]
            z_up = other.standard_normal(chunk_size)[:c.size]
            lo, up, meeting, hits = couple_step(stepper, lo, up, met, frozen, z_lo, z_up, s.dt, t, c.start)
            met |= meeting
            frozen = (frozen[0] | hits[0], frozen[1] | hits[1])

        out = []
        for j, state in enumerate((lo, up)):
            part = _Partial(float(np.sum(value[j])), float(np.sum(value[j] ** 2)), c.size)
            left = ~done[j]
            if left.any():
                part.unfinished = int(left.sum())
                part.tail = math.exp(-p.beta * s.steps * s.dt) * float(np.max(p.payoff(state[left])))
            out.append(part)
        return out[0], out[1]

    return run


def coupled_first_arrival(
    p: ProblemSpec,
    x: float,
    y: float,
    n_paths: int | None = None,
    dt: float | None = None,
    horizon: float | None = None,
    seed: int | None = None,
    *,
    stream: int = 0,
    cap_factor: float | None = None,
) -> tuple[Estimate, Estimate]:
    """起点 x ≤ y 的 G 估计，路径 Doeblin 耦合、事件共用标记"""
    if x > y:
        raise ValueError(f"需要 x ≤ y，实际 x={x}, y={y}")
    check_start(p.diffusion, x)
    check_start(p.diffusion, y)
    n = configurable["paths"] if n_paths is None else int(n_paths)
    s = _settings(p, dt, horizon, seed, stream, cap_factor)
    pairs = _run(_with_cap(_coupled_chunk(p, s, x, y), _initial_z_max(p, s.cap)), n)
    return (
        _combine([a for a, _ in pairs], n, s.seed, f"coupled x={x}"),
        _combine([b for _, b in pairs], n, s.seed, f"coupled y={y}"),
    )


__all__ = [
    "Estimate",
    "GEstimate",
    "coupled_first_arrival",
    "estimate_G",
    "evaluate_policy",
]
