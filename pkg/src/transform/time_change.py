"""
时间变换后的扩散 Y

按时钟 dC = (β+θ(X)) dt 变换后，Y = X∘Λ 满足 dY = a/√(β+θ) dB + b/(β+θ) dt。
θ = +∞ 的屏障区域使用截断值 rate_cap_factor·β，Y 在那里几乎冻结。
"""
from __future__ import annotations

import numpy as np

from src.config import configurable
from src.model.expression import TabulatedFunction
from src.model.problem import Diffusion, ProblemSpec


def time_change_coefficients(p: ProblemSpec, cap_factor: float | None = None) -> Diffusion:
    """返回与 p 同一状态区间上的 Y 扩散"""
    cap = (configurable["rate_cap_factor"] if cap_factor is None else cap_factor) * p.beta
    beta = p.beta

    def clock(x):
        theta = np.asarray(p.rate.raw(x), dtype=float)
        return beta + np.where(np.isposinf(theta), cap, theta)

    def vol(x):
        return np.asarray(p.vol.raw(x), dtype=float) / np.sqrt(clock(x))

    def drift(x):
        return np.asarray(p.drift.raw(x), dtype=float) / clock(x)

    return Diffusion(
        TabulatedFunction(vol, description=f"({p.vol.label})/sqrt(beta+theta)"),
        TabulatedFunction(drift, description=f"({p.drift.label})/(beta+theta)"),
        p.interval,
    )


__all__ = ["time_change_coefficients"]
