"""
指数布朗运动的特征方程 Q_ζ(α) = (σ²/2)α(α-1) + μα - ζ 的两个根
"""
from __future__ import annotations

import math
from dataclasses import dataclass


class ParameterDomainError(ValueError):
    """参数超出闭式解成立的范围"""

    def __init__(self, message: str, **params: float):
        self.params = params
        super().__init__(message)


@dataclass(frozen=True)
class RootPair:
    minus: float
    plus: float
    sigma: float
    mu: float
    zeta: float

    def q(self, alpha: float) -> float:
        return 0.5 * self.sigma ** 2 * alpha * (alpha - 1.0) + self.mu * alpha - self.zeta


def q_roots(sigma: float, mu: float, zeta: float) -> RootPair:
    """Q_ζ 的负根 α⁻ 与正根 α⁺

    写成 Aα² + Bα + C，A = σ²/2，B = μ - σ²/2，C = -ζ；
    先算与 B 同号的那个根，另一个用 C/(Aα) 得到，避免相消。
    """
    if not (math.isfinite(sigma) and sigma > 0.0):
        raise ParameterDomainError(f"σ 必须为正，实际 {sigma!r}", sigma=sigma)
    if not (math.isfinite(zeta) and zeta > 0.0):
        raise ParameterDomainError(f"ζ 必须为正，实际 {zeta!r}", zeta=zeta)
    if not math.isfinite(mu):
        raise ParameterDomainError(f"μ 必须有限，实际 {mu!r}", mu=mu)

    a = 0.5 * sigma * sigma
    b = mu - a
    c = -zeta
    q = -0.5 * (b + math.copysign(math.sqrt(b * b - 4.0 * a * c), b))
    r1, r2 = q / a, c / q
    return RootPair(minus=min(r1, r2), plus=max(r1, r2), sigma=sigma, mu=mu, zeta=zeta)


__all__ = ["ParameterDomainError", "RootPair", "q_roots"]
