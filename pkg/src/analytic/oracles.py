"""
闭式解：作为求解器与蒙特卡洛的基准

- Dupuis–Wang：指数布朗运动、看涨收益、常数速率 λ 下的 V_λ，以及 λ→∞ 的美式期权 w
- 线性收益：首个事件即停止，V = ρx
- 屏障速率：x ≤ J 时 θ=+∞，x > J 时 θ=0
- 单位漂移布朗运动在 0 吸收、g(x)=x 的经典值函数 w
- 局部时间例子 h_φ / H_φ 与凸性阈值 φ*
- θ(x)=x⁻² 时 V^(∞) 与 V_θ 不相等的例子

每个解都同时支持标量与数组输入；ORACLES 注册表把它们统一成 x,value,payoff,psi 的表格。
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np
import pandas as pd
from scipy import optimize

from .roots import ParameterDomainError, q_roots

SCAN_UPPER = 50.0
SCAN_POINTS = 5001


class OptimizerError(RuntimeError):
    """自由边界的一维极大化没有收敛"""


def _out(values: np.ndarray, like):
    return float(values) if np.ndim(like) == 0 else values


def _require(condition: bool, message: str, **params: float) -> None:
    if not condition:
        raise ParameterDomainError(message, **params)


# ---------------------------------------------------------------------------
# Dupuis–Wang 与美式看涨
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DWSolution:
    K: float
    sigma: float
    mu: float
    beta: float
    lam: float
    L: float
    M: float
    alpha_plus: float
    alpha_minus: float

    @property
    def scale(self) -> float:
        return self.L - self.K


@dataclass(frozen=True)
class AmericanSolution:
    K: float
    sigma: float
    mu: float
    beta: float
    M: float
    alpha_plus: float


def american_solution(K: float, sigma: float, mu: float, beta: float) -> AmericanSolution:
    """永久美式看涨：阈值 M = Kα⁺_β/(α⁺_β - 1)"""
    _require(K > 0.0, f"K 必须为正，实际 {K!r}", K=K)
    _require(mu < beta, f"需要 μ < β，实际 μ={mu!r}, β={beta!r}", mu=mu, beta=beta)
    alpha = q_roots(sigma, mu, beta).plus
    return AmericanSolution(K, sigma, mu, beta, K * alpha / (alpha - 1.0), alpha)


def american_value(K: float, sigma: float, mu: float, beta: float, x):
    sol = american_solution(K, sigma, mu, beta)
    xs = np.asarray(x, dtype=float)
    below = (sol.M - K) * np.power(np.maximum(xs, 0.0) / sol.M, sol.alpha_plus)
    return _out(np.where(xs <= sol.M, below, xs - K), x)


def dw_solution(K: float, sigma: float, mu: float, beta: float, lam: float) -> DWSolution:
    _require(lam > 0.0, f"λ 必须为正，实际 {lam!r}", lam=lam)
    american = american_solution(K, sigma, mu, beta)
    alpha_plus = american.alpha_plus
    alpha_minus = q_roots(sigma, mu, beta + lam).minus
    L = K * (1.0 + lam / ((beta + lam) * alpha_plus - beta * alpha_minus - lam))
    return DWSolution(K, sigma, mu, beta, lam, L, american.M, alpha_plus, alpha_minus)


def dw_value(sol: DWSolution, x):
    """V_λ(x)：L 以下为幂函数，L 以上为幂函数与线性收益的混合"""
    xs = np.asarray(x, dtype=float)
    ratio = np.maximum(xs, 0.0) / sol.L
    lam, beta, K = sol.lam, sol.beta, sol.K
    with np.errstate(divide="ignore"):
        below = sol.scale * np.power(ratio, sol.alpha_plus)
        above = beta / (beta + lam) * sol.scale * np.power(ratio, sol.alpha_minus) + lam * (xs - K) / (beta + lam)
    return _out(np.where(xs <= sol.L, below, above), x)


# ---------------------------------------------------------------------------
# 线性收益与屏障速率
# ---------------------------------------------------------------------------

def linear_payoff_value(x, mu: float, beta: float, lam: float):
    """g(x)=x、θ ≡ λ 时首个事件即停止：V = ρx，ρ = λ/(λ+β-μ)；λ=+∞ 时 ρ=1"""
    _require(mu < beta, f"需要 μ < β，实际 μ={mu!r}, β={beta!r}", mu=mu, beta=beta)
    _require(lam > 0.0, f"λ 必须为正，实际 {lam!r}", lam=lam)
    rho = 1.0 if math.isinf(lam) else lam / (lam + beta - mu)
    return _out(rho * np.asarray(x, dtype=float), x)


def barrier_rate_value(x, J: float, sigma: float, mu: float, beta: float):
    """g(x)=x，x ≤ J 时立即停止；x > J 时等待首次到达 J：J(x/J)^(α⁻_β)"""
    _require(J > 0.0, f"J 必须为正，实际 {J!r}", J=J)
    alpha = q_roots(sigma, mu, beta).minus
    xs = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore"):
        above = J * np.power(np.maximum(xs, J) / J, alpha)
    return _out(np.where(xs <= J, xs, above), x)


# ---------------------------------------------------------------------------
# 单位漂移布朗运动（w 既不凸也不凹）
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SinhSolution:
    beta: float
    k: float
    y: float
    iterations: int


def _log_sinh(u: np.ndarray) -> np.ndarray:
    return u + np.log1p(-np.exp(-2.0 * u)) - math.log(2.0)


def sinh_drift_solution(beta: float, tol: float = 1e-10) -> SinhSolution:
    """自由边界 y = argmax z e^z / sinh(kz)，k = √(1+2β)

    先在 (0, 50] 上粗扫得到括号，再做黄金分割；目标函数在极大点附近过于平坦，
    最后在同一括号内对驻点条件 1/z + 1 = k·coth(kz) 求根，把 y 精确到 tol。
    """
    _require(beta > 0.0, f"β 必须为正，实际 {beta!r}", beta=beta)
    k = math.sqrt(1.0 + 2.0 * beta)

    def neg_log_f(z: float) -> float:
        return -(math.log(z) + z - float(_log_sinh(np.asarray(k * z))))

    def stationarity(z: float) -> float:
        return 1.0 / z + 1.0 - k / math.tanh(k * z)

    zs = np.linspace(SCAN_UPPER / SCAN_POINTS, SCAN_UPPER, SCAN_POINTS)
    log_f = np.log(zs) + zs - _log_sinh(k * zs)
    i = int(np.argmax(log_f))
    if i == 0 or i == len(zs) - 1:
        raise OptimizerError(f"粗扫的极大点落在扫描边界 z={zs[i]!r}，无法形成括号")
    bracket = (float(zs[i - 1]), float(zs[i]), float(zs[i + 1]))
    result = optimize.minimize_scalar(neg_log_f, bracket=bracket, method="golden", tol=tol)
    if not result.success:
        raise OptimizerError(f"黄金分割没有收敛: {result.message}")
    y = float(result.x)
    lo, hi = bracket[0], bracket[2]
    if stationarity(lo) > 0.0 > stationarity(hi):
        y = optimize.brentq(stationarity, lo, hi, xtol=tol * max(1.0, y), rtol=4 * np.finfo(float).eps)
    return SinhSolution(beta, k, y, int(result.nit))


def sinh_drift_value(x, beta: float):
    """w(x) = y e^(y-x) sinh(kx)/sinh(ky)（0 ≤ x ≤ y），x ≥ y 时 w(x) = x；同时返回 y"""
    sol = sinh_drift_solution(beta)
    xs = np.asarray(x, dtype=float)
    _require(bool(np.all(xs >= 0.0)), "x 必须非负", beta=beta)
    k, y = sol.k, sol.y
    xc = np.minimum(xs, y)
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.exp(k * (xc - y)) * np.expm1(-2.0 * k * xc) / np.expm1(-2.0 * k * y)
        below = y * np.exp(y - xc) * ratio
    values = np.where(xs <= y, below, xs)
    return _out(values, x), y


# ---------------------------------------------------------------------------
# 局部时间例子
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LocalTimeValues:
    h: np.ndarray | float
    H: np.ndarray | float
    phi_star: float


def h_phi(x, phi: float):
    xs = np.asarray(x, dtype=float)
    ax = np.abs(xs)
    return _out(ax + phi * ((np.abs(1.0 - xs) + np.abs(1.0 + xs)) / 2.0 - ax), x)


def local_time_value(x, phi: float, lam: float) -> LocalTimeValues:
    """h_φ、H_φ(x) = E^x[h_φ(B_T)]（T ~ Exp(λ)）以及凸性阈值 φ* = 1/(1-e^(-ξ))，ξ = √(2λ)"""
    _require(lam > 0.0, f"λ 必须为正，实际 {lam!r}", lam=lam)
    _require(phi >= 0.0, f"φ 必须非负，实际 {phi!r}", phi=phi)
    xi = math.sqrt(2.0 * lam)
    xs = np.asarray(x, dtype=float)
    h = np.asarray(h_phi(xs, phi), dtype=float)
    H = (h
         + 0.5 * phi * np.exp(-xi * np.abs(1.0 - xs)) / xi
         + 0.5 * phi * np.exp(-xi * np.abs(1.0 + xs)) / xi
         + (1.0 - phi) * np.exp(-xi * np.abs(xs)) / xi)
    return LocalTimeValues(_out(h, x), _out(H, x), 1.0 / -math.expm1(-xi))


# ---------------------------------------------------------------------------
# V^(∞) ≠ V_θ
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NonEqualityValues:
    v_infinity: np.ndarray | float
    v_theta: np.ndarray | float
    w: np.ndarray | float


def nonequality_values(x, beta: float) -> NonEqualityValues:
    """在 0 吸收的布朗运动、g = 1{x=0}、θ(x)=x⁻²、θ(0)=1 时的 V^(∞)、V_θ 与 w"""
    _require(beta > 0.0, f"β 必须为正，实际 {beta!r}", beta=beta)
    xs = np.asarray(x, dtype=float)
    _require(bool(np.all(xs >= 0.0)), "x 必须非负", beta=beta)
    w = np.exp(-math.sqrt(2.0 * beta) * xs)
    v_theta = w / (1.0 + beta)
    v_inf = np.where(xs == 0.0, 1.0 / (1.0 + beta), 0.0)
    return NonEqualityValues(_out(v_inf, x), _out(v_theta, x), _out(w, x))


# ---------------------------------------------------------------------------
# 注册表
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Oracle:
    """一个闭式解：默认参数、默认网格范围，以及 value / payoff / psi 三列"""

    name: str
    description: str
    defaults: Mapping[str, float]
    span: Callable[[Mapping[str, float]], tuple[float, float]]
    value: Callable[[np.ndarray, Mapping[str, float]], np.ndarray]
    payoff: Callable[[np.ndarray, Mapping[str, float]], np.ndarray]
    psi: Callable[[np.ndarray, Mapping[str, float]], np.ndarray]


def _call(xs, p):
    return np.maximum(xs - p["K"], 0.0)


def _dw(xs, p):
    return dw_value(dw_solution(p["K"], p["sigma"], p["mu"], p["beta"], p["lambda"]), xs)


def _american(xs, p):
    return american_value(p["K"], p["sigma"], p["mu"], p["beta"], xs)


def _barrier(xs, p):
    return barrier_rate_value(xs, p["J"], p["sigma"], p["mu"], p["beta"])


def _h_phi(xs, p):
    return local_time_value(xs, p["phi"], p["lambda"]).H


def _eg2_5_payoff(xs, p):
    return np.where(xs == 0.0, 1.0, 0.0)


def _eg2_5_psi(xs, p):
    return np.where(xs == 0.0, 1.0 / (1.0 + p["beta"]), 0.0)


ORACLES: dict[str, Oracle] = {
    "dw": Oracle(
        "dw", "指数布朗运动看涨收益，常数速率 λ 下的 V_λ",
        {"K": 1.0, "sigma": 0.2, "mu": 0.05, "beta": 0.1, "lambda": 1.0},
        lambda p: (0.0, 5.0 * p["K"]),
        _dw,
        _call,
        lambda xs, p: p["lambda"] / (p["beta"] + p["lambda"]) * _call(xs, p),
    ),
    "american": Oracle(
        "american", "永久美式看涨 w（λ→∞ 的极限）",
        {"K": 1.0, "sigma": 0.2, "mu": 0.05, "beta": 0.1},
        lambda p: (0.0, 5.0 * p["K"]),
        _american,
        _call,
        _call,
    ),
    "linear": Oracle(
        "linear", "g(x)=x、常数速率：V = ρx",
        {"mu": 0.05, "beta": 0.1, "lambda": 1.0},
        lambda p: (0.0, 5.0),
        lambda xs, p: linear_payoff_value(xs, p["mu"], p["beta"], p["lambda"]),
        lambda xs, p: xs,
        lambda xs, p: p["lambda"] / (p["beta"] + p["lambda"]) * xs,
    ),
    "barrier": Oracle(
        "barrier", "g(x)=x，x≤J 时 θ=+∞、x>J 时 θ=0",
        {"J": 1.0, "sigma": math.sqrt(2.0), "mu": 0.0, "beta": 2.0},
        lambda p: (0.0, 5.0 * p["J"]),
        _barrier,
        lambda xs, p: xs,
        lambda xs, p: np.where(xs <= p["J"], xs, 0.0),
    ),
    "sinh": Oracle(
        "sinh", "单位漂移布朗运动在 0 吸收、g(x)=x 的经典值函数 w",
        {"beta": 0.5},
        lambda p: (0.0, 5.0),
        lambda xs, p: sinh_drift_value(xs, p["beta"])[0],
        lambda xs, p: xs,
        lambda xs, p: xs,
    ),
    "h_phi": Oracle(
        "h_phi", "布朗运动在 Exp(λ) 时刻的 h_φ 期望 H_φ",
        {"phi": 1.15, "lambda": 2.0},
        lambda p: (-3.0, 3.0),
        _h_phi,
        lambda xs, p: h_phi(xs, p["phi"]),
        lambda xs, p: h_phi(xs, p["phi"]),
    ),
    "eg2_5": Oracle(
        "eg2_5", "θ(x)=x⁻²：V_θ(x) = e^(-√(2β)x)/(1+β)",
        {"beta": 1.0},
        lambda p: (0.0, 3.0),
        lambda xs, p: nonequality_values(xs, p["beta"]).v_theta,
        _eg2_5_payoff,
        _eg2_5_psi,
    ),
}


def oracle_frame(name: str, params: Mapping[str, float] | None = None,
                 xs=None, n: int = 1001) -> pd.DataFrame:
    """在网格上评估注册表中的闭式解，列为 x,value,payoff,psi

    params 覆盖默认参数；xs 缺省时在默认范围上取 n 个等距点。
    """
    if name not in ORACLES:
        raise KeyError(f"未知的闭式解 '{name}'，可选: {sorted(ORACLES)}")
    oracle = ORACLES[name]
    unknown = set(params or {}) - set(oracle.defaults)
    if unknown:
        raise ParameterDomainError(f"闭式解 {name} 不接受参数 {sorted(unknown)}")
    p = {**oracle.defaults, **(params or {})}
    if xs is None:
        lo, hi = oracle.span(p)
        xs = np.linspace(lo, hi, n)
    xs = np.asarray(xs, dtype=float)
    return pd.DataFrame({
        "x": xs,
        "value": np.asarray(oracle.value(xs, p), dtype=float),
        "payoff": np.asarray(oracle.payoff(xs, p), dtype=float),
        "psi": np.asarray(oracle.psi(xs, p), dtype=float),
    })


__all__ = [
    "AmericanSolution",
    "DWSolution",
    "LocalTimeValues",
    "NonEqualityValues",
    "ORACLES",
    "Oracle",
    "OptimizerError",
    "SinhSolution",
    "american_solution",
    "american_value",
    "barrier_rate_value",
    "dw_solution",
    "dw_value",
    "h_phi",
    "linear_payoff_value",
    "local_time_value",
    "nonequality_values",
    "oracle_frame",
    "sinh_drift_solution",
    "sinh_drift_value",
]
