"""
离散的 G 算子：一次 Poisson 到达

u(x) ≈ E^x[e^{-βT₁} h(X_{T₁})] 满足两点边值问题
    (1/2)a²u'' + bu' - (β+θ)u + θh = 0
u'' 用非均匀中心差分；bu' 在 |b|·h ≤ a² 处用中心差分，否则迎风，保证 M 矩阵。
端点条件消元进首末内部行，内部方程组保持三对角。
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable

import numpy as np
from scipy.linalg import LinAlgError, solve_banded

from src.config import configurable
from src.analytic.roots import q_roots
from src.model.assumptions import AssumptionReport, AssumptionViolation, validate_problem
from src.model.expression import ScalarFunction
from src.model.problem import ProblemSpec, capped_rate, exponential_bm_parameters
from .grid import BoundaryPolicy, BoundaryPolicyError, Grid, ValueFunction, make_grid, parse_policy


class SingularSystemError(RuntimeError):
    """三对角方程组奇异或解不是有限值"""

    def __init__(self, message: str, diagnostics: dict[str, Any]):
        self.diagnostics = diagnostics
        super().__init__(f"{message}: {diagnostics}")


def require_assumptions(p: ProblemSpec, report: AssumptionReport | None, acknowledge: bool) -> AssumptionReport:
    """SA1/SA2 失败时拒绝求解，除非调用方显式确认"""
    if report is None:
        report = validate_problem(p)
    if report.structural_failure and not acknowledge:
        raise AssumptionViolation(report)
    return report


def resolve_policies(
    p: ProblemSpec, grid: Grid, left: Any = None, right: Any = None
) -> tuple[BoundaryPolicy, BoundaryPolicy]:
    """两端的边界策略：吸收端点用 Dirichlet，截断端点取显式参数、grid 提示或 linear"""
    out = []
    for i, (side, given) in enumerate((("left", left), ("right", right))):
        if not grid.truncated[i]:
            out.append(BoundaryPolicy("dirichlet"))
            continue
        policy = parse_policy(given or p.grid_hints.get(side) or "linear", side)
        if policy.kind == "dirichlet":
            raise BoundaryPolicyError("Dirichlet 条件只用于吸收端点", side)
        if policy.kind == "power":
            policy = _power_policy(p, grid, side, policy)
        out.append(policy)
    return out[0], out[1]


def _power_policy(p: ProblemSpec, grid: Grid, side: str, policy: BoundaryPolicy) -> BoundaryPolicy:
    if not np.isfinite(grid.interval.left) or grid.interval.left < 0.0:
        raise BoundaryPolicyError("幂律条件只用于 (0,∞) 上的问题", side)
    edge = grid.nodes[:2] if side == "left" else grid.nodes[-2:]
    if (edge <= 0.0).any():
        raise BoundaryPolicyError("幂律条件要求截断节点为正", side)
    if policy.exponent is not None:
        return policy
    params = exponential_bm_parameters(p.diffusion)
    if params is None:
        raise BoundaryPolicyError("只有指数布朗运动可以自动确定幂律指数，请显式给出 exponent", side)
    roots = q_roots(params[0], params[1], p.beta)
    return BoundaryPolicy("power", roots.plus if side == "left" else roots.minus)


def _closure(policy: BoundaryPolicy, x0: float, x1: float, x2: float) -> tuple[float, float]:
    """u(x0) = α·u(x1) + γ·u(x2)"""
    if policy.kind == "linear":
        t = (x0 - x1) / (x2 - x1)
        return 1.0 - t, t
    if policy.kind == "power":
        return (x0 / x1) ** policy.exponent, 0.0
    return 0.0, 0.0


@dataclass(frozen=True)
class _System:
    ab: np.ndarray
    diag: np.ndarray


class GOperator:
    """在固定网格上反复作用的 G 算子；矩阵只依赖于 p 和网格，每次作用只换右端项"""

    def __init__(self, p: ProblemSpec, grid: Grid, left: Any = None, right: Any = None,
                 cap_factor: float | None = None):
        self.p = p
        self.grid = grid
        self.left, self.right = resolve_policies(p, grid, left, right)
        cap = configurable["rate_cap_factor"] if cap_factor is None else cap_factor

        x = grid.nodes
        with np.errstate(all="ignore"):
            a = np.broadcast_to(np.asarray(p.vol.raw(x[1:-1]), dtype=float), x[1:-1].shape)
            b = np.broadcast_to(np.asarray(p.drift.raw(x[1:-1]), dtype=float), x[1:-1].shape)
        self.theta = capped_rate(p, x, cap)
        self.theta_ends = np.asarray(p.rate([x[0], x[-1]]), dtype=float)

        hm, hp = x[1:-1] - x[:-2], x[2:] - x[1:-1]
        s = hm + hp
        a2 = a * a
        lower = a2 / (hm * s)
        upper = a2 / (hp * s)
        central = np.abs(b) * np.maximum(hm, hp) <= a2
        d1_lower = np.where(central, -b * hp / (hm * s), np.where(b < 0, -b / hm, 0.0))
        d1_upper = np.where(central, b * hm / (hp * s), np.where(b > 0, b / hp, 0.0))
        self._lower = lower + d1_lower
        self._upper = upper + d1_upper
        self.upwinded = int((~central).sum())

        self._alpha_left, self._gamma_left = _closure(self.left, x[0], x[1], x[2])
        self._alpha_right, self._gamma_right = _closure(self.right, x[-1], x[-2], x[-3])
        self._system = self._assemble(self.theta)

    def _assemble(self, theta: np.ndarray) -> _System:
        L, U = self._lower, self._upper
        diag = L + U + self.p.beta + theta[1:-1]
        sub = -L.copy()
        sup = -U.copy()
        diag[0] -= L[0] * self._alpha_left
        sup[0] -= L[0] * self._gamma_left
        diag[-1] -= U[-1] * self._alpha_right
        sub[-1] -= U[-1] * self._gamma_right

        m = diag.size
        ab = np.zeros((3, m))
        ab[0, 1:] = sup[:-1] / diag[:-1]
        ab[1, :] = 1.0
        ab[2, :-1] = sub[1:] / diag[1:]
        return _System(ab, diag)

    def _dirichlet(self, theta_end: float, h_end: float) -> float:
        if np.isposinf(theta_end):
            return h_end
        return h_end * theta_end / (self.p.beta + theta_end)

    def _solve(self, system: _System, theta: np.ndarray, theta_ends: np.ndarray, h: np.ndarray) -> np.ndarray:
        x = self.grid.nodes
        rhs = theta[1:-1] * h[1:-1]
        delta_left = self._dirichlet(theta_ends[0], h[0]) if self.left.kind == "dirichlet" else 0.0
        delta_right = self._dirichlet(theta_ends[1], h[-1]) if self.right.kind == "dirichlet" else 0.0
        rhs[0] += self._lower[0] * delta_left
        rhs[-1] += self._upper[-1] * delta_right
        try:
            inner = solve_banded((1, 1), system.ab, rhs / system.diag, check_finite=False)
        except (LinAlgError, ValueError) as exc:
            raise SingularSystemError(str(exc), self.diagnostics(system)) from exc
        if not np.isfinite(inner).all():
            raise SingularSystemError("解含非有限值", self.diagnostics(system))

        u = np.empty_like(x)
        u[1:-1] = inner
        u[0] = delta_left + self._alpha_left * inner[0] + self._gamma_left * inner[1]
        u[-1] = delta_right + self._alpha_right * inner[-1] + self._gamma_right * inner[-2]
        return u

    def diagnostics(self, system: _System | None = None) -> dict[str, Any]:
        system = system or self._system
        return {
            "nodes": self.grid.size,
            "spacing": self.grid.spacing,
            "bounds": list(self.grid.bounds),
            "min_diag": float(np.min(system.diag)),
            "max_offdiag": float(np.max(np.abs(system.ab[[0, 2]]))),
            "upwinded_rows": self.upwinded,
            "left": self.left.to_json(),
            "right": self.right.to_json(),
        }

    def apply(self, h: np.ndarray) -> np.ndarray:
        """u = G(h)，h 为节点上的取值"""
        return self._solve(self._system, self.theta, self.theta_ends, np.asarray(h, dtype=float))

    def policy_value(self, stop: np.ndarray, g: np.ndarray) -> np.ndarray:
        """策略"在 stop 集合中的第一个事件处停止"的值：L u - (β + θ·1_S)u + θ·1_S·g = 0"""
        stop = np.asarray(stop, dtype=bool)
        theta = np.where(stop, self.theta, 0.0)
        theta_ends = np.where(stop[[0, -1]], self.theta_ends, 0.0)
        return self._solve(self._assemble(theta), theta, theta_ends, np.asarray(g, dtype=float))

    def wrap(self, values: np.ndarray, label: str = "") -> ValueFunction:
        return ValueFunction(self.grid, values, self.left, self.right, label)


def values_on(h: ValueFunction | ScalarFunction | Callable | np.ndarray, grid: Grid) -> np.ndarray:
    """把 h 换成 grid 节点上的取值"""
    if isinstance(h, ValueFunction):
        if h.grid is grid or np.array_equal(h.grid.nodes, grid.nodes):
            return np.asarray(h.values, dtype=float)
        return np.asarray(h(grid.nodes), dtype=float)
    if isinstance(h, np.ndarray):
        if h.shape != grid.nodes.shape:
            raise ValueError(f"h 的形状 {h.shape} 与网格 {grid.nodes.shape} 不符")
        return h.astype(float)
    return np.broadcast_to(np.asarray(h(grid.nodes), dtype=float), grid.nodes.shape).copy()


def g_operator(
    p: ProblemSpec,
    h: ValueFunction | ScalarFunction | Callable | np.ndarray,
    grid: Grid | None = None,
    left: Any = None,
    right: Any = None,
    *,
    cap_factor: float | None = None,
    report: AssumptionReport | None = None,
    acknowledge: bool = False,
) -> ValueFunction:
    """对 h 作用一次 G 算子；h 取 p.payoff 时得到 G_θ"""
    report = require_assumptions(p, report, acknowledge)
    if grid is None:
        grid = make_grid(p, kinds=report.kinds)
    op = GOperator(p, grid, left, right, cap_factor=cap_factor)
    return op.wrap(op.apply(values_on(h, grid)), label="G(h)")


__all__ = [
    "GOperator",
    "SingularSystemError",
    "g_operator",
    "require_assumptions",
    "resolve_policies",
    "values_on",
]
