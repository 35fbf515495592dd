"""
命令行入口

子命令：solve | oracle | simulate | transform | classify | check | validate。
退出码：0 成功；1 用法或 IO 错误；2 假设检验不通过；3 断言不通过（套件或增长条件）。
每次运行都把解析后的配置以 JSON 回显到标准输出并写入输出目录的 config.json。
结果文件里不含时间戳，同一配置与种子在同一平台上逐字节相同。
"""
from __future__ import annotations

import argparse
import json
import sys
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np
import pandas as pd

from src.analytic import ORACLES, oracle_frame
from src.config import PROBLEMS_DIR, configurable, resolve_output_dir
from src.mc import estimate_G, evaluate_policy
from src.model import (
    AssumptionViolation,
    ProblemFileError,
    load_problem,
    probe_points,
    psi,
    validate_problem,
)
from src.shape import (
    SolveSettings,
    bundled_suite,
    convex_suite,
    growth_condition_check,
    monotone_suite,
    verify_shape_theorems,
)
from src.solver import conditional_value, make_grid, value_iteration
from src.transform import (
    endpoint_integrals,
    kotani_check,
    scale_function,
    time_change_coefficients,
    to_natural_scale,
)
from src.task_logger import TaskLoggerCallbackHandler

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_ASSUMPTION = 2
EXIT_ASSERTION = 3

# 增长条件套件：问题名 -> (可接受的结论, t 网格, Δt, 模拟时间范围)
# e^(x²) 的尾项在桌面规模的时间范围内远超 ε，结论为 inconclusive；路径溢出时为 fails
GROWTH_CASES: dict[str, tuple[tuple[str, ...], tuple[float, ...], float, float]] = {
    "eg2_5": (("holds",), (0.0, 5.0, 10.0), 0.1, 20.0),
    "linear_payoff": (("holds",), (0.0, 50.0, 100.0, 150.0), 0.25, 250.0),
    "exp_square": (("inconclusive", "fails"), (0.0, 1.0, 2.0, 4.0), 0.05, 8.0),
}


class UsageError(Exception):
    """命令行参数错误（退出码 1）"""


class _Parser(argparse.ArgumentParser):
    """argparse 默认以退出码 2 结束，这里改为抛出 UsageError"""

    def error(self, message: str):
        raise UsageError(message)


@dataclass
class RunConfig:
    """一次运行的完整配置；数值参数未指定时取 configurable 的默认值"""

    subcommand: str
    problem: str | None = None
    grid_nodes: int | None = None
    grid: str | None = None
    tol: float = 0.0
    max_n: int = 0
    acceleration: str | None = None
    paths: int = 0
    dt: float | None = None
    horizon: float | None = None
    seed: int = 0
    out: str = ""
    format: str = "csv"
    acknowledge: bool = False
    options: dict[str, Any] = field(default_factory=dict)

    def to_json(self) -> dict[str, Any]:
        return asdict(self)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--problem", help="问题文件（JSON）")
    common.add_argument("--grid-nodes", type=int, help=f"网格节点数（默认 {configurable['grid_nodes']}）")
    common.add_argument("--grid", choices=("log", "uniform"), help="网格类型")
    common.add_argument("--tol", type=float, help=f"迭代容差（默认 {configurable['tol']}）")
    common.add_argument("--max-n", type=int, help=f"最大迭代次数（默认 {configurable['max_n']}）")
    common.add_argument("--paths", type=int, help=f"蒙特卡洛路径数（默认 {configurable['paths']}）")
    common.add_argument("--dt", type=float, help="时间步长")
    common.add_argument("--horizon", type=float, help="模拟时间范围")
    common.add_argument("--seed", type=int, help=f"随机种子（默认 {configurable['seed']}）")
    common.add_argument("--out", help="输出目录（必须已存在）；缺省为 workspace/<日期>/task-N")
    common.add_argument("--format", choices=("csv", "json"), help="表格输出格式")
    common.add_argument("--acknowledge", action="store_true", help="假设检验失败时仍然继续")

    parser = _Parser(prog="poisson-stop", description="一维扩散的 Poisson 最优停时")
    sub = parser.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)

    solve = sub.add_parser("solve", parents=[common], help="值迭代求 V^(∞)")
    solve.add_argument("--acceleration", choices=("policy",), help="策略跳跃加速")

    oracle = sub.add_parser("oracle", parents=[common], help="在网格上评估闭式解")
    oracle.add_argument("--example", required=True, help="闭式解名称")
    for name in ("K", "sigma", "mu", "beta", "J", "phi"):
        oracle.add_argument(f"--{name}", type=float)
    oracle.add_argument("--lambda", dest="lam", type=float)
    oracle.add_argument("--x-min", type=float)
    oracle.add_argument("--x-max", type=float)
    oracle.add_argument("--points", type=int, default=1001)

    simulate = sub.add_parser("simulate", parents=[common], help="蒙特卡洛估计 G_θ 或阈值策略的值")
    simulate.add_argument("--estimator", choices=("G", "policy"), default="G")
    simulate.add_argument("--x", type=float, help="起点（默认取问题的特征尺度）")
    simulate.add_argument("--threshold", type=float, help="policy 估计的阈值 L")

    transform = sub.add_parser("transform", parents=[common], help="尺度函数与时间变换系数")
    transform.add_argument("--points", type=int, default=257)

    sub.add_parser("classify", parents=[common], help="端点分类与 Kotani 条件")

    check = sub.add_parser("check", parents=[common], help="形状定理与增长条件的检查")
    check.add_argument("--suite", choices=("shape", "growth", "all", "problem"), default="shape")
    check.add_argument("--suite-size", type=int, default=20, help="随机套件的问题数")
    check.add_argument("--growth-paths", type=int, default=2000)
    check.add_argument("--t-grid", type=float, nargs="+", help="增长条件的 t 网格")

    sub.add_parser("validate", parents=[common], help="数值检验 SA1–SA3")
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    options = {
        k: v for k, v in vars(args).items()
        if k not in RunConfig.__dataclass_fields__ and v is not None
    }
    out = resolve_output_dir(args.out)
    return RunConfig(
        subcommand=args.subcommand,
        problem=args.problem,
        grid_nodes=args.grid_nodes,
        grid=args.grid,
        tol=configurable["tol"] if args.tol is None else args.tol,
        max_n=configurable["max_n"] if args.max_n is None else args.max_n,
        acceleration=getattr(args, "acceleration", None),
        paths=configurable["paths"] if args.paths is None else args.paths,
        dt=args.dt,
        horizon=args.horizon,
        seed=configurable["seed"] if args.seed is None else args.seed,
        out=str(out),
        format=args.format or configurable["format"],
        acknowledge=args.acknowledge,
        options=dict(sorted(options.items())),
    )


# ---------------------------------------------------------------------------
# 输出
# ---------------------------------------------------------------------------

def write_json(path: Path, data: Any) -> Path:
    path.write_text(json.dumps(data, ensure_ascii=False, indent=2) + "\n", encoding="utf-8")
    return path


def write_table(frame: pd.DataFrame, out: Path, stem: str, fmt: str) -> Path:
    if fmt == "json":
        return write_json(out / f"{stem}.json", frame.to_dict(orient="records"))
    path = out / f"{stem}.csv"
    frame.to_csv(path, index=False, float_format="%.17g", lineterminator="\n")
    return path


# ---------------------------------------------------------------------------
# 子命令
# ---------------------------------------------------------------------------

def _require_problem(cfg: RunConfig):
    if not cfg.problem:
        raise UsageError(f"{cfg.subcommand} 需要 --problem")
    return load_problem(cfg.problem)


def cmd_validate(cfg: RunConfig, log: TaskLoggerCallbackHandler) -> int:
    p = _require_problem(cfg)
    report = validate_problem(p)
    write_json(Path(cfg.out) / "validate.json", report.to_json())
    for check in report.failures():
        log.log_event("assumption_failed", f"{check.assumption}[{check.location}] {check.integral}", check=check)
    return EXIT_ASSUMPTION if report.failed else EXIT_OK


def cmd_solve(cfg: RunConfig, log: TaskLoggerCallbackHandler) -> int:
    p = _require_problem(cfg)
    report = validate_problem(p)
    grid = None
    if cfg.grid_nodes or cfg.grid:
        grid = make_grid(p, nodes=cfg.grid_nodes, spacing=cfg.grid, kinds=report.kinds)
    V, it = value_iteration(
        p, grid, cfg.tol, cfg.max_n,
        report=report, acknowledge=cfg.acknowledge, acceleration=cfg.acceleration,
    )
    x = V.grid.nodes
    frame = pd.DataFrame({
        "x": x,
        "V": V.values,
        "g": np.asarray(p.payoff(x), dtype=float),
        "psi": np.asarray(psi(p, x), dtype=float),
        "H": conditional_value(p, V).values,
    })
    out = Path(cfg.out)
    write_table(frame, out, "solve", cfg.format)
    write_json(out / "solve_report.json", {
        "problem": p.name,
        "grid": V.grid.to_json(),
        "iteration": it.to_json(),
        "assumptions": report.to_json(),
    })
    log.log_event("solve_finished", f"{p.name}: n={it.iterations}, converged={it.converged}",
                  iterations=it.iterations, converged=it.converged, residual=it.residual,
                  wall_time=it.wall_time, flags=list(it.flags))
    return EXIT_OK


def cmd_oracle(cfg: RunConfig, log: TaskLoggerCallbackHandler) -> int:
    opts = cfg.options
    name = opts["example"]
    if name not in ORACLES:
        raise UsageError(f"未知的闭式解 {name!r}，可选: {', '.join(sorted(ORACLES))}")
    params = {k: opts[k] for k in ("K", "sigma", "mu", "beta", "J", "phi") if k in opts}
    if "lam" in opts:
        params["lambda"] = opts["lam"]
    xs = None
    if "x_min" in opts or "x_max" in opts:
        merged = {**ORACLES[name].defaults, **params}
        lo, hi = ORACLES[name].span(merged)
        xs = np.linspace(opts.get("x_min", lo), opts.get("x_max", hi), opts["points"])
    frame = oracle_frame(name, params, xs=xs, n=opts["points"])
    write_table(frame, Path(cfg.out), "oracle", cfg.format)
    log.log_event("oracle_evaluated", f"{name}: {len(frame)} 个点", params=params)
    return EXIT_OK


def cmd_simulate(cfg: RunConfig, log: TaskLoggerCallbackHandler) -> int:
    p = _require_problem(cfg)
    opts = cfg.options
    x = opts.get("x", p.query_scale())
    common = dict(n_paths=cfg.paths, dt=cfg.dt, horizon=cfg.horizon, seed=cfg.seed)
    if opts["estimator"] == "policy":
        if "threshold" not in opts:
            raise UsageError("policy 估计需要 --threshold")
        est = evaluate_policy(p, opts["threshold"], x, **common)
        result: dict[str, Any] = {"problem": p.name, "x": x, "threshold": opts["threshold"], "policy": est.to_json()}
        flags = est.flags
    else:
        g_est = estimate_G(p, x, **common, acknowledge=cfg.acknowledge)
        result = {"problem": p.name, "x": x, **g_est.to_json()}
        flags = tuple(sorted(set(g_est.direct.flags) | set(g_est.time_changed.flags)))
    write_json(Path(cfg.out) / "simulate.json", result)
    if flags:
        log.log_event("mc_flags", ", ".join(flags), flags=list(flags))
    return EXIT_OK


def cmd_transform(cfg: RunConfig, log: TaskLoggerCallbackHandler) -> int:
    p = _require_problem(cfg)
    n = cfg.options["points"]
    smap = scale_function(p.diffusion)
    if smap.affine:
        xs = probe_points(p.interval, n=n)
        m = np.asarray(smap.s(xs), dtype=float)
    else:
        lo, hi = smap.support
        m = np.linspace(lo, hi, n)
        xs = np.asarray(smap.inverse(m), dtype=float)
    y = time_change_coefficients(p)
    with np.errstate(all="ignore"):
        frame = pd.DataFrame({
            "x": xs,
            "s": m,
            "s_prime": np.asarray(smap.s_prime(xs), dtype=float),
            "eta": np.asarray(smap.eta(m), dtype=float),
            "y_vol": np.asarray(y.vol.raw(xs), dtype=float),
            "y_drift": np.asarray(y.drift.raw(xs), dtype=float),
        })
    out = Path(cfg.out)
    write_table(frame, out, "transform", cfg.format)
    write_json(out / "transform_report.json", {
        "problem": p.name,
        "natural_scale": p.diffusion.is_natural_scale,
        "scale_map": smap.to_json(),
        "kotani": kotani_check(p).to_json(),
    })
    log.log_event("transform_finished", f"{p.name}: tabulation_error={smap.tabulation_error:.3e}")
    return EXIT_OK


def cmd_classify(cfg: RunConfig, log: TaskLoggerCallbackHandler) -> int:
    p = _require_problem(cfg)
    natural = p if p.diffusion.is_natural_scale else to_natural_scale(p)[0]
    left, right = endpoint_integrals(natural.diffusion)
    report = validate_problem(p)
    write_json(Path(cfg.out) / "classify.json", {
        "problem": p.name,
        "declared": {"left": p.interval.left_kind, "right": p.interval.right_kind},
        "kinds": {"left": report.kinds[0], "right": report.kinds[1]},
        "endpoints": [left.to_json(), right.to_json()],
        "kotani": kotani_check(p).to_json(),
    })
    log.log_event("classified", f"{p.name}: left={left.kind}, right={right.kind}")
    return EXIT_OK


def _shape_report(cfg: RunConfig, log: TaskLoggerCallbackHandler, problems=None) -> dict[str, Any]:
    settings = SolveSettings(nodes=cfg.grid_nodes, tol=cfg.tol, max_n=cfg.max_n)
    if problems is None:
        n = cfg.options["suite_size"]
        problems = bundled_suite() + monotone_suite(n, cfg.seed) + convex_suite(n, cfg.seed)
    report = verify_shape_theorems(problems, settings, callbacks=[log])
    for verdict in report.verdicts:
        if not verdict.passed:
            log.log_event("theorem_violated", verdict.problem,
                          violated=[c.name for c in verdict.violated], errors=list(verdict.errors))
    return report.to_json()


def _growth_report(cfg: RunConfig, log: TaskLoggerCallbackHandler, problem=None) -> dict[str, Any]:
    opts = cfg.options
    n_paths = opts["growth_paths"]
    entries = []
    if problem is not None:
        t_grid = tuple(opts.get("t_grid") or (0.0, 10.0, 20.0))
        r = growth_condition_check(problem, t_grid, n_paths, cfg.seed,
                                   dt=cfg.dt or 0.1, horizon=cfg.horizon)
        entries.append({"problem": problem.name, "expected": None, **r.to_json()})
    else:
        for name, (expected, t_grid, dt, horizon) in GROWTH_CASES.items():
            p = load_problem(PROBLEMS_DIR / f"{name}.json")
            r = growth_condition_check(p, t_grid, n_paths, cfg.seed, dt=dt, horizon=horizon)
            entries.append({"problem": name, "expected": list(expected), **r.to_json()})
            if r.verdict not in expected:
                log.log_event("growth_unexpected", f"{name}: {r.verdict}（期望 {'/'.join(expected)}）", report=r)
    passed = all(e["expected"] is None or e["verdict"] in e["expected"] for e in entries)
    return {"suite": "growth", "passed": passed, "problems": entries}


def cmd_check(cfg: RunConfig, log: TaskLoggerCallbackHandler) -> int:
    suite = cfg.options["suite"]
    results: dict[str, Any] = {}
    if suite == "problem":
        p = _require_problem(cfg)
        results["shape"] = _shape_report(cfg, log, [p])
        results["growth"] = _growth_report(cfg, log, p)
    if suite in ("shape", "all"):
        results["shape"] = _shape_report(cfg, log)
    if suite in ("growth", "all"):
        results["growth"] = _growth_report(cfg, log)
    passed = all(r["passed"] for r in results.values())
    write_json(Path(cfg.out) / "check.json", {"passed": passed, **results})
    log.log_event("check_finished", f"suite={suite}, passed={passed}", passed=passed)
    return EXIT_OK if passed else EXIT_ASSERTION


COMMANDS: dict[str, Callable[[RunConfig, TaskLoggerCallbackHandler], int]] = {
    "solve": cmd_solve,
    "oracle": cmd_oracle,
    "simulate": cmd_simulate,
    "transform": cmd_transform,
    "classify": cmd_classify,
    "check": cmd_check,
    "validate": cmd_validate,
}


def run(argv: Sequence[str] | None = None) -> int:
    """解析参数、执行子命令并返回退出码"""
    try:
        args = build_parser().parse_args(argv)
        cfg = resolve_config(args)
    except UsageError as e:
        print(f"用法错误: {e}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as e:
        print(f"IO 错误: {e}", file=sys.stderr)
        return EXIT_USAGE

    config = cfg.to_json()
    print(json.dumps(config, ensure_ascii=False, indent=2))
    out = Path(cfg.out)
    write_json(out / "config.json", config)
    log = TaskLoggerCallbackHandler(out)
    log.set_current_node(cfg.subcommand)

    code = EXIT_OK
    outcome: dict[str, Any] = {"subcommand": cfg.subcommand}
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            code = COMMANDS[cfg.subcommand](cfg, log)
        except AssumptionViolation as e:
            write_json(out / "assumptions.json", e.report.to_json())
            print(f"假设检验不通过: {e}", file=sys.stderr)
            code = EXIT_ASSUMPTION
        except (ProblemFileError, UsageError, OSError) as e:
            print(f"错误: {e}", file=sys.stderr)
            code = EXIT_USAGE
        except (KeyError, ValueError) as e:
            # 参数超出闭式解范围、起点或阈值不在区间内等
            print(f"参数错误: {e}", file=sys.stderr)
            code = EXIT_USAGE
        except RuntimeError as e:
            # 方程组奇异、路径溢出、优化器失败等
            print(f"计算失败: {e}", file=sys.stderr)
            code = EXIT_USAGE
    log.log_warnings(caught)
    outcome["exit_code"] = code
    log.write_summary(outcome)
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
