"""
项目入口：演示完整流程（Dupuis–Wang 求解 → 闭式解对照 → 形状定理检查）。

命令行的完整用法见 src/cli.py（poisson-stop 命令）；这里只跑一个固定的演示，
结果与日志写入 workspace/<日期>/task-N。
"""
from __future__ import annotations

import dotenv
import numpy as np

from src.analytic import dw_solution, dw_value
from src.config import PROBLEMS_DIR, resolve_output_dir
from src.model import load_problem
from src.shape import bundled_suite, verify_shape_theorems
from src.solver import value_iteration
from src.task_logger import TaskLoggerCallbackHandler

dotenv.load_dotenv()


def main() -> None:
    """执行演示流程"""
    task_dir = resolve_output_dir()
    logger = TaskLoggerCallbackHandler(task_dir)

    print("\n" + "=" * 80)
    print("开始执行演示流程：值迭代 → 闭式解对照 → 形状定理检查")
    print("=" * 80 + "\n")
    print(f"日志目录: {task_dir}\n")

    logger.set_current_node("solve")
    p = load_problem(PROBLEMS_DIR / "dw.json")
    V, report = value_iteration(p)
    sol = dw_solution(K=1.0, sigma=0.2, mu=0.05, beta=0.1, lam=1.0)
    x = V.grid.nodes
    window = (x >= 0.1) & (x <= 3.0)
    error = float(np.max(np.abs(V.values[window] - dw_value(sol, x[window]))))
    logger.log_event("solve_finished", f"dw: n={report.iterations}, sup 误差={error:.2e}",
                     iterations=report.iterations, sup_error=error, L=sol.L)
    print(f"Dupuis–Wang: 迭代 {report.iterations} 次, L={sol.L:.6f}, [0.1, 3] 上的 sup 误差 {error:.2e}")

    logger.set_current_node("check")
    suite = verify_shape_theorems(bundled_suite(), callbacks=[logger])
    for verdict in suite.verdicts:
        outcomes = ", ".join(f"{c.name}={c.outcome}" for c in verdict.checks)
        print(f"  {verdict.problem:<16} {'通过' if verdict.passed else '失败'}  {outcomes}")

    summary = logger.write_summary({"dw_sup_error": error, "shape_passed": suite.passed})
    print("\n" + "=" * 80)
    print(f"流程执行完成，摘要: {summary}")
    print("=" * 80 + "\n")


if __name__ == "__main__":
    main()
