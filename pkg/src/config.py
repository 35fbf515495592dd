from pathlib import Path
from datetime import datetime
import os
import re

import dotenv

dotenv.load_dotenv()

ROOT_DIR = Path(__file__).parent.parent
PROBLEMS_DIR = ROOT_DIR / "data" / "problems"

# 线程数上限的环境变量名
THREADS_ENV = "POISSON_STOP_THREADS"


def get_task_directory(base_dir):
    """
    获取可用的task目录
    如果最大编号的task文件夹为空，则直接使用；否则创建新的task文件夹
    """
    task_pattern = re.compile(r'^task-(\d+)$')
    max_number = 0
    max_task_dir = None

    if base_dir.exists():
        for item in base_dir.iterdir():
            if item.is_dir():
                match = task_pattern.match(item.name)
                if match:
                    number = int(match.group(1))
                    if number > max_number:
                        max_number = number
                        max_task_dir = item

    # 最大编号的文件夹为空时直接复用（忽略隐藏文件）
    if max_task_dir and max_task_dir.exists():
        contents = [item for item in max_task_dir.iterdir() if not item.name.startswith('.')]
        if not contents:
            return max_task_dir

    new_task_dir = base_dir / f"task-{max_number + 1}"
    new_task_dir.mkdir(parents=True, exist_ok=True)
    return new_task_dir


def resolve_output_dir(out: str | Path | None = None) -> Path:
    """
    确定本次运行的输出目录

    - 指定了 out：目录必须已存在，否则抛出 FileNotFoundError
    - 未指定：使用 workspace/<yyyy-mm-dd>/task-N
    """
    if out is not None:
        path = Path(out)
        if not path.is_dir():
            raise FileNotFoundError(f"输出目录不存在: {path}")
        return path
    today_str = datetime.now().strftime("%Y-%m-%d")
    output_dir = ROOT_DIR / "workspace" / today_str
    output_dir.mkdir(parents=True, exist_ok=True)
    return get_task_directory(output_dir)


def worker_count() -> int:
    """工作线程数上限，读取 POISSON_STOP_THREADS，默认取 CPU 数"""
    raw = os.environ.get(THREADS_ENV, "").strip()
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            return 1
    return max(1, os.cpu_count() or 1)


configurable = {
    # 网格与迭代
    "grid_nodes": 2001,
    "grid_spacing": "log",
    "min_grid_nodes": 16,
    "tol": 1e-8,
    "max_n": 10000,
    "rate_cap_factor": 1e4,
    "truncation_ratio": 50.0,
    "line_half_width_sd": 10.0,
    "residual_collar": 2,
    # 求积与发散判据
    "divergence_factor": 10.0,
    "divergence_levels": 4,
    "stall_ratio": 0.95,
    "refinement_budget": 16,
    "quad_rtol": 1e-6,
    # 尺度函数制表
    "scale_nodes": 4096,
    "scale_rtol": 1e-8,
    "scale_max_doublings": 4,
    # 形状检测
    "shape_tol_solver": 1e-6,
    "shape_tol_analytic": 1e-10,
    "probe_nodes": 2049,
    # 蒙特卡洛
    "paths": 100000,
    "seed": 42,
    "horizon_factor": 40.0,
    "steps_per_unit": 100,
    "unfinished_mass": 1e-6,
    "chunk_size": 4096,
    "growth_epsilon": 1e-2,
    # 输出
    "format": "csv",
}
