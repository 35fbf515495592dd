"""
任务执行日志记录器

基于 langchain_core 的 BaseCallbackHandler：定理验证流水线的节点事件通过回调进入日志，
CLI 再用 log_event 写入领域事件（求解完成、假设失败、蒙特卡洛标记、套件结论）。
日志里有时间戳与墙钟时间，结果文件里没有。
"""
from __future__ import annotations

import json
import threading
import warnings
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, Iterable, Optional
from uuid import UUID

from langchain_core.callbacks import BaseCallbackHandler

# 文本日志里单条内容的截断长度
PREVIEW_CHARS = 400


def _preview(text: str, trim: bool) -> str:
    if trim and len(text) > PREVIEW_CHARS:
        half = PREVIEW_CHARS // 2
        return text[:half] + "\n...\n" + text[-half:]
    return text


def _jsonable(value: Any) -> Any:
    """尽量转成可序列化的结构；带 to_json 的对象用它，其余退化为字符串"""
    if hasattr(value, "to_json"):
        return value.to_json()
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (str, int, float, bool)) or value is None:
        return value
    return str(value)


class TaskLoggerCallbackHandler(BaseCallbackHandler):
    """任务执行日志记录器

    在任务目录写 execution_log.jsonl（每行一个 JSON 对象）与 execution_log.txt，
    结束时写 summary.json。批量运行时多个线程共用一个实例，写文件加锁。
    """

    def __init__(self, task_dir: Path, trim_log: bool = True):
        """
        Args:
            task_dir: 日志目录，必须已存在
            trim_log: 文本日志中是否截断过长的内容
        """
        self.task_dir = Path(task_dir)
        self.jsonl_log = self.task_dir / "execution_log.jsonl"
        self.text_log = self.task_dir / "execution_log.txt"
        self.trim_log = trim_log

        self.current_node: Optional[str] = None
        self.event_counts: Dict[str, int] = {}
        self._runs: Dict[UUID, str] = {}
        self._lock = threading.Lock()
        self._init_log_files()

    def _init_log_files(self) -> None:
        """写入文本日志头部，清空结构化日志"""
        timestamp = datetime.now().isoformat()
        with open(self.text_log, "w", encoding="utf-8") as f:
            f.write(f"{'=' * 80}\n")
            f.write("Poisson 停时 执行日志\n")
            f.write(f"开始时间: {timestamp}\n")
            f.write(f"{'=' * 80}\n\n")
        self.jsonl_log.write_text("", encoding="utf-8")

    def _write_jsonl(self, event_type: str, data: Dict[str, Any], node_name: Optional[str] = None) -> None:
        entry = {
            "timestamp": datetime.now().isoformat(),
            "event_type": event_type,
            "node_name": node_name if node_name is not None else self.current_node,
            "data": _jsonable(data),
        }
        with self._lock:
            self.event_counts[event_type] = self.event_counts.get(event_type, 0) + 1
            with open(self.jsonl_log, "a", encoding="utf-8") as f:
                f.write(json.dumps(entry, ensure_ascii=False) + "\n")

    def _write_text(self, message: str) -> None:
        with self._lock:
            with open(self.text_log, "a", encoding="utf-8") as f:
                f.write(f"{message}\n")

    def set_current_node(self, node_name: str) -> None:
        """设置当前阶段（CLI 的子命令或流水线节点）"""
        self.current_node = node_name
        self._write_text(f"\n{'=' * 80}")
        self._write_text(f"进入阶段: {node_name}")
        self._write_text(f"{'=' * 80}")
        self._write_jsonl("node_start", {"node_name": node_name})

    def log_event(self, event_type: str, message: str, **data: Any) -> None:
        """领域事件：文本日志一行摘要，结构化日志带完整数据"""
        self._write_text(f"[{event_type}] {_preview(message, self.trim_log)}")
        self._write_jsonl(event_type, {"message": message, **data})

    def log_warnings(self, caught: Iterable[warnings.WarningMessage]) -> None:
        """记录 warnings.catch_warnings(record=True) 捕获的警告"""
        for w in caught:
            self.log_event("warning", str(w.message), category=w.category.__name__)

    def log_node_output(self, node_name: str, output: Dict[str, Any]) -> None:
        """记录节点输出；数组与大对象只记摘要"""
        filtered: Dict[str, Any] = {}
        for key, value in output.items():
            if key in ("execution_history", "error_messages"):
                if value:
                    filtered[key] = {"count": len(value), "latest": value[-1]}
            elif key in ("value", "iteration", "problem"):
                filtered[key] = f"<{type(value).__name__}>"
            else:
                filtered[key] = value
        self._write_jsonl("node_output", {"node_name": node_name, "output": filtered}, node_name)
        if output.get("execution_history"):
            self._write_text(f"  [{node_name}] {output['execution_history'][-1]}")
        for message in output.get("error_messages") or ():
            self._write_text(f"  [{node_name}] 错误: {message}")

    # Chain 回调：LangGraph 的每个节点是一次 chain run
    @staticmethod
    def _node_of(kwargs: Dict[str, Any]) -> Optional[str]:
        metadata = kwargs.get("metadata") or {}
        return metadata.get("langgraph_node")

    def on_chain_start(
        self,
        serialized: Optional[Dict[str, Any]],
        inputs: Dict[str, Any],
        *,
        run_id: UUID,
        **kwargs: Any,
    ) -> None:
        node = self._node_of(kwargs)
        if node is None or node != kwargs.get("name"):
            return
        with self._lock:
            # 节点外层序列与内层可调用对象同名，只记外层
            if self._runs.get(kwargs.get("parent_run_id")) == node:
                return
            self._runs[run_id] = node
        self._write_jsonl("node_start", {"node_name": node}, node)

    def on_chain_end(self, outputs: Any, *, run_id: UUID, **kwargs: Any) -> None:
        with self._lock:
            node = self._runs.pop(run_id, None)
        if node is not None and isinstance(outputs, dict):
            try:
                self.log_node_output(node, outputs)
            except Exception as e:
                self._write_text(f"[ERROR] 节点输出记录失败: {e}")

    def on_chain_error(self, error: BaseException, *, run_id: UUID, **kwargs: Any) -> None:
        with self._lock:
            node = self._runs.pop(run_id, None)
        self._write_text(f"[Chain] 执行出错: {error}")
        self._write_jsonl("chain_error", {"error": str(error)}, node)

    def write_summary(self, outcome: Optional[Dict[str, Any]] = None) -> Path:
        """写入执行摘要，返回 summary.json 的路径"""
        summary_path = self.task_dir / "summary.json"
        summary: Dict[str, Any] = {
            "end_time": datetime.now().isoformat(),
            "log_files": {"jsonl": str(self.jsonl_log), "text": str(self.text_log)},
            "event_counts": dict(sorted(self.event_counts.items())),
        }
        if outcome:
            summary["outcome"] = _jsonable(outcome)
        with open(summary_path, "w", encoding="utf-8") as f:
            json.dump(summary, f, ensure_ascii=False, indent=2)

        self._write_text(f"\n{'=' * 80}")
        self._write_text("执行完成")
        self._write_text(f"摘要文件: {summary_path}")
        self._write_text(f"{'=' * 80}\n")
        return summary_path
