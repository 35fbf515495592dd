"""
命令行入口的单元测试
"""
import json

import numpy as np
import pandas as pd
import pytest

from src.analytic import dw_solution
from src.config import PROBLEMS_DIR
from .cli import EXIT_ASSUMPTION, EXIT_OK, EXIT_USAGE, run


def problem_path(name: str) -> str:
    return str(PROBLEMS_DIR / f"{name}.json")


class TestRun:
    """测试子命令、退出码与输出文件"""

    def test_validate_sa3_failure(self, tmp_path):
        """测试 eg2_5 的 validate 以退出码 2 结束并给出 SA3 失败细节"""
        code = run(["validate", "--problem", problem_path("eg2_5"), "--out", str(tmp_path)])
        assert code == EXIT_ASSUMPTION
        report = json.loads((tmp_path / "validate.json").read_text(encoding="utf-8"))
        assert report["status"]["SA3"] == "fail"
        assert any(c["assumption"] == "SA3" and c["status"] == "fail" for c in report["checks"])

    def test_validate_passes(self, tmp_path):
        """测试假设成立的问题以退出码 0 结束"""
        assert run(["validate", "--problem", problem_path("dw"), "--out", str(tmp_path)]) == EXIT_OK

    def test_oracle_csv(self, tmp_path):
        """测试 dw 闭式解的 CSV 表头与 L 处的连续性"""
        code = run([
            "oracle", "--example", "dw", "--K", "1", "--sigma", "0.2", "--mu", "0.05",
            "--beta", "0.1", "--lambda", "1", "--out", str(tmp_path),
        ])
        assert code == EXIT_OK
        text = (tmp_path / "oracle.csv").read_text(encoding="utf-8")
        assert text.splitlines()[0] == "x,value,payoff,psi"
        frame = pd.read_csv(tmp_path / "oracle.csv")
        L = dw_solution(K=1.0, sigma=0.2, mu=0.05, beta=0.1, lam=1.0).L
        below = frame[frame.x < L].iloc[-1]
        above = frame[frame.x >= L].iloc[0]
        slope = (above.value - below.value) / (above.x - below.x)
        assert 0.0 < slope < 2.0

    def test_oracle_unknown_parameter(self, tmp_path):
        """测试闭式解不接受的参数以退出码 1 结束"""
        code = run(["oracle", "--example", "sinh", "--K", "1", "--out", str(tmp_path)])
        assert code == EXIT_USAGE

    def test_solve_psi_half(self, tmp_path):
        """测试 solve 的表头与 Ψ≡1/2 的不动点"""
        code = run(["solve", "--problem", problem_path("psi_half"), "--grid-nodes", "201", "--out", str(tmp_path)])
        assert code == EXIT_OK
        text = (tmp_path / "solve.csv").read_text(encoding="utf-8")
        assert text.splitlines()[0] == "x,V,g,psi,H"
        frame = pd.read_csv(tmp_path / "solve.csv")
        np.testing.assert_allclose(frame.V.iloc[1:-1], 0.5, atol=1e-5)
        assert (frame.H >= frame.g).all()
        report = json.loads((tmp_path / "solve_report.json").read_text(encoding="utf-8"))
        assert report["iteration"]["converged"]
        assert "wall_time" not in report["iteration"]

    def test_solve_json_format(self, tmp_path):
        """测试 --format json 输出记录列表"""
        code = run(["solve", "--problem", problem_path("psi_half"), "--grid-nodes", "101",
                    "--format", "json", "--out", str(tmp_path)])
        assert code == EXIT_OK
        records = json.loads((tmp_path / "solve.json").read_text(encoding="utf-8"))
        assert len(records) == 101
        assert set(records[0]) == {"x", "V", "g", "psi", "H"}

    def test_byte_identical(self, tmp_path):
        """测试相同配置与种子的输出逐字节相同"""
        outputs = []
        for sub in ("a", "b"):
            out = tmp_path / sub
            out.mkdir()
            args = ["simulate", "--problem", problem_path("dw"), "--x", "1", "--paths", "2000",
                    "--seed", "5", "--out", str(out)]
            assert run(args) == EXIT_OK
            outputs.append((out / "simulate.json").read_bytes())
        assert outputs[0] == outputs[1]

    def test_config_echo(self, tmp_path, capsys):
        """测试解析后的配置回显到标准输出并写入 config.json"""
        run(["validate", "--problem", problem_path("dw"), "--out", str(tmp_path)])
        echoed = capsys.readouterr().out
        config = json.loads((tmp_path / "config.json").read_text(encoding="utf-8"))
        assert json.loads(echoed) == config
        assert config["seed"] == 42
        assert config["tol"] == 1e-8
        assert config["paths"] == 100000

    def test_simulate_sa3_failure(self, tmp_path):
        """测试时间变换假设不成立时 simulate 以退出码 2 结束"""
        code = run(["simulate", "--problem", problem_path("eg2_5"), "--x", "0.5", "--paths", "100",
                    "--out", str(tmp_path)])
        assert code == EXIT_ASSUMPTION
        assert (tmp_path / "assumptions.json").exists()

    def test_policy_needs_threshold(self, tmp_path):
        """测试 policy 估计缺少阈值时报用法错误"""
        code = run(["simulate", "--problem", problem_path("dw"), "--estimator", "policy", "--out", str(tmp_path)])
        assert code == EXIT_USAGE

    def test_transform_and_classify(self, tmp_path):
        """测试 transform 与 classify 的输出"""
        assert run(["transform", "--problem", problem_path("eg2_2"), "--points", "65", "--out", str(tmp_path)]) == EXIT_OK
        frame = pd.read_csv(tmp_path / "transform.csv")
        assert list(frame.columns) == ["x", "s", "s_prime", "eta", "y_vol", "y_drift"]
        assert (np.diff(frame.s) > 0).all()
        assert run(["classify", "--problem", problem_path("dw_martingale"), "--out", str(tmp_path)]) == EXIT_OK
        data = json.loads((tmp_path / "classify.json").read_text(encoding="utf-8"))
        assert [e["kind"] for e in data["endpoints"]] == ["natural", "natural"]

    def test_check_problem(self, tmp_path):
        """测试单个问题的形状检查与日志文件"""
        code = run(["check", "--suite", "problem", "--problem", problem_path("psi_half"),
                    "--grid-nodes", "401", "--out", str(tmp_path)])
        assert code == EXIT_OK
        data = json.loads((tmp_path / "check.json").read_text(encoding="utf-8"))
        assert data["passed"]
        assert data["shape"]["problems"][0]["problem"] == "psi_half"
        events = [json.loads(line) for line in (tmp_path / "execution_log.jsonl").read_text(encoding="utf-8").splitlines()]
        assert any(e["event_type"] == "node_output" and e["node_name"] == "verify" for e in events)
        summary = json.loads((tmp_path / "summary.json").read_text(encoding="utf-8"))
        assert summary["outcome"]["exit_code"] == EXIT_OK

    @pytest.mark.slow
    def test_check_growth(self, tmp_path):
        """测试增长条件套件：有界收益与指数布朗运动成立，e^(x²) 无法判定或不成立"""
        assert run(["check", "--suite", "growth", "--out", str(tmp_path)]) == EXIT_OK
        data = json.loads((tmp_path / "check.json").read_text(encoding="utf-8"))
        problems = {p["problem"]: p for p in data["growth"]["problems"]}
        assert list(problems) == ["eg2_5", "linear_payoff", "exp_square"]
        assert problems["eg2_5"]["verdict"] == "holds"
        assert problems["eg2_5"]["n_paths"] == 0
        assert problems["linear_payoff"]["verdict"] == "holds"
        assert problems["exp_square"]["verdict"] in ("inconclusive", "fails")
        assert problems["exp_square"]["n_paths"] > 0
        assert problems["exp_square"]["expected"] == ["inconclusive", "fails"]
        assert data["growth"]["passed"]

    @pytest.mark.slow
    def test_check_shape(self, tmp_path):
        """测试形状套件以退出码 0 结束"""
        code = run(["check", "--suite", "shape", "--suite-size", "5", "--out", str(tmp_path)])
        assert code == EXIT_OK


class TestErrors:
    """测试用法与 IO 错误"""

    def test_missing_output_directory(self, tmp_path):
        """测试输出目录不存在时以退出码 1 结束"""
        code = run(["validate", "--problem", problem_path("dw"), "--out", str(tmp_path / "missing")])
        assert code == EXIT_USAGE

    def test_unknown_flag(self, tmp_path):
        """测试未知参数以退出码 1 结束"""
        assert run(["solve", "--bogus", "--out", str(tmp_path)]) == EXIT_USAGE

    def test_missing_subcommand(self):
        """测试缺少子命令"""
        assert run([]) == EXIT_USAGE

    def test_malformed_problem_file(self, tmp_path, capsys):
        """测试格式错误的问题文件报出位置并以退出码 1 结束"""
        bad = tmp_path / "bad.json"
        bad.write_text('{"vol": "1",\n "drift": }', encoding="utf-8")
        code = run(["validate", "--problem", str(bad), "--out", str(tmp_path)])
        assert code == EXIT_USAGE
        err = capsys.readouterr().err
        assert "bad.json" in err
        assert "2" in err

    def test_missing_problem_flag(self, tmp_path):
        """测试需要问题文件的子命令缺少 --problem"""
        assert run(["solve", "--out", str(tmp_path)]) == EXIT_USAGE


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
