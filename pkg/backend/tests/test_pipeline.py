"""
端到端流程测试

- 先乘后移：乘法缩到 16 位，代价严格下降，证书验证通过
- 单个加法：没有可改进的地方，代价不变
- 到达限制且没有改进：退出码 3
- 基准：单个基准失败不影响其它基准
- MCM、位宽扫描与整套基准的证书验证较慢，标记为 slow
- 证书代价轨迹：先升后降的判定
"""

import json
import os
import sys

PROJECT_ROOT = os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
if PROJECT_ROOT not in sys.path:
    sys.path.insert(0, PROJECT_ROOT)

import pytest

from engine.config import RunConfig
from engine.corpus import BENCH_DIR, overrides_for
from engine.egraph import CONST_FOLD
from engine.errors import VerilogSyntaxError
from engine.ir import Node, iter_subterms
from engine.pipeline import bench, format_table, optimize, optimize_file, sweep, transitions, write_bench
from engine.proof import VERIFIED, ProofCertificate, StepRecord
from engine.verilog_parser import parse_verilog

ADD8 = """module add8 (
  input [7:0] a,
  input [7:0] b,
  output [8:0] y
);
  assign y = a + b;
endmodule
"""

SMALL = RunConfig(max_iters=6, max_nodes=5000, ilp_timeout=30)


def _nodes(t, op):
    return [n for n in iter_subterms(t) if isinstance(n, Node) and n.op == op]


# ---------------------------------------------------------------------------
# 单个设计
# ---------------------------------------------------------------------------

class TestShiftMult:
    @pytest.fixture(scope="class")
    def result(self):
        config = RunConfig(max_iters=6, max_nodes=5000, ilp_timeout=30).with_rules("exchange")
        return optimize_file(BENCH_DIR / "shift_mult.v", config)

    def test_cost_strictly_decreases(self, result):
        assert result.cost_after < result.cost_before
        assert result.improved and result.exit_code == 0

    def test_multiplier_is_narrowed(self, result):
        muls = _nodes(result.terms["y"], "*")
        assert muls and all(int(m.width) <= 16 for m in muls)

    def test_certificate(self, result):
        cert = result.certificate
        assert "left-shift-mult" in cert.rules
        assert cert.modules[-1] == result.verilog
        assert result.verification is not None
        # 证书的每一步都有结论
        assert all(s.verdict for s in cert.steps)

    def test_output_module(self, result):
        mod = parse_verilog(result.verilog)
        assert mod.name == "shift_mult"
        assert [n for n, _, _ in mod.inputs] == ["a", "b", "s"]
        assert mod.outputs == [("y", 16)]


class TestTrivial:
    def test_single_adder_is_unchanged(self):
        result = optimize(ADD8, SMALL)
        assert result.cost_after == result.cost_before == 12 * 9
        assert not result.improved
        assert result.saturation.stop_reason == "saturated"
        assert result.exit_code == 0
        assert len(result.certificate) >= 1

    def test_limit_without_gain(self):
        result = optimize(ADD8, RunConfig(max_iters=1))
        assert result.limit_hit
        assert result.exit_code == 3

    def test_greedy_only(self):
        result = optimize(ADD8, RunConfig(extract="greedy", verify=False))
        assert result.extraction.status == "greedy"
        assert result.certificate is None and result.verification is None

    def test_parse_error(self):
        with pytest.raises(VerilogSyntaxError):
            optimize("module m (input a, output y);\n  assign y = ;\nendmodule\n", SMALL)

    def test_files_are_written(self, tmp_path):
        config = SMALL.model_copy(update={
            "output": str(tmp_path / "out" / "add8.v"),
            "emit_cert": str(tmp_path / "cert"),
            "dump_egraph": str(tmp_path / "eg.dot"),
            "export_lp": str(tmp_path / "extract.lp"),
        })
        result = optimize(ADD8, config)
        assert (tmp_path / "out" / "add8.v").read_text() == result.verilog
        manifest = json.loads((tmp_path / "cert" / "manifest.json").read_text())
        assert manifest["length"] == len(result.certificate)
        assert (tmp_path / "eg.dot").read_text().startswith("digraph")
        assert "Minimize" in (tmp_path / "extract.lp").read_text()

    def test_report(self):
        rep = optimize(ADD8, SMALL).report()
        assert rep["design"] == "add8"
        assert rep["certificate"]["cost_trajectory"][0] == rep["cost_before"]
        assert rep["verification"]["fully_verified"]


def test_wire_names_are_kept():
    text = """module keep (
  input [3:0] a,
  input [3:0] b,
  input [3:0] c,
  output [3:0] y,
  output [3:0] z
);
  wire [3:0] t = a & b;
  assign y = t | c;
  assign z = t ^ c;
endmodule
"""
    result = optimize(text, SMALL)
    assert "assign t =" in result.verilog


# ---------------------------------------------------------------------------
# 基准
# ---------------------------------------------------------------------------

class TestBench:
    def test_failure_is_isolated(self, tmp_path):
        (tmp_path / "a_good.v").write_text(ADD8)
        (tmp_path / "b_bad.v").write_text("module bad (input a, output y);\n  assign y = a / 2;\nendmodule\n")
        rows = bench(tmp_path, SMALL)
        assert [r["name"] for r in rows] == ["a_good", "b_bad"]
        assert rows[0].get("error") is None and rows[0]["cost_after"] == 12 * 9
        assert rows[1]["status"] == "failed" and "[frontend]" in rows[1]["error"]

    def test_sidecar_overrides(self, tmp_path):
        (tmp_path / "a.v").write_text(ADD8)
        (tmp_path / "a.json").write_text(json.dumps({"extract": "greedy", "max_iters": 2}))
        assert overrides_for(tmp_path / "a.v") == {"extract": "greedy", "max_iters": 2}
        (row,) = bench(tmp_path, SMALL)
        assert row["status"] == "greedy"

    def test_table_and_files(self, tmp_path):
        rows = [
            {"name": "x", "status": "optimal", "cost_after": 10},
            {"name": "y", "status": "incumbent", "ilp_timeout": True},
        ]
        table = format_table(rows)
        assert table.splitlines()[0].startswith("name")
        assert "incumbent*" in table
        assert table.rstrip().endswith("incumbent reported")
        out = write_bench(rows, tmp_path / "reports")
        assert json.loads((out / "bench.json").read_text()) == rows
        assert (out / "bench.txt").read_text() == table


@pytest.mark.slow
def test_mcm_shares_intermediate_products():
    path = BENCH_DIR / "mcm_3_7_21.v"
    config = RunConfig(**overrides_for(path))
    result = optimize_file(path, config)
    # 直接实现需要 1 + 1 + 2 个加法器
    assert result.adders_before == 4
    assert result.adders_after <= 3
    assert result.cost_after <= result.greedy_cost


@pytest.mark.slow
def test_mcm_three_constants_uses_four_adders():
    path = BENCH_DIR / "mcm_7_19_31.v"
    result = optimize_file(path, RunConfig(**overrides_for(path)))
    # 7 与 31 各需一个加法器，19 需要两个
    assert result.adders_before == 4
    assert result.adders_after == 4
    assert result.cost_after <= result.greedy_cost
    assert result.verification.fully_verified


@pytest.mark.slow
def test_sweep():
    rows = sweep([2, 3], RunConfig(max_iters=3, max_nodes=5000, ilp_timeout=30))
    assert [r["width"] for r in rows] == [2, 3]
    assert all(r["cost_after"] <= r["cost_before"] for r in rows)
    assert set(transitions(rows)) <= {3}


@pytest.mark.slow
def test_fir_sweep_is_monotone():
    widths = [4, 8, 16, 32, 64]
    rows = sweep(widths, RunConfig(max_iters=4, max_nodes=5000, ilp_timeout=30))
    costs = [r["cost_after"] for r in rows]
    assert costs == sorted(costs)
    assert all(r["cost_after"] <= r["cost_before"] for r in rows)
    # 结构最多变两次，且不会变回去
    changes = transitions(rows)
    assert len(changes) <= 2
    signatures = [r["signature"] for r in rows]
    seen = []
    for s in signatures:
        if not seen or seen[-1] != s:
            assert s not in seen, signatures
            seen.append(s)


@pytest.mark.slow
@pytest.mark.parametrize("path", sorted(BENCH_DIR.glob("*.v")), ids=lambda p: p.stem)
def test_corpus_certificates_verify(path):
    config = SMALL.model_copy(update=overrides_for(path))
    result = optimize_file(path, config)
    cert, report = result.certificate, result.verification
    assert cert.modules[-1] == result.verilog
    # 只有动态规则（宽位宽下无法缩小）和常数折叠的步可以停在采样
    for step in cert.steps[1:]:
        if step.verdict not in VERIFIED:
            assert step.dynamic or step.rule.startswith(CONST_FOLD), (step.rule, step.verdict)
    if all(s.verdict in VERIFIED for s in cert.steps[1:]):
        assert report.fully_verified


class TestTrajectory:
    def _cert(self, costs):
        steps = [StepRecord(i, cost=c) for i, c in enumerate(costs)]
        return ProofCertificate("m", ["module m; endmodule\n"] * len(costs), steps)

    def test_rise_then_fall(self):
        assert self._cert([300, 420, 360, 240]).non_monotone

    def test_monotone_paths(self):
        assert not self._cert([300, 300, 240]).non_monotone
        assert not self._cert([300, 420]).non_monotone
        assert not self._cert([300]).non_monotone

    def test_shift_mult_descends(self):
        config = RunConfig(max_iters=6, max_nodes=5000, ilp_timeout=30).with_rules("exchange")
        result = optimize_file(BENCH_DIR / "shift_mult.v", config)
        costs = result.certificate.cost_trajectory
        assert costs[0] == result.cost_before and costs[-1] == result.cost_after
        assert not result.trajectory_non_monotone
        assert result.report()["certificate"]["non_monotone"] is False
