"""
后端测试：Verilog 生成、证书生成与逐步验证

- 生成的模块可以被前端解析回来，且函数不变
- 共享子项只生成一次，保留原 wire 名
- 证书：每步一次重写，逐对穷举 / 缩小位宽后穷举 / 采样
- 改坏的一步报 StepFailed 并带反例
"""

import os
import sys

PROJECT_ROOT = os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
if PROJECT_ROOT not in sys.path:
    sys.path.insert(0, PROJECT_ROOT)

import pytest

from engine.codegen import assign_lines, generate_verilog, render_design
from engine.egraph import EGraph
from engine.errors import NonConcrete, StepFailed
from engine.ir import Arg, Node, Signage, Var, equivalent_bounded, eval_term
from engine.proof import ProofCertificate, StepRecord, produce_proof, shrink_map, verify_chain
from engine.rules import rule_by_name
from engine.verilog_parser import parse_verilog

U = Signage.UNSIGN

ADD8 = """module add8 (
  input [7:0] a,
  input [7:0] b,
  output [8:0] y
);
  assign y = a + b;
endmodule
"""

ADD16 = ADD8.replace("add8", "add16").replace("[7:0]", "[15:0]").replace("[8:0]", "[16:0]")

ASSOC16 = """module assoc16 (
  input [15:0] a,
  input [15:0] b,
  input [15:0] c,
  output [17:0] y
);
  wire [16:0] t = a + b;
  assign y = t + c;
endmodule
"""

ASSOC16_RIGHT = ASSOC16.replace("a + b", "b + c").replace("t + c", "a + t")
ASSOC_BINDING = {"w1": 16, "w2": 17, "w3": 18, "s1": "unsign", "s2": "unsign"}

A, B, C = Var("a"), Var("b"), Var("c")
PROD = Node("*", 8, (Arg(4, U, A), Arg(4, U, B)))


def swapped(t: Node) -> Node:
    return Node(t.op, t.width, tuple(reversed(t.args)), t.params)


def certify(text):
    design = parse_verilog(text)
    eg = EGraph(design.input_widths())
    roots = {o: eg.add_term(t) for o, t in design.output_terms().items()}
    eg.run_saturation([rule_by_name("commutativity-add")])
    final = {o: swapped(t) for o, t in design.output_terms().items()}
    return produce_proof(eg, design, roots, final, input_text=text)


# ---------------------------------------------------------------------------
# Verilog 生成
# ---------------------------------------------------------------------------

class TestCodegen:
    INPUTS = [("a", 4, U), ("b", 4, U), ("c", 8, U)]

    def test_round_trip(self):
        design = parse_verilog(ADD8)
        text = render_design(design, design.output_terms())
        again = parse_verilog(text)
        assert again.name == "add8"
        ok, cex = equivalent_bounded(again.output_terms()["y"], design.output_terms()["y"])
        assert ok, cex

    def test_shared_subterm_is_emitted_once(self):
        y1 = Node("+", 8, (Arg(8, U, PROD), Arg(8, U, C)))
        text = generate_verilog("share", self.INPUTS, [("y1", 8), ("y2", 8)], {"y1": y1, "y2": PROD})
        assert text.count("*") == 1
        mod = parse_verilog(text)
        env = {"a": 7, "b": 9, "c": 200}
        terms = mod.output_terms()
        assert eval_term(terms["y1"], env) == (63 + 200) % 256
        assert eval_term(terms["y2"], env) == 63

    def test_preferred_wire_name(self):
        y = Node("+", 8, (Arg(8, U, PROD), Arg(8, U, C)))
        text = generate_verilog("named", self.INPUTS, [("y", 8)], {"y": y}, preferred={PROD: "prod"})
        assert "prod" in assign_lines(text)

    def test_keyword_name_is_replaced(self):
        y = Node("+", 8, (Arg(8, U, PROD), Arg(8, U, C)))
        text = generate_verilog("named", self.INPUTS, [("y", 8)], {"y": y}, preferred={PROD: "module"})
        assert set(assign_lines(text)) == {"t0", "y"}

    def test_unknown_variable(self):
        y = Node("+", 8, (Arg(8, U, Var("z")), Arg(8, U, C)))
        with pytest.raises(NonConcrete):
            generate_verilog("bad", self.INPUTS, [("y", 8)], {"y": y})

    def test_signed_inputs_survive(self):
        text = ("module s (input signed [3:0] a, input signed [3:0] b, output [7:0] y);\n"
                "  assign y = a * b;\nendmodule\n")
        design = parse_verilog(text)
        again = parse_verilog(render_design(design, design.output_terms()))
        assert again.inputs == design.inputs
        ok, cex = equivalent_bounded(again.output_terms()["y"], design.output_terms()["y"])
        assert ok, cex


# ---------------------------------------------------------------------------
# 证书
# ---------------------------------------------------------------------------

class TestCertificate:
    def test_chain(self):
        cert = certify(ADD8)
        assert len(cert) == 2
        assert cert.modules[0] == ADD8
        assert cert.rules == ["commutativity-add"]
        step = cert.steps[1]
        assert step.output == "y" and step.modified == ["y"]
        assert step.binding == {"w1": 9, "w2": 8, "w3": 8, "s1": "unsign", "s2": "unsign"}
        assert cert.cost_trajectory == [12 * 9, 12 * 9]

    def test_write_and_load(self, tmp_path):
        cert = certify(ADD8)
        cert.write(tmp_path / "cert")
        assert (tmp_path / "cert" / "step_1.v").exists()
        again = ProofCertificate.load(tmp_path / "cert")
        assert again.modules == cert.modules
        assert again.rules == cert.rules
        assert verify_chain(again).fully_verified

    def test_no_rewrites_adds_regenerate_step(self):
        design = parse_verilog(ADD8)
        eg = EGraph(design.input_widths())
        roots = {"y": eg.add_term(design.output_terms()["y"])}
        cert = produce_proof(eg, design, roots, design.output_terms(), input_text=ADD8 + "\n")
        assert cert.rules == ["regenerate"]
        assert verify_chain(cert).verdicts == ["exhaustive"]


# ---------------------------------------------------------------------------
# 验证
# ---------------------------------------------------------------------------

class TestVerify:
    def test_exhaustive(self):
        cert = certify(ADD8)
        report = verify_chain(cert)
        assert report.verdicts == ["exhaustive"]
        assert report.endpoint == "exhaustive"
        assert cert.steps[1].verdict == "exhaustive"

    def test_wide_step_is_shrunk(self):
        cert = certify(ADD16)
        report = verify_chain(cert, budget=24, shrink_width=5)
        assert report.verdicts == ["shrunk"]
        assert report.fully_verified

    def test_dynamic_rule_falls_back_to_sampling(self):
        commuted = ADD16.replace("a + b", "b + a")
        cert = ProofCertificate("add16", [ADD16, commuted],
                                [StepRecord(0), StepRecord(1, rule="mult-constant")])
        report = verify_chain(cert)
        assert report.verdicts == ["unverified"]
        assert not report.fully_verified

    def test_broken_step(self):
        bad = ADD8.replace("a + b", "a - b")
        cert = ProofCertificate("add8", [ADD8, bad], [StepRecord(0), StepRecord(1, rule="bogus")])
        with pytest.raises(StepFailed) as exc:
            verify_chain(cert)
        assert exc.value.index == 1
        cex = exc.value.counterexample
        assert (cex["a"] + cex["b"]) % 512 != (cex["a"] - cex["b"]) % 512
        assert cert.steps[1].verdict == "failed"

    def test_conditional_wide_chain_shrinks_endpoint(self):
        cert = ProofCertificate("assoc16", [ASSOC16, ASSOC16_RIGHT],
                                [StepRecord(0), StepRecord(1, rule="associativity-add", binding=ASSOC_BINDING)])
        report = verify_chain(cert, budget=24, shrink_width=5)
        assert report.verdicts == ["shrunk"]
        assert report.endpoint == "shrunk"
        assert report.fully_verified

    def test_endpoint_not_shrunk_without_rule(self):
        cert = ProofCertificate("assoc16", [ASSOC16, ASSOC16_RIGHT], [StepRecord(0), StepRecord(1)])
        report = verify_chain(cert, budget=24, shrink_width=5)
        assert report.verdicts == ["unverified"]
        assert report.endpoint == "unverified"
        assert not report.fully_verified

    def test_endpoint_not_shrunk_after_dynamic_step(self):
        cert = ProofCertificate("assoc16", [ASSOC16, ASSOC16_RIGHT],
                                [StepRecord(0), StepRecord(1, rule="merge-additions", dynamic=True)])
        report = verify_chain(cert, budget=24, shrink_width=5)
        assert report.endpoint == "unverified"
        assert StepRecord.from_dict(cert.steps[1].to_dict()).dynamic

    def test_broken_wide_step_is_caught_by_sampling(self):
        bad = ADD16.replace("a + b", "a ^ b")
        cert = ProofCertificate("add16", [ADD16, bad], [StepRecord(0), StepRecord(1, rule="mult-constant")])
        with pytest.raises(StepFailed):
            verify_chain(cert)


def test_shrink_map_keeps_order():
    assert shrink_map({8, 16, 17}, 5) == {8: 1, 16: 2, 17: 3}
    wmap = shrink_map(set(range(1, 33)), 4)
    assert max(wmap.values()) == 4
    assert all(wmap[a] <= wmap[b] for a, b in zip(range(1, 32), range(2, 33)))
