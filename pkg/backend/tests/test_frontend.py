"""
Verilog 前端测试

- 端口 / wire 声明与位宽推断
- wire 内联进输出项
- 不支持的构造与语法错误带行号
- 打印后再解析，函数不变
- 基准目录里的每个文件都能解析
"""

import os
import random
import sys

PROJECT_ROOT = os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
if PROJECT_ROOT not in sys.path:
    sys.path.insert(0, PROJECT_ROOT)

import pytest

from engine.corpus import BENCH_DIR, corpus_files, fir3, mcm
from engine.errors import UnsupportedConstruct, VerilogSyntaxError, WidthInferenceError
from engine.ir import Node, Signage, equivalent_bounded, eval_term
from engine.verilog_parser import parse_verilog, print_verilog

ADDER = """
module add8 (
  input [7:0] a,
  input [7:0] b,
  output [8:0] y
);
  assign y = a + b;
endmodule
"""


def out(text, name):
    return parse_verilog(text).output_terms()[name]


# ---------------------------------------------------------------------------
# 声明与位宽
# ---------------------------------------------------------------------------

class TestDeclarations:
    def test_ports(self):
        mod = parse_verilog(ADDER)
        assert mod.name == "add8"
        assert mod.inputs == [("a", 8, Signage.UNSIGN), ("b", 8, Signage.UNSIGN)]
        assert mod.outputs == [("y", 9)]

    def test_carry_is_kept_in_wider_context(self):
        assert eval_term(out(ADDER, "y"), {"a": 255, "b": 255}) == 510

    def test_narrow_lhs_truncates(self):
        text = ADDER.replace("output [8:0] y", "output [3:0] y")
        assert eval_term(out(text, "y"), {"a": 15, "b": 1}) == 0

    def test_signed_inputs_extend(self):
        text = """
        module s (input signed [3:0] a, input signed [3:0] b, output signed [7:0] y);
          assign y = a + b;
        endmodule
        """
        assert eval_term(out(text, "y"), {"a": 15, "b": 0}) == 255

    def test_mixed_signedness_is_unsigned(self):
        text = """
        module s (input signed [3:0] a, input [3:0] b, output [7:0] y);
          assign y = a + b;
        endmodule
        """
        assert eval_term(out(text, "y"), {"a": 15, "b": 0}) == 15

    def test_sized_literal_and_selects(self):
        text = """
        module sel (input [7:0] a, output [3:0] hi, output lo);
          assign hi = a[7:4] + 4'd1;
          assign lo = a[0];
        endmodule
        """
        mod = parse_verilog(text)
        terms = mod.output_terms()
        assert eval_term(terms["hi"], {"a": 0xA5}) == 0xB
        assert eval_term(terms["lo"], {"a": 0xA5}) == 1

    def test_concat_and_replication(self):
        text = """
        module c (input [3:0] a, input [3:0] b, output [15:0] y);
          assign y = {a, b, {2{a[1:0]}}};
        endmodule
        """
        # {1001, 0011, 01, 01}
        assert eval_term(out(text, "y"), {"a": 0x9, "b": 0x3}) == 0x935


# ---------------------------------------------------------------------------
# wire 内联
# ---------------------------------------------------------------------------

class TestWires:
    def test_wire_is_inlined(self):
        text = """
        module w (input [7:0] a, input [7:0] b, output [7:0] y);
          wire [7:0] t;
          assign t = a & b;
          assign y = t | a;
        endmodule
        """
        mod = parse_verilog(text)
        y = mod.output_terms()["y"]
        assert isinstance(y, Node) and y.op == "|"
        assert isinstance(y.args[0].term, Node) and y.args[0].term.op == "&"
        assert [n for n, _ in mod.bindings] == ["t", "y"]

    def test_declaration_with_initializer(self):
        mod = parse_verilog((BENCH_DIR / "shift_mult.v").read_text())
        y = mod.output_terms()["y"]
        # 左值 16 位，移位节点直接按 16 位建，乘积仍是 32 位
        assert y.op == "<<" and y.width == 16
        prod = y.args[0]
        assert prod.width == 32 and prod.term.op == "*"

    def test_out_of_order_assigns(self):
        text = """
        module o (input [3:0] a, output [3:0] y);
          assign y = t + 4'd1;
          wire [3:0] t = a ^ 4'd15;
        endmodule
        """
        assert eval_term(out(text, "y"), {"a": 0}) == 0


# ---------------------------------------------------------------------------
# 错误
# ---------------------------------------------------------------------------

class TestErrors:
    def test_syntax_error_has_line(self):
        text = "module m (input a, output y);\n  assign y = a +;\nendmodule\n"
        with pytest.raises(VerilogSyntaxError) as exc:
            parse_verilog(text)
        assert exc.value.line == 2

    def test_division_is_unsupported(self):
        text = "module m (input [3:0] a, output [3:0] y);\n  assign y = a / 4'd2;\nendmodule\n"
        with pytest.raises(UnsupportedConstruct):
            parse_verilog(text)

    def test_always_block_is_unsupported(self):
        text = "module m (input a, output reg y);\n  always @(*) y = a;\nendmodule\n"
        with pytest.raises(UnsupportedConstruct):
            parse_verilog(text)

    def test_undriven_output(self):
        text = "module m (input a, output y, output z);\n  assign y = a;\nendmodule\n"
        with pytest.raises(WidthInferenceError):
            parse_verilog(text)

    def test_undeclared_signal(self):
        text = "module m (input a, output y);\n  assign y = a & q;\nendmodule\n"
        with pytest.raises(WidthInferenceError):
            parse_verilog(text)

    def test_combinational_loop(self):
        text = """
        module m (input a, output y);
          wire p;
          wire q;
          assign p = q & a;
          assign q = p | a;
          assign y = p;
        endmodule
        """
        with pytest.raises(UnsupportedConstruct):
            parse_verilog(text)


# ---------------------------------------------------------------------------
# 打印 → 再解析
# ---------------------------------------------------------------------------

def _reparse_equivalent(text):
    mod = parse_verilog(text)
    again = parse_verilog(print_verilog(mod))
    assert [o for o, _ in again.outputs] == [o for o, _ in mod.outputs]
    widths = mod.input_widths()
    t1, t2 = mod.output_terms(), again.output_terms()
    for o, _ in mod.outputs:
        if sum(widths.values()) <= 24:
            ok, cex = equivalent_bounded(t1[o], t2[o], widths)
            assert ok, (o, cex)
        else:
            rng = random.Random(0)
            for _ in range(200):
                env = {n: rng.getrandbits(w) for n, w in widths.items()}
                assert eval_term(t1[o], env) == eval_term(t2[o], env), (o, env)


@pytest.mark.parametrize("path", corpus_files(), ids=lambda p: p.stem)
def test_corpus_reparses(path):
    _reparse_equivalent(path.read_text())


def test_generated_designs_parse():
    _reparse_equivalent(fir3(3))
    mod = parse_verilog(mcm([3, 7, 21]))
    assert [o for o, _ in mod.outputs] == ["y3", "y7", "y21"]
    assert eval_term(mod.output_terms()["y21"], {"x": 255}) == 255 * 21
