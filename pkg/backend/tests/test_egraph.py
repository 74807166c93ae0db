"""
e-graph 测试

- 哈希共享与常量折叠
- e-matching 绑定位宽 / 符号 / e-class
- 条件重写：条件成立才合并
- 饱和的停止原因
- 解释：逐步重写序列，相邻两项等价；依赖位宽分析的移位抵消
"""

import json
import os
import sys

PROJECT_ROOT = os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
if PROJECT_ROOT not in sys.path:
    sys.path.insert(0, PROJECT_ROOT)

import pytest

from engine.egraph import EGraph
from engine.errors import AnalysisConflict, NotEquivalentInEGraph
from engine.ir import Const, Signage, Var, equivalent_bounded
from engine.rules import Rewrite, demo_ruleset, rule_by_name
from engine.verilang import parse_pattern, parse_verilang

V = parse_verilang


@pytest.fixture(scope="module")
def comm_add():
    return rule_by_name("commutativity-add")


@pytest.fixture(scope="module")
def assoc_add():
    return rule_by_name("associativity-add")


# ---------------------------------------------------------------------------
# 插入
# ---------------------------------------------------------------------------

class TestInsert:
    def test_same_term_same_class(self):
        eg = EGraph()
        t = V("(* 8 8 unsign (+ 8 4 unsign a 4 unsign b) 8 unsign (+ 8 4 unsign a 4 unsign b))")
        c1 = eg.add_term(t)
        nodes = eg.node_count
        c2 = eg.add_term(V("(* 8 8 unsign (+ 8 4 unsign a 4 unsign b) 8 unsign (+ 8 4 unsign a 4 unsign b))"))
        assert c1 == c2
        assert eg.node_count == nodes
        # a, b, a+b, 积
        assert eg.class_count == 4

    def test_annotations_are_part_of_the_key(self):
        eg = EGraph()
        c1 = eg.add_term(V("(+ 8 4 unsign a 4 unsign b)"))
        c2 = eg.add_term(V("(+ 8 4 sign a 4 unsign b)"))
        assert not eg.equivalent(c1, c2)

    def test_constant_folding(self):
        eg = EGraph()
        c = eg.add_term(V("(+ 4 4 unsign 3 4 unsign 5)"))
        assert eg.const_of(c) == 8
        wrapped = eg.add_term(V("(+ 3 4 unsign 3 4 unsign 5)"))
        assert eg.const_of(wrapped) == 0

    def test_folded_class_holds_the_literal(self):
        eg = EGraph()
        c = eg.add_term(V("(* 8 4 unsign 3 4 unsign 2)"))
        assert eg.lookup_term(Const(6)) == eg.find(c)

    def test_names(self):
        eg = EGraph()
        c = eg.add_term(V("(+ 8 4 unsign a 4 unsign b)"))
        eg.set_name(c, "y")
        assert eg.data(c).names == {"y"}


# ---------------------------------------------------------------------------
# e-matching
# ---------------------------------------------------------------------------

class TestMatch:
    def test_binding_contents(self):
        eg = EGraph()
        root = eg.add_term(V("(+ 8 4 unsign x 3 sign y)"))
        matches = eg.ematch(parse_pattern("(+ w1 w2 s1 a w3 s2 b)"))
        assert len(matches) == 1
        m = matches[0]
        assert (m["w1"], m["w2"], m["w3"]) == (8, 4, 3)
        assert m["s1"] == Signage.UNSIGN and m["s2"] == Signage.SIGN
        assert eg.find(m["a"]) == eg.lookup_term(Var("x"))
        assert m["__root__"] == eg.find(root)

    def test_repeated_variable_needs_same_class(self):
        eg = EGraph()
        eg.add_term(V("(+ 8 4 unsign x 4 unsign y)"))
        eg.add_term(V("(+ 8 4 unsign x 4 unsign x)"))
        matches = eg.ematch(parse_pattern("(+ w1 w2 s1 a w2 s1 a)"))
        assert len(matches) == 1

    def test_constant_matches_consumed_value(self):
        eg = EGraph()
        eg.add_term(V("(* 8 8 unsign x 2 unsign 2)"))
        assert len(eg.ematch(parse_pattern("(* w1 w2 s1 a _ _ 2)"))) == 1
        # 2 位有符号下的 2 是 -2
        eg2 = EGraph()
        eg2.add_term(V("(* 8 8 unsign x 2 sign 2)"))
        assert eg2.ematch(parse_pattern("(* w1 w2 s1 a _ _ 2)")) == []


# ---------------------------------------------------------------------------
# 重写与饱和
# ---------------------------------------------------------------------------

class TestSaturation:
    def test_commutativity(self, comm_add):
        eg = EGraph()
        c = eg.add_term(V("(+ 8 4 unsign a 4 unsign b)"))
        report = eg.run_saturation([comm_add])
        assert report.stop_reason == "saturated"
        assert eg.lookup_term(V("(+ 8 4 unsign b 4 unsign a)")) == eg.find(c)
        assert report.applied["commutativity-add"] >= 1

    def test_condition_allows_merge(self, assoc_add):
        eg = EGraph()
        c = eg.add_term(V("(+ 8 5 unsign (+ 5 4 unsign a 4 unsign b) 4 unsign c)"))
        eg.run_saturation([assoc_add])
        rhs = V("(+ 8 4 unsign a 5 unsign (+ 5 4 unsign b 4 unsign c))")
        assert eg.lookup_term(rhs) == eg.find(c)

    def test_condition_blocks_merge(self, assoc_add):
        eg = EGraph()
        # 内层和截断到 4 位，进位丢失，两侧不等价
        c = eg.add_term(V("(+ 8 4 unsign (+ 4 4 unsign a 4 unsign b) 4 unsign c)"))
        other = eg.add_term(V("(+ 8 4 unsign a 4 unsign (+ 4 4 unsign b 4 unsign c))"))
        eg.run_saturation([assoc_add])
        assert not eg.equivalent(c, other)

    def test_apply_rewrite_status(self, assoc_add):
        eg = EGraph()
        eg.add_term(V("(+ 8 4 unsign (+ 4 4 unsign a 4 unsign b) 4 unsign c)"))
        (m,) = eg.ematch(assoc_add.lhs)
        assert eg.apply_rewrite(assoc_add, m) == "skipped-condition"

    def test_constant_conflict(self):
        bogus = Rewrite(
            name="add-is-mul",
            lhs=parse_pattern("(+ w1 w2 s1 a w3 s2 b)"),
            rhs=parse_pattern("(* w1 w2 s1 a w3 s2 b)"),
        )
        eg = EGraph()
        eg.add_term(V("(+ 4 4 unsign 1 4 unsign 2)"))
        with pytest.raises(AnalysisConflict):
            eg.run_saturation([bogus])

    def test_iteration_limit(self, comm_add, assoc_add):
        eg = EGraph()
        eg.add_term(V("(+ 8 6 unsign (+ 6 4 unsign a 4 unsign b) 4 unsign c)"))
        report = eg.run_saturation([comm_add, assoc_add], max_iters=1)
        assert report.stop_reason == "iter_limit"
        assert len(report.iterations) == 1

    def test_node_limit(self, comm_add, assoc_add):
        eg = EGraph()
        eg.add_term(V("(+ 8 6 unsign (+ 6 4 unsign a 4 unsign b) 4 unsign c)"))
        report = eg.run_saturation([comm_add, assoc_add], max_nodes=eg.node_count + 1)
        assert report.stop_reason == "node_limit"

    def test_report_dict(self, comm_add):
        eg = EGraph()
        eg.add_term(V("(+ 8 4 unsign a 4 unsign b)"))
        d = eg.run_saturation([comm_add]).to_dict()
        assert d["stop_reason"] == "saturated"
        assert d["iterations"][-1]["nodes"] == eg.node_count


# ---------------------------------------------------------------------------
# 解释
# ---------------------------------------------------------------------------

def _assert_chain(steps):
    for before, after in zip(steps, steps[1:]):
        ok, cex = equivalent_bounded(before.term, after.term)
        assert ok, (after.rule, cex)


class TestExplain:
    def test_single_step(self, comm_add):
        eg = EGraph()
        start = V("(+ 8 4 unsign a 4 unsign b)")
        target = V("(+ 8 4 unsign b 4 unsign a)")
        c = eg.add_term(start)
        eg.run_saturation([comm_add])
        steps = eg.explain_detailed(c, target)
        assert steps[0].term == start and steps[0].rule is None
        assert steps[-1].term == target
        assert [s.rule for s in steps[1:]] == ["commutativity-add"]
        assert steps[1].path == ()

    def test_rewrite_below_the_root(self, comm_add):
        eg = EGraph()
        start = V("(* 8 8 unsign (+ 8 4 unsign a 4 unsign b) 8 unsign c)")
        target = V("(* 8 8 unsign (+ 8 4 unsign b 4 unsign a) 8 unsign c)")
        c = eg.add_term(start)
        eg.run_saturation([comm_add])
        steps = eg.explain_detailed(c, target)
        assert len(steps) == 2
        assert steps[1].path == (0,)
        _assert_chain(steps)

    def test_two_rules(self, comm_add, assoc_add):
        eg = EGraph()
        start = V("(+ 8 5 unsign (+ 5 4 unsign a 4 unsign b) 4 unsign c)")
        target = V("(+ 8 4 unsign a 5 unsign (+ 5 4 unsign c 4 unsign b))")
        c = eg.add_term(start)
        eg.run_saturation([comm_add, assoc_add], max_iters=4)
        steps = eg.explain_detailed(c, target)
        assert steps[-1].term == target
        assert {"associativity-add", "commutativity-add"} <= {s.rule for s in steps[1:]}
        _assert_chain(steps)

    def test_shift_cancel_needs_width_analysis(self):
        # (x×2)≫1：先改成移位，再靠 x 只有 4 位把移位抵消掉
        eg = EGraph({"x": 4})
        start = V("(>> 8 8 unsign (* 8 4 unsign x 2 unsign 2) 1 unsign 1)")
        c = eg.add_term(start)
        eg.run_saturation(demo_ruleset())
        steps = eg.explain_detailed(c, Var("x"))
        assert [s.rule for s in steps[1:]] == ["mult-by-two", "shift-cancel"]
        assert steps[1].term == V("(>> 8 8 unsign (<< 8 4 unsign x 2 unsign 1) 1 unsign 1)")
        _assert_chain(steps)

    def test_shift_cancel_keeps_lost_bits(self):
        # x 有 8 位时左移会丢掉最高位，不能抵消
        eg = EGraph({"x": 8})
        c = eg.add_term(V("(>> 8 8 unsign (* 8 8 unsign x 2 unsign 2) 1 unsign 1)"))
        eg.run_saturation(demo_ruleset())
        assert eg.lookup_term(Var("x")) != eg.find(c)

    def test_binding_is_recorded(self, comm_add):
        eg = EGraph()
        c = eg.add_term(V("(+ 8 4 unsign a 3 unsign b)"))
        eg.run_saturation([comm_add])
        steps = eg.explain_detailed(c, V("(+ 8 3 unsign b 4 unsign a)"))
        assert steps[1].binding["w2"] == 4 and steps[1].binding["w3"] == 3

    def test_target_in_other_class(self, comm_add):
        eg = EGraph()
        c = eg.add_term(V("(+ 8 4 unsign a 4 unsign b)"))
        eg.add_term(V("(* 8 4 unsign a 4 unsign b)"))
        eg.run_saturation([comm_add])
        with pytest.raises(NotEquivalentInEGraph):
            eg.explain_detailed(c, V("(* 8 4 unsign a 4 unsign b)"))

    def test_unknown_target(self):
        eg = EGraph()
        c = eg.add_term(V("(+ 8 4 unsign a 4 unsign b)"))
        with pytest.raises(NotEquivalentInEGraph):
            eg.explain_detailed(c, V("(+ 8 4 unsign a 4 unsign q)"))


# ---------------------------------------------------------------------------
# 导出
# ---------------------------------------------------------------------------

class TestExport:
    def test_json_dump(self, tmp_path, comm_add):
        eg = EGraph()
        c = eg.add_term(V("(+ 8 4 unsign a 4 unsign b)"))
        eg.set_name(c, "y")
        eg.run_saturation([comm_add])
        path = tmp_path / "eg.json"
        eg.dump_json(str(path))
        data = json.loads(path.read_text())
        assert data["nodes"] == eg.node_count
        (named,) = [k for k in data["classes"] if k["names"] == ["y"]]
        assert len(named["nodes"]) == 2

    def test_dot(self):
        eg = EGraph()
        eg.add_term(V("(+ 8 4 unsign a 4 unsign b)"))
        dot = eg.to_dot()
        assert dot.startswith("digraph egraph {")
        assert dot.count("subgraph cluster_") == eg.class_count
