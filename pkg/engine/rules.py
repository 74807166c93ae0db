"""
重写规则目录：带位宽 / 符号条件的静态重写、动态 builder 与合并算子

规则分五类（arith / logic / exchange / merge / constexp），共 39 条；
交换律、结合律与 Sel Add/Mul 对 + 和 × 各有一条。

模式约定：
    - 位宽变量 w1…wH，符号变量 s1…sG，项变量用其他名字
    - 右侧位宽 / slice 参数可以是表达式（w4+1、w2+2^w3、w1-1）
    - 右侧叶子 #w3 表示值等于 w3 的常数
    - 左侧常数的标注可以写 "_ _"：按消费后的值匹配，任意位宽 / 符号
    - 算子集合 "+|-" 匹配时绑定在键 "+|-" 下，右侧同名算子集合取同一个算子

† 行的条件不写在代码里，从条件库（models/conditions.json）加载；
条件库缺失某条记录时该规则不会被应用。
"""

import logging
import re
from dataclasses import dataclass
from itertools import product
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, Tuple

from engine.conditions import FALSE, TRUE, Condition, ConditionStore, eval_expr
from engine.egraph import WILDCARD, EGraph, MapBinding
from engine.errors import IncompleteMap
from engine.ir import OPERATORS, Arg, Const, Node, Signage, Term, Var, residue
from engine.verilang import parse_pattern, print_verilang

logger = logging.getLogger(__name__)

Builder = Callable[[Optional[EGraph], MapBinding], Optional[Term]]
Matcher = Callable[[EGraph], List[MapBinding]]

RULE_CLASSES = ("arith", "logic", "exchange", "merge", "constexp")

_WIDTH_VAR_RE = re.compile(r"^w\d+$")
_SIGN_VAR_RE = re.compile(r"^s\d+$")


# ---------------------------------------------------------------------------
# Rewrite
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Rewrite:
    """
    条件重写 (cond, lhs, rhs)

    rhs 是模式项，或者 builder(egraph, m) -> 项 / None（None 表示本次匹配不适用）。
    matcher 非空时替代 lhs 的 e-matching（n 元 SUM 展平用）。
    """

    name: str
    lhs: Term
    rhs: Optional[Term] = None
    condition: Condition = TRUE
    builder: Optional[Builder] = None
    matcher: Optional[Matcher] = None
    rule_class: str = "arith"
    store_backed: bool = False
    description: str = ""

    def condition_holds(self, m: Mapping[str, Any]) -> bool:
        return self.condition.evaluate(m)

    def instantiate(self, egraph: Optional[EGraph], m: MapBinding) -> Optional[Term]:
        if self.builder is not None:
            return self.builder(egraph, m)
        return substitute(self.rhs, m)

    @property
    def is_dynamic(self) -> bool:
        return self.builder is not None or self.matcher is not None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "class": self.rule_class,
            "lhs": print_verilang(self.lhs),
            "rhs": print_verilang(self.rhs) if self.rhs is not None else None,
            "condition": str(self.condition),
            "dynamic": self.is_dynamic,
            "description": self.description,
        }


def instantiate(rw: Rewrite, m: MapBinding, egraph: Optional[EGraph] = None) -> Term:
    """
    右侧在绑定 m 下的部分求值：位宽 / 符号代入，项变量保留为 e-class 引用

    Raises:
        IncompleteMap: 右侧的类型变量未被绑定，或 builder 拒绝了这个绑定
    """
    out = rw.instantiate(egraph, m)
    if out is None:
        raise IncompleteMap(f"rule '{rw.name}' does not apply under this binding")
    return out


# ---------------------------------------------------------------------------
# 模式代入
# ---------------------------------------------------------------------------

def _width(w: Any, m: Mapping[str, Any]) -> int:
    if isinstance(w, int):
        return w
    return eval_expr(w, m)


def _signage(s: Any, m: Mapping[str, Any]) -> Signage:
    if isinstance(s, Signage):
        return s
    v = m.get(s)
    if v is None:
        raise IncompleteMap(f"signage variable '{s}' is unbound")
    return Signage(v)


def _op(op: str, m: Mapping[str, Any]) -> str:
    if op in OPERATORS:
        return op
    bound = m.get(op)
    if bound is None:
        raise IncompleteMap(f"operator set '{op}' is unbound")
    return bound


def substitute(p: Term, m: Mapping[str, Any], fill_wildcards: bool = False) -> Term:
    """
    把模式里的位宽 / 符号变量、位宽表达式、算子集合与 #w 常数代入

    Args:
        fill_wildcards: 为左侧常数的 "_ _" 标注选一个能精确表示该常数的标注
            （条件合成与规则自检实例化左侧时使用）
    """
    if isinstance(p, Const):
        return p
    if isinstance(p, Var):
        if p.name.startswith("#"):
            return Const(eval_expr(p.name[1:], m))
        return p
    args = []
    for a in p.args:
        t = substitute(a.term, m, fill_wildcards)
        if a.width == WILDCARD or a.signage == WILDCARD:
            if not (fill_wildcards and isinstance(t, Const)):
                raise IncompleteMap("wildcard annotation outside a left-hand-side constant")
            args.append(Arg(t.value.bit_length() + 1, Signage.UNSIGN, t))
            continue
        args.append(Arg(_width(a.width, m), _signage(a.signage, m), t))
    params = tuple(_width(x, m) for x in p.params)
    return Node(_op(p.op, m), _width(p.width, m), tuple(args), params)


def _walk_nodes(p: Term):
    if isinstance(p, Node):
        yield p
        for a in p.args:
            yield from _walk_nodes(a.term)


def _var_key(name: str) -> Tuple[int, str]:
    return (int(name[1:]), name)


def type_variables(p: Term) -> Tuple[List[str], List[str]]:
    """模式中的位宽变量与符号变量（按编号排序）"""
    ws, ss = set(), set()
    for node in _walk_nodes(p):
        if isinstance(node.width, str) and _WIDTH_VAR_RE.match(node.width):
            ws.add(node.width)
        for a in node.args:
            if isinstance(a.width, str) and _WIDTH_VAR_RE.match(a.width):
                ws.add(a.width)
            if isinstance(a.signage, str) and _SIGN_VAR_RE.match(a.signage):
                ss.add(a.signage)
    return sorted(ws, key=_var_key), sorted(ss, key=_var_key)


def op_sets(p: Term) -> List[str]:
    return sorted({n.op for n in _walk_nodes(p) if n.op not in OPERATORS})


def op_choices(p: Term) -> List[Dict[str, str]]:
    """算子集合的所有取法；没有算子集合时返回 [{}]"""
    sets = op_sets(p)
    return [dict(zip(sets, combo)) for combo in product(*(s.split("|") for s in sets))]


def constants_fit(p: Term, m: Mapping[str, Any]) -> bool:
    """左侧带字面标注的常数在该绑定下是否保持原值（否则 e-matching 不会产生这个绑定）"""
    for node in _walk_nodes(p):
        for a in node.args:
            if isinstance(a.term, Const) and a.width != WILDCARD:
                w, s = _width(a.width, m), _signage(a.signage, m)
                if residue(a.term.value, w, s) != a.term.value:
                    return False
    return True


def concrete_pairs(rw: Rewrite, m: Mapping[str, Any]) -> List[Tuple[Term, Term]]:
    """静态规则在绑定 m 下的具体 (左侧, 右侧)，每种算子集合取法一对"""
    if rw.rhs is None:
        raise IncompleteMap(f"rule '{rw.name}' has no pattern right-hand side")
    out = []
    for ops in op_choices(rw.lhs):
        mm = dict(m)
        mm.update(ops)
        out.append((substitute(rw.lhs, mm, fill_wildcards=True), substitute(rw.rhs, mm)))
    return out


# ---------------------------------------------------------------------------
# 动态规则：加法链合并为 SUM
# ---------------------------------------------------------------------------

_SUM_OPS = ("+", "SUM")


def _arg_range(w: int, s: Signage) -> Tuple[int, int]:
    if s == Signage.SIGN:
        return -(1 << (w - 1)), (1 << (w - 1)) - 1
    return 0, (1 << w) - 1


def sum_is_exact(inner_width: int, operands: Sequence[Tuple[int, Signage]],
                 consumed: Tuple[int, Signage]) -> bool:
    """
    内层加法的结果在被 (位宽, 符号) 消费后是否等于真实的和（没有丢弃进位）

    Args:
        inner_width: 内层加法的输出位宽
        operands: 内层各操作数的标注
        consumed: 外层消费内层结果时的标注
    """
    lo = sum(_arg_range(w, s)[0] for w, s in operands)
    hi = sum(_arg_range(w, s)[1] for w, s in operands)
    wc, sc = consumed
    if wc <= inner_width:
        rlo, rhi = _arg_range(wc, sc)
    else:
        # 截断到 inner_width 后再零扩展
        rlo, rhi = 0, (1 << inner_width) - 1
    return rlo <= lo and hi <= rhi


def merge_additions_matcher(eg: EGraph) -> List[MapBinding]:
    """找出所有「加法 / SUM 的某个操作数本身是加法 / SUM」的位置"""
    roots = set()
    for op in _SUM_OPS:
        roots |= {eg.find(c) for c in eg.op_classes.get(op, ())}
    out: List[MapBinding] = []
    for cid in sorted(roots):
        for eid, key in eg.nodes_of(cid):
            if key[0] not in _SUM_OPS:
                continue
            children = key[3]
            for i, (wi, si, ci) in enumerate(children):
                inner = next(((fe, fk) for fe, fk in eg.nodes_of(ci) if fk[0] in _SUM_OPS), None)
                if inner is None:
                    continue
                feid, fkey = inner
                m: MapBinding = {"__root__": cid, "__enodes__": (eid, feid)}
                args = []
                for j, (w, s, c) in enumerate(children):
                    if j == i:
                        inner_args = []
                        for k, (iw, isg, ic) in enumerate(fkey[3]):
                            m[f"y{k}"] = ic
                            inner_args.append(Arg(iw, isg, Var(f"y{k}")))
                        args.append(Arg(w, s, Node(fkey[0], fkey[1], tuple(inner_args))))
                    else:
                        m[f"x{j}"] = c
                        args.append(Arg(w, s, Var(f"x{j}")))
                m["__pattern__"] = Node(key[0], key[1], tuple(args))
                out.append(m)
    return out


def merge_additions_builder(eg: Optional[EGraph], m: MapBinding) -> Optional[Term]:
    outer: Node = m["__pattern__"]
    flat: List[Arg] = []
    for a in outer.args:
        if isinstance(a.term, Node):
            inner = a.term
            operands = [(x.width, x.signage) for x in inner.args]
            narrow = outer.width <= min(a.width, inner.width)
            if not narrow and not sum_is_exact(inner.width, operands, (a.width, a.signage)):
                return None
            flat.extend(inner.args)
        else:
            flat.append(a)
    return Node("SUM", outer.width, tuple(flat))


# ---------------------------------------------------------------------------
# 动态规则：常数乘法展开
# ---------------------------------------------------------------------------

def _known_multiple(eg: EGraph, m: MapBinding, c: int) -> Optional[Tuple[int, int, Signage]]:
    """
    e-graph 里已有同一个 x、同样标注的 d×x，且 d 是 c 的真因子时，返回最大的 (d, 位宽, 符号)
    """
    x = eg.find(m["x"])
    best = None
    for cid in sorted(eg.op_classes.get("*", ())):
        for _, key in eg.nodes_of(cid):
            if key[0] != "*" or key[1] != m["w1"]:
                continue
            (xw, xs, xc), (dw, ds, dc) = key[3]
            if eg.find(xc) != x or xw != m["w2"] or xs != Signage(m["s1"]):
                continue
            dv = eg.const_of(dc)
            if dv is None:
                continue
            d = residue(dv, dw, ds)
            if 1 < d < c and c % d == 0 and (best is None or d > best[0]):
                best = (d, dw, ds)
    return best


def mult_constant_builder(eg: Optional[EGraph], m: MapBinding) -> Optional[Term]:
    """
    c×x → 2×((c≫1)×x) + c[0]×x，要求 c >= 2

    折叠后的常数直接写进右侧：c=5 得到 ((x×2)×2) + (x×1)，
    之后由 Mult by Two / Mult by One / Mul by Zero 继续化简。
    e-graph 中已有 d×x 且 d 整除 c 时改写成 (d×x)×(c/d)，让多个常数乘法共享中间结果。
    """
    if eg is None:
        return None
    v = eg.const_of(m["c"])
    if v is None or eg.const_of(m["x"]) is not None:
        return None
    c = residue(v, m["w3"], Signage(m["s2"]))
    if c < 2:
        return None
    w1, w2, s1 = m["w1"], m["w2"], Signage(m["s1"])
    x = Arg(w2, s1, Var("x"))
    known = _known_multiple(eg, m, c)
    if known is not None:
        d, dw, ds = known
        q = c // d
        inner = Node("*", w1, (x, Arg(dw, ds, Const(d))))
        return Node("*", w1, (Arg(w1, Signage.UNSIGN, inner), Arg(q.bit_length(), Signage.UNSIGN, Const(q))))
    hi, lo = c >> 1, c & 1
    half = Node("*", w1, (x, Arg(hi.bit_length(), Signage.UNSIGN, Const(hi))))
    doubled = Node("*", w1, (Arg(w1, Signage.UNSIGN, half), Arg(2, Signage.UNSIGN, Const(2))))
    low = Node("*", w1, (x, Arg(1, Signage.UNSIGN, Const(lo))))
    return Node("+", w1, (Arg(w1, Signage.UNSIGN, doubled), Arg(w1, Signage.UNSIGN, low)))


# ---------------------------------------------------------------------------
# 演示规则：移位抵消（依赖 e-class 位宽分析）
# ---------------------------------------------------------------------------

def shift_cancel_builder(eg: Optional[EGraph], m: MapBinding) -> Optional[Term]:
    """(x≪k)≫k → x，只在左移没有丢位、右移前没有符号扩展时成立"""
    if eg is None:
        return None
    k, j = eg.const_of(m["k"]), eg.const_of(m["j"])
    wx = eg.width_of(m["x"])
    if k is None or j is None or wx is None:
        return None
    k, j = residue(k, m["w4"], Signage.UNSIGN), residue(j, m["w5"], Signage.UNSIGN)
    if k != j:
        return None
    w1, w2, w3 = m["w1"], m["w2"], m["w3"]
    s1, s2 = Signage(m["s1"]), Signage(m["s2"])
    if wx > w3 or (s2 == Signage.SIGN and wx >= w3):
        return None
    if wx + k > w2 or (s1 == Signage.SIGN and wx + k >= w2):
        return None
    if wx > w1:
        return None
    return Var("x")


# ---------------------------------------------------------------------------
# 目录
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class _Entry:
    name: str
    rule_class: str
    lhs: str
    rhs: Optional[str]
    description: str
    # None = † 行，条件来自条件库
    condition: Optional[str] = "True"
    builder: Optional[Builder] = None
    matcher: Optional[Matcher] = None
    flag: Optional[str] = None


# † 行：条件从条件库读取
STORED = None

CATALOG: Tuple[_Entry, ...] = (
    # ---- bitvector arithmetic ----
    _Entry("commutativity-add", "arith",
           "(+ w1 w2 s1 a w3 s2 b)", "(+ w1 w3 s2 b w2 s1 a)", "a+b → b+a"),
    _Entry("commutativity-mul", "arith",
           "(* w1 w2 s1 a w3 s2 b)", "(* w1 w3 s2 b w2 s1 a)", "a×b → b×a"),
    _Entry("associativity-add", "arith",
           "(+ w3 w2 s2 (+ w2 w1 s1 a w1 s1 b) w1 s1 c)",
           "(+ w3 w1 s1 a w2 s2 (+ w2 w1 s1 b w1 s1 c))",
           "(a+b)+c → a+(b+c)", STORED),
    _Entry("associativity-mul", "arith",
           "(* w3 w2 s2 (* w2 w1 s1 a w1 s1 b) w1 s1 c)",
           "(* w3 w1 s1 a w2 s2 (* w2 w1 s1 b w1 s1 c))",
           "(a×b)×c → a×(b×c)", STORED),
    _Entry("associativity-sub", "arith",
           "(- w3 w2 s2 (- w2 w1 s1 a w1 s1 b) w1 s1 c)",
           "(- w3 w1 s1 a w2 s2 (+ w2 w1 s1 b w1 s1 c))",
           "(a-b)-c → a-(b+c)", STORED),
    _Entry("dist-mult-over-add-sub", "arith",
           "(* w2 w1 s1 a w3 s2 (+|- w3 w1 s1 b w1 s1 c))",
           "(+|- w2 w2 s2 (* w2 w1 s1 a w1 s1 b) w2 s2 (* w2 w1 s1 a w1 s1 c))",
           "a×(b±c) → (a×b)±(a×c)", STORED),
    _Entry("dist-add-sub-over-mult", "arith",
           "(+|- w2 w3 s2 (* w3 w1 s1 a w1 s1 b) w3 s2 (* w3 w1 s1 a w1 s1 c))",
           "(* w2 w1 s1 a w2 s1 (+|- w2 w1 s1 b w1 s1 c))",
           "(a×b)±(a×c) → a×(b±c)", STORED),
    _Entry("add-zero", "arith",
           "(+ w1 w2 s1 a _ _ 0)", "(slice w1 w1-1 0 w2 s1 a)", "a+0 → a", STORED),
    _Entry("mul-by-zero", "arith",
           "(* w1 w2 s1 a _ _ 0)", "0", "a×0 → 0", STORED),
    _Entry("mult-by-one", "arith",
           "(* w1 w2 s1 a _ _ 1)", "(slice w1 w1-1 0 w2 s1 a)", "a×1 → a"),
    _Entry("mult-by-two", "arith",
           "(* w1 w2 s1 a _ _ 2)", "(<< w1 w2 s1 a 2 unsign 1)", "a×2 → a≪1"),
    _Entry("sub-to-neg", "arith",
           "(- w1 w2 s1 a w3 s2 b)", "(+ w1 w2 s1 a w1 s2 (- w1 w3 s2 b))", "a-b → a+(-b)"),
    _Entry("sum-same", "arith",
           "(+ w1 w2 s1 a w2 s1 a)", "(* w1 w2 s1 a 2 unsign 2)", "a+a → 2×a", STORED),
    _Entry("mult-sum-same", "arith",
           "(+ w1 w3 s1 (* w3 w2 s2 a w2 s2 b) w2 s2 b)",
           "(* w1 w1 s1 (+ w1 w2 s2 a 2 unsign 1) w2 s2 b)",
           "(a×b)+b → (a+1)×b", STORED),
    # ---- bitvector logic ----
    _Entry("merge-left-shift", "logic",
           "(<< w1 w2 s2 (<< w2 w3 s1 a w4 unsign b) w4 unsign c)",
           "(<< w1 w3 s1 a w4+1 unsign (+ w4+1 w4 unsign b w4 unsign c))",
           "(a≪b)≪c → a≪(b+c)", STORED),
    _Entry("merge-right-shift", "logic",
           "(>> w1 w2 s2 (>> w2 w3 s1 a w4 unsign b) w4 unsign c)",
           "(>> w1 w3 s1 a w4+1 unsign (+ w4+1 w4 unsign b w4 unsign c))",
           "(a≫b)≫c → a≫(b+c)", STORED),
    _Entry("redundant-sel", "logic",
           "(? w1 w2 unsign e w3 s1 a w3 s1 a)", "(slice w1 w1-1 0 w3 s1 a)", "e?a:a → a"),
    _Entry("nested-mux-left", "logic",
           "(? w1 w2 unsign e w3 s1 (? w3 w2 unsign e w4 s2 b w4 s2 c) w4 s2 d)",
           "(? w1 w2 unsign e w4 s2 b w4 s2 d)",
           "e?(e?b:c):d → e?b:d", STORED),
    _Entry("nested-mux-right", "logic",
           "(? w1 w2 unsign e w4 s2 b w3 s1 (? w3 w2 unsign e w4 s2 c w4 s2 d))",
           "(? w1 w2 unsign e w4 s2 b w4 s2 d)",
           "e?b:(e?c:d) → e?b:d", STORED),
    _Entry("sel-left-shift", "logic",
           "(? w1 w2 unsign e w3 s1 (<< w3 w4 s2 a w4 unsign b) w3 s1 (<< w3 w4 s2 c w4 unsign d))",
           "(<< w1 w4 s2 (? w4 w2 unsign e w4 s2 a w4 s2 c) w4 unsign (? w4 w2 unsign e w4 unsign b w4 unsign d))",
           "e?(a≪b):(c≪d) → (e?a:c)≪(e?b:d)", STORED),
    _Entry("sel-right-shift", "logic",
           "(? w1 w2 unsign e w3 s1 (>> w3 w4 s2 a w4 unsign b) w3 s1 (>> w3 w4 s2 c w4 unsign d))",
           "(>> w1 w4 s2 (? w4 w2 unsign e w4 s2 a w4 s2 c) w4 unsign (? w4 w2 unsign e w4 unsign b w4 unsign d))",
           "e?(a≫b):(c≫d) → (e?a:c)≫(e?b:d)", STORED),
    _Entry("not-over-concat", "logic",
           "(~ w1 w1 unsign (concat w1 w2 s1 a w3 s2 b))",
           "(concat w1 w2 unsign (~ w2 w2 s1 a) w3 unsign (~ w3 w3 s2 b))",
           "~{a,b} → {~a,~b}", STORED),
    # ---- arithmetic / logic exchange ----
    _Entry("left-shift-add", "exchange",
           "(<< w1 w4 s1 (+ w4 w2 s2 a w2 s2 b) w3 unsign c)",
           "(+ w1 w1 s1 (<< w1 w2 s2 a w3 unsign c) w1 s1 (<< w1 w2 s2 b w3 unsign c))",
           "(a+b)≪c → (a≪c)+(b≪c)", STORED),
    _Entry("add-right-shift", "exchange",
           "(+ w1 w2 s1 a w2 s1 (>> w2 w2 s1 b w3 unsign c))",
           "(>> w1 w2+2^w3 unsign (+ w2+2^w3 w2+2^w3 s1 (<< w2+2^w3 w2 s1 a w3 unsign c) w2 s1 b)"
           " w3 unsign c)",
           "a+(b≫c) → ((a≪c)+b)≫c", STORED),
    _Entry("left-shift-mult", "exchange",
           "(<< w1 w4 s1 (* w4 w2 s2 a w2 s2 b) w3 unsign c)",
           "(* w1 w1 s1 (<< w1 w2 s2 a w3 unsign c) w2 s2 b)",
           "(a×b)≪c → (a≪c)×b", STORED),
    _Entry("sel-add", "exchange",
           "(? w1 w2 unsign e w3 s1 (+ w3 w4 s2 a w4 s2 b) w3 s1 (+ w3 w4 s2 c w4 s2 d))",
           "(+ w1 w4 s2 (? w4 w2 unsign e w4 s2 a w4 s2 c) w4 s2 (? w4 w2 unsign e w4 s2 b w4 s2 d))",
           "e?(a+b):(c+d) → (e?a:c)+(e?b:d)", STORED),
    _Entry("sel-mul", "exchange",
           "(? w1 w2 unsign e w3 s1 (* w3 w4 s2 a w4 s2 b) w3 s1 (* w3 w4 s2 c w4 s2 d))",
           "(* w1 w4 s2 (? w4 w2 unsign e w4 s2 a w4 s2 c) w4 s2 (? w4 w2 unsign e w4 s2 b w4 s2 d))",
           "e?(a×b):(c×d) → (e?a:c)×(e?b:d)", STORED),
    _Entry("sel-add-zero-left", "exchange",
           "(? w1 w2 unsign e w3 s1 (+ w3 w4 s2 a w4 s2 b) w4 s2 c)",
           "(+ w1 w4 s2 (? w4 w2 unsign e w4 s2 a w4 s2 c) w4 s2 (? w4 w2 unsign e w4 s2 b 1 unsign 0))",
           "e?(a+b):c → (e?a:c)+(e?b:0)", STORED),
    _Entry("sel-add-zero-right", "exchange",
           "(? w1 w2 unsign e w4 s2 a w3 s1 (+ w3 w4 s2 b w4 s2 c))",
           "(+ w1 w4 s2 (? w4 w2 unsign e w4 s2 a w4 s2 b) w4 s2 (? w4 w2 unsign e 1 unsign 0 w4 s2 c))",
           "e?a:(b+c) → (e?a:b)+(e?0:c)", STORED),
    _Entry("sel-mul-one-left", "exchange",
           "(? w1 w2 unsign e w3 s1 (* w3 w4 s2 a w4 s2 b) w4 s2 c)",
           "(* w1 w4 s2 (? w4 w2 unsign e w4 s2 a w4 s2 c) w4+1 s2 (? w4+1 w2 unsign e w4 s2 b 2 unsign 1))",
           "e?(a×b):c → (e?a:c)×(e?b:1)", STORED),
    _Entry("sel-mul-one-right", "exchange",
           "(? w1 w2 unsign e w4 s2 a w3 s1 (* w3 w4 s2 b w4 s2 c))",
           "(* w1 w4 s2 (? w4 w2 unsign e w4 s2 a w4 s2 b) w4+1 s2 (? w4+1 w2 unsign e 2 unsign 1 w4 s2 c))",
           "e?a:(b×c) → (e?a:b)×(e?1:c)", STORED),
    _Entry("move-sel-zero", "exchange",
           "(* w1 w2 s1 (? w2 w3 unsign b _ _ 0 w4 s2 a) w4 s2 c)",
           "(* w1 w4 s2 a w2 s1 (? w2 w3 unsign b 1 unsign 0 w4 s2 c))",
           "(b?0:a)×c → a×(b?0:c)", STORED),
    _Entry("concat-to-add", "exchange",
           "(concat w1 w2 s1 a w3 s2 b)",
           "(+ w1 w1 unsign (<< w1 w2 unsign a w3 unsign #w3) w3 unsign b)",
           "{a,b} → (a≪|b|)+b", STORED),
    _Entry("neg-not", "exchange",
           "(- w1 w2 s1 a)", "(+ w1 w1 unsign (~ w1 w2 s1 a) 2 unsign 1)", "-a → (~a)+1", STORED),
    # ---- merging ----
    _Entry("merge-additions", "merge",
           "(+ w1 w2 s1 a w3 s2 b)", None,
           "a1+(a2+(…+an)) → SUM(a1,…,an)",
           builder=merge_additions_builder, matcher=merge_additions_matcher),
    _Entry("merge-mult-array", "merge",
           "(+ w1 w4 s1 (* w4 w2 s2 a w3 unsign b) w4 s1 (* w4 w2 s2 c w3 unsign (~ w3 w3 unsign b)))",
           "(MUXAR w1 w3 unsign b w2 s2 a w2 s2 c)",
           "(a×b)+(c×(~b)) → MUXAR(b,a,c)", STORED),
    _Entry("fma-merge", "merge",
           "(+ w1 w3 s1 (* w3 w2 s2 a w2 s2 b) w4 s3 c)",
           "(FMA w1 w2 s2 a w2 s2 b w4 s3 c)",
           "(a×b)+c → FMA(a,b,c)", STORED),
    # ---- constant expansion ----
    _Entry("mult-constant", "constexp",
           "(* w1 w2 s1 x w3 s2 c)", None,
           "c×x → ((2×(c≫1))×x)+(c[0]×x)",
           builder=mult_constant_builder),
    _Entry("one-to-two-mult", "constexp",
           "(* w1 _ _ 1 w2 s1 x)", "(- w1 w1 unsign (* w1 2 unsign 2 w2 s1 x) w2 s1 x)",
           "1×x → (2×x)-x", flag="one_to_two"),
)


def _build(entry: _Entry, store: Optional[ConditionStore]) -> Rewrite:
    if entry.condition is not None:
        cond = TRUE
    else:
        cond = store.condition(entry.name) if store is not None else None
        if cond is None:
            logger.warning("no stored condition for rule %s, it will never fire", entry.name)
            cond = FALSE
    return Rewrite(
        name=entry.name,
        lhs=parse_pattern(entry.lhs),
        rhs=parse_pattern(entry.rhs) if entry.rhs is not None else None,
        condition=cond,
        builder=entry.builder,
        matcher=entry.matcher,
        rule_class=entry.rule_class,
        store_backed=entry.condition is None,
        description=entry.description,
    )


def builtin_ruleset(
    arith: bool = True,
    logic: bool = True,
    exchange: bool = True,
    merge: bool = True,
    constexp: bool = True,
    one_to_two: bool = False,
    store: Optional[ConditionStore] = None,
) -> List[Rewrite]:
    """
    按类别返回内置重写目录

    Args:
        arith / logic / exchange / merge / constexp: 是否启用该类规则
        one_to_two: 是否启用 1×x → (2×x)−x（MCM 需要，默认关闭）
        store: 条件库；缺省时读取 models/conditions.json

    Returns:
        Rewrite 列表，顺序与目录一致；全部启用且 one_to_two=True 时共 39 条
    """
    enabled = {"arith": arith, "logic": logic, "exchange": exchange,
               "merge": merge, "constexp": constexp}
    flags = {"one_to_two": one_to_two}
    if store is None:
        store = ConditionStore.load()
    rules = []
    for entry in CATALOG:
        if not enabled[entry.rule_class]:
            continue
        if entry.flag is not None and not flags.get(entry.flag, False):
            continue
        rules.append(_build(entry, store))
    logger.debug("built ruleset with %s rules", len(rules))
    return rules


def rule_by_name(name: str, store: Optional[ConditionStore] = None) -> Rewrite:
    for entry in CATALOG:
        if entry.name == name:
            return _build(entry, store if store is not None else ConditionStore.load())
    raise KeyError(f"unknown rule {name!r}")


def demo_ruleset(store: Optional[ConditionStore] = None) -> List[Rewrite]:
    """乘二再右移一位的演示：mult-by-two 加上依赖位宽分析的 shift-cancel"""
    shift_cancel = Rewrite(
        name="shift-cancel",
        lhs=parse_pattern("(>> w1 w2 s1 (<< w2 w3 s2 x w4 unsign k) w5 unsign j)"),
        builder=shift_cancel_builder,
        rule_class="logic",
        description="(x≪k)≫k → x",
    )
    return [rule_by_name("mult-by-two", store), shift_cancel]
