"""
理论面积代价：每个算子折算成两输入门的个数

默认公式（常数见 CostConstants，可用 --cost-config 覆盖）：
    加 / 减（CPA）      12·w
    取负                13·w
    乘（Booth 基 4）    6·wa·wb + 12·w
    乘常数              (d−1)·12·w，d 为常数 CSD 表示的非零位数；d <= 1 时为 0
    二选一              3·w
    变量移位            3·w·ws；常数移位 0
    归约                w−1
    比较                12·max(wa, wb)
    SUM(n 个操作数)     5·w·(n−2) + 12·w
    FMA                 6·wa·wb + 12·w
    MUXAR(r 行)         3·w·r + 5·w·(r−1) + 12·w
    slice / concat / repl   0（连线）

w 是输出位宽，wa / wb 是操作数被消费的位宽。
"""

import logging
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from engine.config import CostConstants
from engine.ir import Const, Node, Signage, Term, iter_subterms, residue

logger = logging.getLogger(__name__)

# (位宽, 符号, 常数值或 None)
Operand = Tuple[int, Signage, Optional[int]]

WIRING = {"slice", "concat", "repl"}
COMPARE = {"==", "!=", "<", "<=", ">", ">="}
BITWISE = {"&", "|", "^", "~^"}
REDUCE = {"r&", "r|", "r^", "r~&", "r~|", "r~^"}


def naf_digits(value: int) -> List[int]:
    """非相邻形式（CSD）的各位，低位在前，取值 -1 / 0 / 1"""
    digits = []
    v = value
    while v != 0:
        if v & 1:
            d = 2 - (v & 3)
            v -= d
        else:
            d = 0
        digits.append(d)
        v >>= 1
    return digits


def csd_digits(value: int, width: int) -> int:
    """
    常数在 width 位下 CSD 表示的非零位数

    高于 width 的位对模 2^width 的乘积没有贡献，不计入。
    """
    v = value & ((1 << width) - 1)
    return sum(1 for i, d in enumerate(naf_digits(v)) if d != 0 and i < width)


class CostModel:
    def __init__(self, constants: Optional[CostConstants] = None):
        self.k = constants or CostConstants()

    def node_cost(self, op: str, width: int, operands: Sequence[Operand],
                  params: Tuple[int, ...] = ()) -> int:
        """
        单个算子的门数

        Args:
            op: 算子名
            width: 输出位宽
            operands: 每个操作数的 (被消费位宽, 符号, 常数值或 None)
            params: slice / repl 的整数参数
        """
        k = self.k
        w = int(width)
        ws = [int(o[0]) for o in operands]
        consts = [o[2] for o in operands]

        if op in WIRING:
            return 0
        if op == "+":
            return k.cpa * w
        if op == "-":
            return k.neg * w if len(operands) == 1 else k.cpa * w
        if op == "*":
            if consts[0] is not None and consts[1] is not None:
                return 0
            for i in (0, 1):
                c = consts[i]
                if c is not None:
                    v = residue(c, ws[i], operands[i][1])
                    d = csd_digits(v, w)
                    return 0 if d <= 1 else (d - 1) * k.cpa * w
            return k.mul_pp * ws[0] * ws[1] + k.cpa * w
        if op == "?":
            return 0 if consts[0] is not None else k.mux * w
        if op in ("<<", ">>"):
            return 0 if consts[1] is not None else k.shift * w * ws[1]
        if op in REDUCE:
            return ws[0] - 1
        if op in COMPARE:
            return k.compare * max(ws)
        if op in BITWISE:
            return k.bitwise * w
        if op == "~":
            return k.bitwise * w
        if op == "!":
            return ws[0]
        if op in ("&&", "||"):
            return (ws[0] - 1) + (ws[1] - 1) + 1
        if op == "SUM":
            n = len(operands)
            return k.sum_csa * w * (n - 2) + k.cpa * w
        if op == "FMA":
            return k.mul_pp * ws[0] * ws[1] + k.cpa * w
        if op == "MUXAR":
            r = ws[0]
            return k.muxar_row * w * r + k.muxar_csa * w * (r - 1) + k.cpa * w
        logger.debug("no cost formula for %s, charging 0", op)
        return 0

    def term_node_cost(self, n: Node) -> int:
        operands = [
            (int(a.width), a.signage, a.term.value if isinstance(a.term, Const) else None)
            for a in n.args
        ]
        return self.node_cost(n.op, int(n.width), operands, tuple(n.params))

    def dag_cost(self, *terms: Term) -> int:
        """共享子项只计一次"""
        seen = set()
        total = 0
        for t in terms:
            for sub in iter_subterms(t):
                if isinstance(sub, Node) and sub not in seen:
                    seen.add(sub)
                    total += self.term_node_cost(sub)
        return total

    def tree_cost(self, t: Term) -> int:
        """不计共享：每次出现都计入"""
        if not isinstance(t, Node):
            return 0
        return self.term_node_cost(t) + sum(self.tree_cost(a.term) for a in t.args)


def node_cost(n: Node, constants: Optional[CostConstants] = None) -> int:
    return CostModel(constants).term_node_cost(n)


# ---------------------------------------------------------------------------
# 结构统计
# ---------------------------------------------------------------------------

def _unique_nodes(terms: Iterable[Term]) -> List[Node]:
    seen = set()
    out = []
    for t in terms:
        for sub in iter_subterms(t):
            if isinstance(sub, Node) and sub not in seen:
                seen.add(sub)
                out.append(sub)
    return out


def adder_count(*terms: Term) -> int:
    """
    加 / 减法器的个数（共享子项计一次）

    SUM(n) 计 n−1，FMA 计 1，乘常数按 CSD 非零位数 − 1 计，变量乘法不计。
    """
    total = 0
    for n in _unique_nodes(terms):
        if n.op in ("+", "-"):
            total += 1
        elif n.op == "SUM":
            total += len(n.args) - 1
        elif n.op == "FMA":
            total += 1
        elif n.op == "*":
            consts = [a for a in n.args if isinstance(a.term, Const)]
            if len(consts) == 1:
                c = consts[0]
                v = residue(c.term.value, int(c.width), c.signage)
                total += max(0, csd_digits(v, int(n.width)) - 1)
    return total


def cpa_count(*terms: Term) -> int:
    """进位传播加法器个数：每个 + / − / SUM / FMA / MUXAR 各一个"""
    return sum(1 for n in _unique_nodes(terms) if n.op in ("+", "-", "SUM", "FMA", "MUXAR"))


def op_histogram(*terms: Term) -> Dict[str, int]:
    hist: Dict[str, int] = {}
    for n in _unique_nodes(terms):
        hist[n.op] = hist.get(n.op, 0) + 1
    return dict(sorted(hist.items()))


def architecture_signature(*terms: Term) -> str:
    """按算子计数概括一个实现，例如 "*3 SUM1"；连线算子不计"""
    hist = op_histogram(*terms)
    return " ".join(f"{op}{n}" for op, n in hist.items() if op not in WIRING) or "wiring"
