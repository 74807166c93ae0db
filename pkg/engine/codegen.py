"""
Verilog 后端：提取出的项 DAG → 组合模块

每个共享的非叶子节点一条 assign，线网按节点位宽无符号声明；所有表达式都只含无符号操作数，
因此 Verilog 的上下文扩展就是零扩展，需要符号扩展的地方显式写成 {{n{x[k-1]}}, x}。
有符号输入整体引用时包成 $unsigned()，部分选本身就是无符号的。

生成的文本可以被 parse_verilog 读回，逐步验证就靠这一点。
"""

import logging
import re
from typing import Dict, List, Optional, Sequence, Tuple

from engine.errors import NonConcrete, UnsupportedOperator
from engine.ir import Arg, Const, Node, Signage, Term, Var, residue
from engine.verilog_parser import DesignModule

logger = logging.getLogger(__name__)

_IDENT = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")
_KEYWORDS = {
    "module", "endmodule", "input", "output", "wire", "assign", "signed",
    "reg", "always", "begin", "end", "if", "else", "case", "for", "integer",
}

_BINARY = {"+": "+", "*": "*", "&": "&", "|": "|", "^": "^", "~^": "~^"}
_REDUCE = {"r&": "&", "r|": "|", "r^": "^", "r~&": "~&", "r~|": "~|", "r~^": "~^"}
_COMPARE = {"==", "!=", "<", "<=", ">", ">="}


def _lit(value: int, width: int) -> str:
    return f"{width}'d{value & ((1 << width) - 1)}"


def _decl(kind: str, width: int, signage: Signage = Signage.UNSIGN) -> str:
    parts = [kind]
    if signage == Signage.SIGN:
        parts.append("signed")
    if width > 1:
        parts.append(f"[{width - 1}:0]")
    return " ".join(parts)


class _Emitter:
    def __init__(self, inputs: Sequence[Tuple[str, int, Signage]], names: Dict[Term, str]):
        self.widths = {n: w for n, w, _ in inputs}
        self.signed = {n for n, _, s in inputs if s == Signage.SIGN}
        self.names = names

    # ---------- 叶子与线网 ----------

    def _k(self, t: Term) -> int:
        if isinstance(t, Node):
            return int(t.width)
        w = self.widths.get(t.name)
        if w is None:
            raise NonConcrete(f"variable '{t.name}' is not a module input")
        return w

    def _name(self, t: Term) -> str:
        return self.names[t] if isinstance(t, Node) else t.name

    def ref(self, t: Term) -> str:
        if isinstance(t, Var) and t.name in self.signed:
            return f"$unsigned({t.name})"
        return self._name(t)

    def _low(self, t: Term, m: int) -> str:
        if m >= self._k(t):
            return self.ref(t)
        return f"{self._name(t)}[{m - 1}:0]" if m > 1 else f"{self._name(t)}[0]"

    def _bit(self, t: Term, i: int) -> str:
        if self._k(t) == 1:
            return self._name(t)
        return f"{self._name(t)}[{i}]"

    # ---------- 操作数 ----------

    @staticmethod
    def _const(a: Arg) -> int:
        return residue(a.term.value, int(a.width), Signage(a.signage))

    def nonneg(self, a: Arg) -> bool:
        if isinstance(a.term, Const):
            return self._const(a) >= 0
        return Signage(a.signage) == Signage.UNSIGN or int(a.width) > self._k(a.term)

    def base(self, a: Arg) -> Tuple[str, int]:
        """residue 的低 m 位，m = min(标注位宽, 信号位宽)"""
        m = min(int(a.width), self._k(a.term))
        return self._low(a.term, m), m

    def sized(self, a: Arg, T: int) -> str:
        """自身位宽恰好为 T、值为 residue mod 2^T 的表达式"""
        if isinstance(a.term, Const):
            return _lit(self._const(a), T)
        expr, m = self.base(a)
        if T == m:
            return expr
        if T < m:
            return self._low(a.term, T)
        if self.nonneg(a):
            return f"{{{T - m}'d0, {expr}}}"
        return f"{{{{{T - m}{{{self._bit(a.term, m - 1)}}}}}, {expr}}}"

    def ext(self, a: Arg, T: int) -> str:
        """零扩展到上下文宽度后，模 2^T 等于 residue 的表达式"""
        if isinstance(a.term, Const):
            return _lit(self._const(a), T)
        expr, m = self.base(a)
        if self.nonneg(a) or T <= m:
            return expr
        return self.sized(a, T)

    def amount(self, a: Arg) -> str:
        if isinstance(a.term, Const):
            w = int(a.width)
            return _lit(self._const(a), w)
        return self.base(a)[0]

    def truth(self, a: Arg) -> str:
        if isinstance(a.term, Const):
            return "1'd1" if self._const(a) != 0 else "1'd0"
        return self.base(a)[0]

    # ---------- 节点 ----------

    def node(self, n: Node) -> str:
        op, W, a = n.op, int(n.width), n.args
        ws = [int(x.width) for x in a]
        if op in _BINARY:
            return f"{self.ext(a[0], W)} {_BINARY[op]} {self.ext(a[1], W)}"
        if op == "-":
            if len(a) == 1:
                return f"-{self.ext(a[0], W)}"
            return f"{self.ext(a[0], W)} - {self.ext(a[1], W)}"
        if op == "~":
            return f"~{self.ext(a[0], W)}"
        if op in _REDUCE:
            return f"{_REDUCE[op]}{self.sized(a[0], ws[0])}"
        if op == "<<":
            return f"{self.ext(a[0], W)} << {self.amount(a[1])}"
        if op == ">>":
            return f"{self.sized(a[0], max(W, ws[0]))} >> {self.amount(a[1])}"
        if op == "?":
            return f"{self.truth(a[0])} ? {self.ext(a[1], W)} : {self.ext(a[2], W)}"
        if op == "concat":
            return "{" + ", ".join(self.sized(x, w) for x, w in zip(a, ws)) + "}"
        if op == "repl":
            return f"{{{n.params[0]}{{{self.sized(a[0], ws[0])}}}}}"
        if op == "slice":
            return self._slice(n)
        if op in _COMPARE:
            if self.nonneg(a[0]) and self.nonneg(a[1]):
                C = max(ws)
                return f"{self.ext(a[0], C)} {op} {self.ext(a[1], C)}"
            C = max(ws) + 1
            return f"$signed({self.sized(a[0], C)}) {op} $signed({self.sized(a[1], C)})"
        if op == "!":
            return f"!{self.truth(a[0])}"
        if op in ("&&", "||"):
            return f"{self.truth(a[0])} {op} {self.truth(a[1])}"
        if op == "SUM":
            return " + ".join(self.ext(x, W) for x in a)
        if op == "FMA":
            return f"{self.ext(a[0], W)} * {self.ext(a[1], W)} + {self.ext(a[2], W)}"
        if op == "MUXAR":
            return self._muxar(n)
        raise UnsupportedOperator(f"no Verilog lowering for operator {op!r}")

    def _slice(self, n: Node) -> str:
        hi, lo = n.params
        a = n.args[0]
        if isinstance(a.term, Const):
            return _lit(self._const(a) >> lo, hi - lo + 1)
        _, m = self.base(a)
        if hi < m:
            if lo == 0:
                return self._low(a.term, hi + 1)
            name = self._name(a.term)
            return f"{name}[{hi}:{lo}]" if hi > lo else f"{name}[{hi}]"
        wide = self.sized(a, hi + 1)
        return wide if lo == 0 else f"{wide} >> {lo}"

    def _muxar(self, n: Node) -> str:
        W = int(n.width)
        b, x, y = n.args
        A, C = self.ext(x, W), self.ext(y, W)
        rows = []
        _, m = (None, 0) if isinstance(b.term, Const) else self.base(b)
        for i in range(min(int(b.width), W)):
            if isinstance(b.term, Const):
                row = A if (self._const(b) >> i) & 1 else C
            elif i < m:
                row = f"({self._bit(b.term, i)} ? {A} : {C})"
            else:
                row = C
            rows.append(row if i == 0 else f"({row} << {i})")
        return " + ".join(rows) if rows else _lit(0, W)


# ---------------------------------------------------------------------------
# 命名
# ---------------------------------------------------------------------------

def _topo_nodes(terms: Sequence[Term]) -> List[Node]:
    """去重后的非叶子节点，子节点在前"""
    seen = set()
    out: List[Node] = []
    for t in terms:
        stack = [(t, False)]
        while stack:
            cur, expanded = stack.pop()
            if not isinstance(cur, Node) or (cur in seen and not expanded):
                continue
            if expanded:
                if cur not in seen:
                    seen.add(cur)
                    out.append(cur)
                continue
            stack.append((cur, True))
            for a in reversed(cur.args):
                stack.append((a.term, False))
    return out


def _usable(name: Optional[str], used: set) -> bool:
    return bool(name) and _IDENT.match(name) is not None and name not in used and name not in _KEYWORDS


def generate_verilog(
    module_name: str,
    inputs: Sequence[Tuple[str, int, Signage]],
    outputs: Sequence[Tuple[str, int]],
    terms: Dict[str, Term],
    preferred: Optional[Dict[Term, str]] = None,
    output_signage: Optional[Dict[str, Signage]] = None,
) -> str:
    """
    把各输出的项打印成一个 Verilog 模块

    Args:
        inputs: [(名字, 位宽, 符号)]，原样作为输入端口
        outputs: [(名字, 位宽)]
        terms: 输出名 → 项；结构相同的子项只生成一次
        preferred: 子项 → 希望保留的信号名（原设计里的 wire 名），冲突时改用 t<k>
        output_signage: 输出端口声明的符号，缺省无符号

    Returns:
        Verilog 源文本

    Raises:
        NonConcrete: 项里出现不是输入的变量
        UnsupportedOperator: 算子没有对应的 Verilog 写法
    """
    preferred = preferred or {}
    output_signage = output_signage or {}
    order = [terms[o] for o, _ in outputs]
    nodes = _topo_nodes(order)
    used = {n for n, _, _ in inputs} | {o for o, _ in outputs}
    names: Dict[Term, str] = {}
    direct: Dict[str, Node] = {}

    for o, wo in outputs:
        t = terms[o]
        if isinstance(t, Node) and t not in names and int(t.width) == wo:
            names[t] = o
            direct[o] = t

    counter = 0
    for n in nodes:
        if n in names:
            continue
        want = preferred.get(n)
        if _usable(want, used):
            names[n] = want
        else:
            while f"t{counter}" in used:
                counter += 1
            names[n] = f"t{counter}"
        used.add(names[n])

    emitter = _Emitter(inputs, names)
    lines = [f"module {module_name} ("]
    ports = [f"  {_decl('input', w, s)} {n}" for n, w, s in inputs]
    ports += [f"  {_decl('output', w, output_signage.get(o, Signage.UNSIGN))} {o}" for o, w in outputs]
    lines.append(",\n".join(ports))
    lines.append(");")
    direct_names = set(direct)
    for n in nodes:
        if names[n] not in direct_names:
            lines.append(f"  {_decl('wire', int(n.width))} {names[n]};")
    for n in nodes:
        lines.append(f"  assign {names[n]} = {emitter.node(n)};")
    for o, wo in outputs:
        if o in direct:
            continue
        t = terms[o]
        if isinstance(t, Const):
            rhs = _lit(t.value, wo)
        else:
            rhs = emitter.ref(t)
        lines.append(f"  assign {o} = {rhs};")
    lines.append("endmodule")
    logger.debug("generated module %s with %s assigns", module_name, len(nodes))
    return "\n".join(lines) + "\n"


def assign_lines(text: str) -> Dict[str, str]:
    """模块文本里每条 assign 的 左值 → 右值，用于比较相邻两步改了哪些信号"""
    out: Dict[str, str] = {}
    for line in text.splitlines():
        line = line.strip()
        if line.startswith("assign ") and "=" in line:
            lhs, rhs = line[len("assign "):].split("=", 1)
            out[lhs.strip()] = rhs.strip().rstrip(";")
    return out


def render_design(design: DesignModule, terms: Dict[str, Term], preferred: Optional[Dict[Term, str]] = None) -> str:
    """按 DesignModule 的端口声明生成模块；证书里的每一步和最终输出都走这里"""
    signage = {o: design.signals.get(o, (w, Signage.UNSIGN))[1] for o, w in design.outputs}
    return generate_verilog(design.name, design.inputs, design.outputs, terms, preferred, signage)
