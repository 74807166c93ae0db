"""
Verilog 子集前端：组合逻辑模块 → VeriLang 绑定

支持的子集：
    module 头（ANSI 或旧式端口列表）、input / output / wire 声明（可带 signed 与 [msb:lsb]）、
    连续赋值 assign、带初值的 wire 声明；表达式覆盖全部 29 个 Verilog 算子，
    外加位选 / 部分选、拼接 / 复制、$signed / $unsigned。

位宽推断按 Verilog 的上下文规则：
    - 上下文决定的运算（+ - * & | ^ ~^ ~ 一元- 移位左操作数 ?: 两支）在宽度
      W = max(各操作数自身宽度, 左值宽度) 下计算；当且仅当所有操作数都有符号时按有符号计算
    - 比较的操作数在 max(左, 右) 下比较；移位量、?: 条件、拼接成员、逻辑运算都是自决定的
    - 未定宽的十进制常数按 32 位有符号

always / reg / 模块实例 / 参数 / 四态常数等都以 UnsupportedConstruct 拒绝。
"""

import logging
from dataclasses import dataclass, field
from graphlib import CycleError, TopologicalSorter
from typing import Dict, List, Optional, Tuple

import ply.lex as lex
import ply.yacc as yacc

from engine.errors import (
    UnsupportedConstruct,
    VerilogSyntaxError,
    WidthInferenceError,
)
from engine.ir import Arg, Const, Node, Signage, Term, Var

logger = logging.getLogger(__name__)

UNSIGNED_LITERAL_WIDTH = 32


# ---------------------------------------------------------------------------
# 设计模块
# ---------------------------------------------------------------------------

@dataclass
class DesignModule:
    """
    解析后的组合模块

    Attributes:
        name: 模块名
        inputs: [(名字, 位宽, 符号)]，按声明顺序
        outputs: [(名字, 位宽)]，按声明顺序
        bindings: [(信号名, 项)]，拓扑序；项的叶子只有输入变量和常数
        output_map: 输出端口名 → 驱动它的绑定名
        signals: 所有已声明信号的 (位宽, 符号)，打印时还原声明用
    """
    name: str
    inputs: List[Tuple[str, int, Signage]] = field(default_factory=list)
    outputs: List[Tuple[str, int]] = field(default_factory=list)
    bindings: List[Tuple[str, Term]] = field(default_factory=list)
    output_map: Dict[str, str] = field(default_factory=dict)
    signals: Dict[str, Tuple[int, Signage]] = field(default_factory=dict)

    def binding(self, name: str) -> Term:
        for n, t in self.bindings:
            if n == name:
                return t
        raise KeyError(name)

    def output_terms(self) -> Dict[str, Term]:
        return {o: self.binding(self.output_map[o]) for o, _ in self.outputs}

    def input_widths(self) -> Dict[str, int]:
        return {n: w for n, w, _ in self.inputs}


# ---------------------------------------------------------------------------
# 词法
# ---------------------------------------------------------------------------

class VerilogLexer:
    reserved = {
        "module": "MODULE",
        "endmodule": "ENDMODULE",
        "input": "INPUT",
        "output": "OUTPUT",
        "wire": "WIRE",
        "assign": "ASSIGN",
        "signed": "SIGNED",
    }
    # 认识但不支持的关键字
    unsupported = {
        "always", "initial", "reg", "integer", "parameter", "localparam",
        "generate", "endgenerate", "function", "endfunction", "task", "endtask",
        "inout", "begin", "end", "if", "else", "case", "endcase", "for", "posedge", "negedge",
    }

    tokens = tuple(reserved.values()) + (
        "ID", "NUMBER", "DSIGNED", "DUNSIGNED",
        "LPAREN", "RPAREN", "LBRACKET", "RBRACKET", "LBRACE", "RBRACE",
        "COMMA", "SEMI", "COLON", "QUESTION", "EQUALS", "HASH",
        "PLUS", "MINUS", "TIMES",
        "LSHIFT", "RSHIFT",
        "LT", "LE", "GT", "GE", "EQ", "NE",
        "LAND", "LOR", "LNOT",
        "NOT", "AND", "OR", "XOR", "XNOR", "NAND", "NOR",
    )

    t_ignore = " \t\r"

    t_LPAREN = r"\("
    t_RPAREN = r"\)"
    t_LBRACKET = r"\["
    t_RBRACKET = r"\]"
    t_LBRACE = r"\{"
    t_RBRACE = r"\}"
    t_COMMA = r","
    t_SEMI = r";"
    t_COLON = r":"
    t_QUESTION = r"\?"
    t_HASH = r"\#"
    t_PLUS = r"\+"
    t_MINUS = r"-"
    t_LSHIFT = r"<<"
    t_RSHIFT = r">>"
    t_LE = r"<="
    t_GE = r">="
    t_EQ = r"=="
    t_NE = r"!="
    t_LT = r"<"
    t_GT = r">"
    t_LAND = r"&&"
    t_LOR = r"\|\|"
    t_XNOR = r"~\^|\^~"
    t_NAND = r"~&"
    t_NOR = r"~\|"
    t_NOT = r"~"
    t_AND = r"&"
    t_OR = r"\|"
    t_XOR = r"\^"
    t_LNOT = r"!"
    t_EQUALS = r"="

    def t_COMMENT(self, t):
        r"//[^\n]*|/\*(.|\n)*?\*/"
        t.lexer.lineno += t.value.count("\n")

    def t_unsupported_op(self, t):
        r"<<<|>>>|===|!==|\*\*|/|%"
        raise UnsupportedConstruct(f"operator {t.value!r} is outside the supported subset (line {t.lineno})")

    def t_TIMES(self, t):
        r"\*"
        return t

    def t_DSIGNED(self, t):
        r"\$signed"
        return t

    def t_DUNSIGNED(self, t):
        r"\$unsigned"
        return t

    def t_NUMBER(self, t):
        r"(\d[\d_]*)?\s*'\s*[sS]?[bBoOdDhH]\s*[0-9a-fA-F_xXzZ?]+|\d[\d_]*"
        t.value = _parse_number(t.value, t.lineno)
        return t

    def t_ID(self, t):
        r"[a-zA-Z_][a-zA-Z0-9_$]*"
        if t.value in self.unsupported:
            raise UnsupportedConstruct(f"'{t.value}' is outside the combinational subset (line {t.lineno})")
        t.type = self.reserved.get(t.value, "ID")
        return t

    def t_newline(self, t):
        r"\n+"
        t.lexer.lineno += len(t.value)

    def t_error(self, t):
        raise VerilogSyntaxError(f"illegal character {t.value[0]!r}", t.lineno, self._column(t))

    def _column(self, t) -> int:
        data = t.lexer.lexdata
        last_nl = data.rfind("\n", 0, t.lexpos)
        return t.lexpos - last_nl

    def __init__(self):
        self.lexer = lex.lex(module=self, optimize=False, debug=False)

    def tokenize(self, text: str):
        self.lexer.lineno = 1
        self.lexer.input(text)
        return list(iter(self.lexer.token, None))


def _parse_number(text: str, line: int) -> Tuple[int, Optional[int], bool]:
    """返回 (值, 位宽或 None, 是否有符号)"""
    text = text.replace("_", "").replace(" ", "")
    if "'" not in text:
        return int(text), None, True
    size, rest = text.split("'", 1)
    signed = rest[0] in "sS"
    if signed:
        rest = rest[1:]
    base = {"b": 2, "o": 8, "d": 10, "h": 16}[rest[0].lower()]
    digits = rest[1:]
    if any(c in "xXzZ?" for c in digits):
        raise UnsupportedConstruct(f"four-state literal {text!r} (line {line})")
    value = int(digits, base)
    width = int(size) if size else UNSIGNED_LITERAL_WIDTH
    if width < 1:
        raise WidthInferenceError(f"literal {text!r} has zero width (line {line})")
    return value & ((1 << width) - 1), width, signed


# ---------------------------------------------------------------------------
# 语法：只产出一个轻量 AST（元组），位宽推断在后面单独做
# ---------------------------------------------------------------------------
#
#   ("id", name)  ("num", value, width, signed)  ("sel", name, hi, lo)
#   ("bin", op, l, r)  ("un", op, e)  ("cond", c, a, b)
#   ("concat", [e…])  ("repl", n, [e…])  ("cast", signed, e)

class VerilogParser:
    tokens = VerilogLexer.tokens

    precedence = (
        ("right", "QUESTION", "COLON"),
        ("left", "LOR"),
        ("left", "LAND"),
        ("left", "OR", "NOR"),
        ("left", "XOR", "XNOR"),
        ("left", "AND", "NAND"),
        ("left", "EQ", "NE"),
        ("left", "LT", "LE", "GT", "GE"),
        ("left", "LSHIFT", "RSHIFT"),
        ("left", "PLUS", "MINUS"),
        ("left", "TIMES"),
        ("right", "UNARY"),
    )

    def __init__(self):
        self.lexer = VerilogLexer()
        self.parser = yacc.yacc(module=self, write_tables=False, debug=False)

    def parse(self, text: str):
        self._text = text
        self.lexer.lexer.lineno = 1
        return self.parser.parse(text, lexer=self.lexer.lexer)

    # ---------- 模块 ----------

    def p_source(self, p):
        "source : MODULE ID header SEMI items ENDMODULE"
        p[0] = ("module", p[2], p[3], p[5])

    def p_header(self, p):
        "header : LPAREN ports RPAREN"
        p[0] = p[2]

    def p_header_empty(self, p):
        """header : LPAREN RPAREN
                  | empty"""
        p[0] = []

    def p_ports(self, p):
        "ports : ports COMMA port"
        p[0] = p[1] + [p[3]]

    def p_ports_one(self, p):
        "ports : port"
        p[0] = [p[1]]

    def p_port_decl(self, p):
        "port : direction net signedness range ID"
        p[0] = ("decl", p[1], p[3], p[4], p[5])

    def p_port_name(self, p):
        "port : ID"
        p[0] = ("name", p[1])

    def p_direction(self, p):
        """direction : INPUT
                     | OUTPUT"""
        p[0] = p[1]

    def p_net(self, p):
        """net : WIRE
               | empty"""
        p[0] = p[1]

    def p_signedness(self, p):
        """signedness : SIGNED
                      | empty"""
        p[0] = p[1] == "signed"

    def p_range(self, p):
        "range : LBRACKET expr COLON expr RBRACKET"
        p[0] = (p[2], p[4])

    def p_range_empty(self, p):
        "range : empty"
        p[0] = None

    def p_items(self, p):
        "items : items item"
        p[0] = p[1] + p[2]

    def p_items_empty(self, p):
        "items : empty"
        p[0] = []

    def p_item_port(self, p):
        "item : direction net signedness range names SEMI"
        p[0] = [("decl", p[1], p[3], p[4], n, None, p.lexer.lineno) for n in p[5]]

    def p_item_wire(self, p):
        "item : WIRE signedness range wire_decls SEMI"
        p[0] = [("decl", "wire", p[2], p[3], n, e, p.lexer.lineno) for n, e in p[4]]

    def p_item_assign(self, p):
        "item : ASSIGN assignments SEMI"
        p[0] = [("assign", lhs, e, p.lexer.lineno) for lhs, e in p[2]]

    def p_item_instance(self, p):
        """item : ID ID LPAREN
                | ID HASH"""
        raise UnsupportedConstruct(f"module instance '{p[1]}' (line {p.lineno(1)})")

    def p_names(self, p):
        "names : names COMMA ID"
        p[0] = p[1] + [p[3]]

    def p_names_one(self, p):
        "names : ID"
        p[0] = [p[1]]

    def p_wire_decls(self, p):
        "wire_decls : wire_decls COMMA wire_decl"
        p[0] = p[1] + [p[3]]

    def p_wire_decls_one(self, p):
        "wire_decls : wire_decl"
        p[0] = [p[1]]

    def p_wire_decl(self, p):
        "wire_decl : ID"
        p[0] = (p[1], None)

    def p_wire_decl_init(self, p):
        "wire_decl : ID EQUALS expr"
        p[0] = (p[1], p[3])

    def p_assignments(self, p):
        "assignments : assignments COMMA assignment"
        p[0] = p[1] + [p[3]]

    def p_assignments_one(self, p):
        "assignments : assignment"
        p[0] = [p[1]]

    def p_assignment(self, p):
        "assignment : ID EQUALS expr"
        p[0] = (p[1], p[3])

    def p_assignment_select(self, p):
        "assignment : ID LBRACKET expr RBRACKET EQUALS expr"
        raise UnsupportedConstruct(f"partial assignment to '{p[1]}' (line {p.lineno(1)})")

    # ---------- 表达式 ----------

    def p_expr_binary(self, p):
        """expr : expr PLUS expr
                | expr MINUS expr
                | expr TIMES expr
                | expr AND expr
                | expr OR expr
                | expr XOR expr
                | expr XNOR expr
                | expr LSHIFT expr
                | expr RSHIFT expr
                | expr LT expr
                | expr LE expr
                | expr GT expr
                | expr GE expr
                | expr EQ expr
                | expr NE expr
                | expr LAND expr
                | expr LOR expr"""
        op = "~^" if p[2] == "^~" else p[2]
        p[0] = ("bin", op, p[1], p[3])

    def p_expr_binary_nand(self, p):
        """expr : expr NAND expr
                | expr NOR expr"""
        raise UnsupportedConstruct(f"binary operator {p[2]!r} (line {p.lineno(2)})")

    def p_expr_unary(self, p):
        """expr : MINUS expr %prec UNARY
                | PLUS expr %prec UNARY
                | NOT expr %prec UNARY
                | LNOT expr %prec UNARY
                | AND expr %prec UNARY
                | OR expr %prec UNARY
                | XOR expr %prec UNARY
                | NAND expr %prec UNARY
                | NOR expr %prec UNARY
                | XNOR expr %prec UNARY"""
        op = p[1]
        if op in ("&", "|", "^", "~&", "~|", "~^", "^~"):
            op = "r" + ("~^" if op == "^~" else op)
        p[0] = ("un", op, p[2])

    def p_expr_cond(self, p):
        "expr : expr QUESTION expr COLON expr"
        p[0] = ("cond", p[1], p[3], p[5])

    def p_expr_primary(self, p):
        "expr : primary"
        p[0] = p[1]

    def p_primary_id(self, p):
        "primary : ID"
        p[0] = ("id", p[1], p.lineno(1))

    def p_primary_bit(self, p):
        "primary : ID LBRACKET expr RBRACKET"
        p[0] = ("sel", p[1], p[3], p[3], p.lineno(1))

    def p_primary_part(self, p):
        "primary : ID LBRACKET expr COLON expr RBRACKET"
        p[0] = ("sel", p[1], p[3], p[5], p.lineno(1))

    def p_primary_number(self, p):
        "primary : NUMBER"
        value, width, signed = p[1]
        p[0] = ("num", value, width, signed)

    def p_primary_paren(self, p):
        "primary : LPAREN expr RPAREN"
        p[0] = p[2]

    def p_primary_concat(self, p):
        "primary : LBRACE exprs RBRACE"
        p[0] = ("concat", p[2])

    def p_primary_repl(self, p):
        "primary : LBRACE expr LBRACE exprs RBRACE RBRACE"
        p[0] = ("repl", p[2], p[4])

    def p_primary_cast(self, p):
        """primary : DSIGNED LPAREN expr RPAREN
                   | DUNSIGNED LPAREN expr RPAREN"""
        p[0] = ("cast", p[1] == "$signed", p[3])

    def p_exprs(self, p):
        "exprs : exprs COMMA expr"
        p[0] = p[1] + [p[3]]

    def p_exprs_one(self, p):
        "exprs : expr"
        p[0] = [p[1]]

    def p_empty(self, p):
        "empty :"
        p[0] = None

    def p_error(self, p):
        if p is None:
            raise VerilogSyntaxError("unexpected end of input", 0, 0)
        data = self._text
        col = p.lexpos - data.rfind("\n", 0, p.lexpos)
        raise VerilogSyntaxError(f"unexpected {p.type} {p.value!r}", p.lineno, col)


_parser: Optional[VerilogParser] = None


def _get_parser() -> VerilogParser:
    global _parser
    if _parser is None:
        _parser = VerilogParser()
    return _parser


# ---------------------------------------------------------------------------
# 常量表达式（范围 / 下标 / 复制次数）
# ---------------------------------------------------------------------------

def _const_value(e) -> int:
    kind = e[0]
    if kind == "num":
        return e[1]
    if kind == "un" and e[1] in ("-", "+"):
        v = _const_value(e[2])
        return -v if e[1] == "-" else v
    if kind == "bin" and e[1] in ("+", "-", "*"):
        a, b = _const_value(e[2]), _const_value(e[3])
        return {"+": a + b, "-": a - b, "*": a * b}[e[1]]
    raise UnsupportedConstruct("range, index and replication count must be constant")


# ---------------------------------------------------------------------------
# 位宽推断与降级到 VeriLang
# ---------------------------------------------------------------------------

_CONTEXT_BINARY = {"+", "-", "*", "&", "|", "^", "~^"}
_COMPARE = {"<", "<=", ">", ">=", "==", "!="}
_SHIFT = {"<<", ">>"}
_LOGIC = {"&&", "||"}


@dataclass
class _Signal:
    width: int
    signed: bool
    lsb: int = 0
    kind: str = "wire"   # input / output / wire
    term: Optional[Term] = None


class _Lowering:
    def __init__(self, signals: Dict[str, _Signal]):
        self.signals = signals

    def _sig(self, name: str, line=None) -> _Signal:
        s = self.signals.get(name)
        if s is None:
            raise WidthInferenceError(f"undeclared signal '{name}'" + (f" (line {line})" if line else ""))
        return s

    def _ref(self, name: str, line=None) -> Term:
        s = self._sig(name, line)
        if s.kind == "input":
            return Var(name)
        if s.term is None:
            raise WidthInferenceError(f"signal '{name}' is used but never assigned")
        return s.term

    # ---------- 自身宽度 / 符号 ----------

    def self_width(self, e) -> int:
        kind = e[0]
        if kind == "id":
            return self._sig(e[1], e[2]).width
        if kind == "num":
            return e[2] or UNSIGNED_LITERAL_WIDTH
        if kind == "sel":
            return abs(_const_value(e[2]) - _const_value(e[3])) + 1
        if kind == "bin":
            op = e[1]
            if op in _CONTEXT_BINARY:
                return max(self.self_width(e[2]), self.self_width(e[3]))
            if op in _SHIFT:
                return self.self_width(e[2])
            return 1
        if kind == "un":
            if e[1] in ("-", "+", "~"):
                return self.self_width(e[2])
            return 1
        if kind == "cond":
            return max(self.self_width(e[2]), self.self_width(e[3]))
        if kind == "concat":
            return sum(self.self_width(x) for x in e[1])
        if kind == "repl":
            return _const_value(e[1]) * sum(self.self_width(x) for x in e[2])
        if kind == "cast":
            return self.self_width(e[2])
        raise UnsupportedConstruct(f"expression kind {kind}")

    def self_signed(self, e) -> bool:
        kind = e[0]
        if kind == "id":
            return self._sig(e[1], e[2]).signed
        if kind == "num":
            return e[3]
        if kind == "bin":
            op = e[1]
            if op in _CONTEXT_BINARY:
                return self.self_signed(e[2]) and self.self_signed(e[3])
            if op in _SHIFT:
                return self.self_signed(e[2])
            return False
        if kind == "un":
            return e[1] in ("-", "+", "~") and self.self_signed(e[2])
        if kind == "cond":
            return self.self_signed(e[2]) and self.self_signed(e[3])
        if kind == "cast":
            return e[1]
        return False

    # ---------- 降级 ----------

    def self_arg(self, e, signage: Optional[Signage] = None) -> Arg:
        """自决定操作数：在自身宽度 / 符号下计算"""
        w = self.self_width(e)
        s = Signage.SIGN if self.self_signed(e) else Signage.UNSIGN
        a = self.lower(e, w, s)
        if signage is not None and a.signage != signage:
            a = Arg(a.width, signage, a.term)
        return a

    def lower(self, e, W: int, S: Signage) -> Arg:
        """
        在上下文宽度 W、上下文符号 S 下降级一个表达式

        Returns:
            作为父节点操作数使用的 Arg
        """
        kind = e[0]
        if kind == "id":
            return Arg(self._sig(e[1], e[2]).width, S, self._ref(e[1], e[2]))
        if kind == "num":
            return Arg(e[2] or UNSIGNED_LITERAL_WIDTH, S, Const(e[1]))
        if kind == "sel":
            return Arg(self.self_width(e), S, self._select(e))
        if kind == "cast":
            inner = self.self_arg(e[2])
            return Arg(inner.width, S, inner.term)
        if kind == "bin":
            op, l, r = e[1], e[2], e[3]
            if op in _CONTEXT_BINARY:
                node = Node(op, W, (self.lower(l, W, S), self.lower(r, W, S)))
                return Arg(W, S, node)
            if op in _SHIFT:
                amt = self.self_arg(r, Signage.UNSIGN)
                return Arg(W, S, Node(op, W, (self.lower(l, W, S), amt)))
            if op in _COMPARE:
                cw = max(self.self_width(l), self.self_width(r))
                cs = Signage.SIGN if (self.self_signed(l) and self.self_signed(r)) else Signage.UNSIGN
                node = Node(op, 1, (self.lower(l, cw, cs), self.lower(r, cw, cs)))
                return Arg(1, S, node)
            if op in _LOGIC:
                node = Node(op, 1, (self.self_arg(l), self.self_arg(r)))
                return Arg(1, S, node)
        if kind == "un":
            op, x = e[1], e[2]
            if op == "+":
                return self.lower(x, W, S)
            if op in ("-", "~"):
                return Arg(W, S, Node(op, W, (self.lower(x, W, S),)))
            # ! 与归约都是 1 位自决定
            return Arg(1, S, Node(op, 1, (self.self_arg(x),)))
        if kind == "cond":
            c = self.self_arg(e[1], Signage.UNSIGN)
            node = Node("?", W, (c, self.lower(e[2], W, S), self.lower(e[3], W, S)))
            return Arg(W, S, node)
        if kind == "concat":
            if len(e[1]) == 1:
                inner = self.self_arg(e[1][0])
                return Arg(inner.width, S, inner.term)
            node = self._concat(e[1])
            return Arg(int(node.width), S, node)
        if kind == "repl":
            n = _const_value(e[1])
            if n < 1:
                raise WidthInferenceError("replication count must be >= 1")
            if len(e[2]) > 1:
                inner = self._concat(e[2])
                inner_arg = Arg(int(inner.width), Signage.UNSIGN, inner)
            else:
                inner_arg = self.self_arg(e[2][0], Signage.UNSIGN)
            node = Node("repl", n * int(inner_arg.width), (inner_arg,), (n,))
            return Arg(int(node.width), S, node)
        raise UnsupportedConstruct(f"expression kind {kind}")

    def _concat(self, items) -> Node:
        args = tuple(self.self_arg(x, Signage.UNSIGN) for x in items)
        return Node("concat", sum(int(a.width) for a in args), args)

    def _select(self, e) -> Node:
        name, hi_e, lo_e, line = e[1], e[2], e[3], e[4]
        s = self._sig(name, line)
        hi, lo = _const_value(hi_e) - s.lsb, _const_value(lo_e) - s.lsb
        if hi < lo:
            raise UnsupportedConstruct(f"ascending part-select on '{name}' (line {line})")
        if lo < 0 or hi >= s.width:
            raise WidthInferenceError(f"select [{hi + s.lsb}:{lo + s.lsb}] out of range for '{name}' (line {line})")
        return Node("slice", hi - lo + 1, (Arg(s.width, Signage.UNSIGN, self._ref(name, line)),), (hi, lo))

    def lower_assignment(self, e, w_lhs: int) -> Term:
        """赋值右侧：上下文宽度取 max(右侧自身宽度, 左值宽度)，顶层输出宽度等于左值宽度"""
        W = max(self.self_width(e), w_lhs)
        S = Signage.SIGN if self.self_signed(e) else Signage.UNSIGN
        a = self.lower(e, W, S)
        t = a.term
        if isinstance(t, Node) and int(a.width) == int(t.width) and (
            a.signage == Signage.UNSIGN or w_lhs <= int(a.width)
        ):
            return Node(t.op, w_lhs, t.args, t.params)
        return Node("slice", w_lhs, (a,), (w_lhs - 1, 0))


# ---------------------------------------------------------------------------
# 入口
# ---------------------------------------------------------------------------

def _decl_width(rng) -> Tuple[int, int]:
    if rng is None:
        return 1, 0
    msb, lsb = _const_value(rng[0]), _const_value(rng[1])
    if msb < lsb:
        raise UnsupportedConstruct(f"ascending range [{msb}:{lsb}]")
    return msb - lsb + 1, lsb


def parse_verilog(text: str) -> DesignModule:
    """
    解析一个组合 Verilog 模块

    Args:
        text: 源文本，恰好包含一个 module

    Returns:
        DesignModule，bindings 按依赖拓扑序

    Raises:
        VerilogSyntaxError: 语法错误（带行 / 列）
        UnsupportedConstruct: 超出组合子集的构造
        WidthInferenceError: 未声明信号、下标越界、输出未驱动等
    """
    ast = _get_parser().parse(text)
    _, mod_name, header, items = ast

    signals: Dict[str, _Signal] = {}
    port_order: List[str] = []
    assigns: List[Tuple[str, tuple, int]] = []

    def declare(direction, signed, rng, name, line=0):
        w, lsb = _decl_width(rng)
        kind = {"input": "input", "output": "output"}.get(direction, "wire")
        prev = signals.get(name)
        if prev is not None:
            # 旧式端口：头部只有名字，类型在体内声明；output 后再跟 wire 声明是合法的
            if prev.kind == "port" or (prev.kind == "output" and kind == "wire"):
                kind = prev.kind if prev.kind == "output" else kind
            else:
                raise WidthInferenceError(f"signal '{name}' declared twice (line {line})")
        signals[name] = _Signal(w, signed, lsb, kind)

    last = None
    for port in header:
        if port[0] == "decl":
            _, direction, signed, rng, name = port
            last = (direction, signed, rng)
            declare(direction, signed, rng, name)
        elif last is not None:
            declare(last[0], last[1], last[2], port[1])
        else:
            signals[port[1]] = _Signal(1, False, 0, "port")
        port_order.append(port[-1])

    for item in items:
        if item[0] == "decl":
            _, direction, signed, rng, name, init, line = item
            declare(direction, signed, rng, name, line)
            if init is not None:
                assigns.append((name, init, line))
        else:
            _, lhs, e, line = item
            assigns.append((lhs, e, line))

    for name, s in signals.items():
        if s.kind == "port":
            raise WidthInferenceError(f"port '{name}' has no direction declaration")

    driven: Dict[str, tuple] = {}
    for lhs, e, line in assigns:
        s = signals.get(lhs)
        if s is None:
            raise WidthInferenceError(f"assignment to undeclared signal '{lhs}' (line {line})")
        if s.kind == "input":
            raise WidthInferenceError(f"assignment to input '{lhs}' (line {line})")
        if lhs in driven:
            raise WidthInferenceError(f"signal '{lhs}' has multiple drivers (line {line})")
        driven[lhs] = e

    # 依赖图 → 拓扑序；同层按源文件出现顺序
    order_hint = {lhs: i for i, (lhs, _, _) in enumerate(assigns)}
    graph = {lhs: {d for d in _refs(e) if d in driven} for lhs, e in driven.items()}
    sorter = TopologicalSorter(graph)
    try:
        sorter.prepare()
    except CycleError as exc:
        raise UnsupportedConstruct(f"combinational loop through {exc.args[1]}") from exc
    order: List[str] = []
    while sorter.is_active():
        ready = sorted(sorter.get_ready(), key=order_hint.get)
        order.extend(ready)
        sorter.done(*ready)

    lowering = _Lowering(signals)
    mod = DesignModule(name=mod_name)
    for name in order:
        s = signals[name]
        term = lowering.lower_assignment(driven[name], s.width)
        s.term = term
        mod.bindings.append((name, term))

    for name in port_order:
        s = signals[name]
        if s.kind == "input":
            mod.inputs.append((name, s.width, Signage.SIGN if s.signed else Signage.UNSIGN))
        elif s.kind == "output":
            if name not in driven:
                raise WidthInferenceError(f"output '{name}' is never driven")
            mod.outputs.append((name, s.width))
            mod.output_map[name] = name
    # 体内声明、不在头部的端口
    for name, s in signals.items():
        if name in port_order:
            continue
        if s.kind == "input":
            mod.inputs.append((name, s.width, Signage.SIGN if s.signed else Signage.UNSIGN))
        elif s.kind == "output":
            if name not in driven:
                raise WidthInferenceError(f"output '{name}' is never driven")
            mod.outputs.append((name, s.width))
            mod.output_map[name] = name
    mod.signals = {n: (s.width, Signage.SIGN if s.signed else Signage.UNSIGN) for n, s in signals.items()}
    if not mod.outputs:
        raise WidthInferenceError(f"module '{mod_name}' has no outputs")
    logger.debug("parsed module %s: %s inputs, %s bindings", mod_name, len(mod.inputs), len(mod.bindings))
    return mod


def _refs(e) -> List[str]:
    kind = e[0]
    if kind == "id":
        return [e[1]]
    if kind == "sel":
        return [e[1]]
    if kind == "num":
        return []
    if kind in ("bin",):
        return _refs(e[2]) + _refs(e[3])
    if kind in ("un", "cast"):
        return _refs(e[2])
    if kind == "cond":
        return _refs(e[1]) + _refs(e[2]) + _refs(e[3])
    if kind == "concat":
        return [r for x in e[1] for r in _refs(x)]
    if kind == "repl":
        return [r for x in e[2] for r in _refs(x)]
    return []


# ---------------------------------------------------------------------------
# 打印（parse → print → parse 得到相同的绑定）
# ---------------------------------------------------------------------------

def _decl(kind: str, width: int, signage: Signage) -> str:
    parts = [kind]
    if signage == Signage.SIGN:
        parts.append("signed")
    if width > 1:
        parts.append(f"[{width - 1}:0]")
    return " ".join(parts)


class _ExprPrinter:
    """
    把绑定项打印成 Verilog 表达式

    names 是已打印绑定的 项 → 信号名；signals 给出每个名字声明时的符号，
    当操作数的符号与声明不同时补 $signed / $unsigned，保证重新解析得到同一个项。
    """

    def __init__(self, names: Dict[Term, str], signals: Dict[str, Tuple[int, Signage]]):
        self.names = names
        self.signals = signals

    def _name(self, t: Term) -> Optional[str]:
        if isinstance(t, Var):
            return t.name
        return self.names.get(t)

    def arg(self, a: Arg) -> str:
        t = a.term
        if isinstance(t, Const):
            s = "s" if a.signage == Signage.SIGN else ""
            return f"{int(a.width)}'{s}d{t.value}"
        name = self._name(t)
        if name is None:
            return self.node(t)
        declared = self.signals.get(name, (0, Signage.UNSIGN))[1]
        if declared == a.signage:
            return name
        return f"$signed({name})" if a.signage == Signage.SIGN else f"$unsigned({name})"

    def node(self, n: Node) -> str:
        op, args = n.op, n.args
        if op == "slice":
            hi, lo = n.params
            name = self._name(args[0].term)
            if name is None:
                raise UnsupportedConstruct("part-select of a compound expression has no Verilog form")
            return f"{name}[{hi}:{lo}]"
        if op == "concat":
            return "{" + ", ".join(self.arg(a) for a in args) + "}"
        if op == "repl":
            inner = args[0].term
            if isinstance(inner, Node) and inner.op == "concat" and inner not in self.names:
                body = ", ".join(self.arg(a) for a in inner.args)
            else:
                body = self.arg(args[0])
            return "{" + str(n.params[0]) + "{" + body + "}}"
        if op == "?":
            return f"({self.arg(args[0])} ? {self.arg(args[1])} : {self.arg(args[2])})"
        if op.startswith("r"):
            return f"({op[1:]}{self.arg(args[0])})"
        if op in ("SUM", "MUXAR", "FMA"):
            raise UnsupportedConstruct(f"operator {op} has no direct Verilog form")
        if len(args) == 1:
            return f"({op}{self.arg(args[0])})"
        return f"({self.arg(args[0])} {op} {self.arg(args[1])})"

    def top(self, t: Term) -> str:
        # 裸信号 / 常数赋值在解析时被包成 slice(w-1, 0)
        if isinstance(t, Node) and t.op == "slice" and t.params == (int(t.width) - 1, 0):
            a = t.args[0]
            if isinstance(a.term, Const) or self._name(a.term) is not None:
                return self.arg(a)
            cast = "$signed" if a.signage == Signage.SIGN else "$unsigned"
            return f"{cast}({self.node(a.term)})"
        if isinstance(t, Node):
            return self.node(t)
        return self.arg(Arg(1, Signage.UNSIGN, t))


def print_verilog(mod: DesignModule) -> str:
    """把 DesignModule 打印回 Verilog 源；每个绑定一条 assign"""
    lines = [f"module {mod.name} ("]
    ports = [f"  {_decl('input', w, s)} {n}" for n, w, s in mod.inputs]
    ports += [
        f"  {_decl('output', w, mod.signals.get(n, (w, Signage.UNSIGN))[1])} {n}"
        for n, w in mod.outputs
    ]
    lines.append(",\n".join(ports))
    lines.append(");")
    outputs = {n for n, _ in mod.outputs}
    for name, term in mod.bindings:
        if name in outputs:
            continue
        w, s = mod.signals.get(name, (int(term.width) if isinstance(term, Node) else 1, Signage.UNSIGN))
        lines.append(f"  {_decl('wire', w, s)} {name};")
    names: Dict[Term, str] = {}
    for name, term in mod.bindings:
        printer = _ExprPrinter(names, mod.signals)
        lines.append(f"  assign {name} = {printer.top(term)};")
        if isinstance(term, Node):
            names.setdefault(term, name)
    lines.append("endmodule")
    return "\n".join(lines) + "\n"
