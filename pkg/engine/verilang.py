"""
VeriLang 文本格式：S 表达式的解析与规范化打印

    term   ::= (op width [params…] arg … arg) | var | int
    arg    ::= width signage term
    width  ::= var | int
    signage::= var | unsign | sign

slice 与 repl 的整数参数紧跟在输出位宽之后：(slice 4 7 4 8 unsign a)。
同一套解析器也用于规则模式（allow_pattern=True 时位宽 / 符号可以是变量，
右侧位宽可以是 w4+1、w2+2^w3 这样的表达式，常数的标注可以写成通配符 "_ _"，
算子可以写成 "+|-" 这样的算子集合）。
"""

import logging
from typing import List, Optional, Tuple

import ply.lex as lex

from engine.errors import ArityError, VerilogSyntaxError
from engine.ir import (
    OP_ALIASES,
    OPERATORS,
    Arg,
    Const,
    Node,
    Signage,
    Term,
    Var,
    arity_ok,
    is_concrete,
)

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# 词法
# ---------------------------------------------------------------------------

class _SexpLexer:
    tokens = ("LPAREN", "RPAREN", "INT", "SYMBOL")

    t_LPAREN = r"\("
    t_RPAREN = r"\)"
    t_ignore = " \t\r"

    def t_INT(self, t):
        r"\d+(?![^\s()])"
        t.value = int(t.value)
        return t

    def t_SYMBOL(self, t):
        r"[^\s()]+"
        return t

    def t_newline(self, t):
        r"\n+"
        t.lexer.lineno += len(t.value)

    def t_error(self, t):
        raise VerilogSyntaxError(f"illegal character {t.value[0]!r}", t.lineno, t.lexpos)

    def __init__(self):
        self.lexer = lex.lex(module=self, optimize=False, debug=False)

    def tokenize(self, text: str) -> List[lex.LexToken]:
        self.lexer.lineno = 1
        self.lexer.input(text)
        return list(iter(self.lexer.token, None))


_lexer: Optional[_SexpLexer] = None


def _get_lexer() -> _SexpLexer:
    global _lexer
    if _lexer is None:
        _lexer = _SexpLexer()
    return _lexer


# ---------------------------------------------------------------------------
# 语法
# ---------------------------------------------------------------------------

class _Parser:
    def __init__(self, tokens, allow_pattern: bool):
        self.toks = tokens
        self.pos = 0
        self.allow_pattern = allow_pattern

    def _peek(self):
        return self.toks[self.pos] if self.pos < len(self.toks) else None

    def _next(self, what: str):
        tok = self._peek()
        if tok is None:
            raise ArityError(f"unexpected end of input, expected {what}")
        self.pos += 1
        return tok

    def _fail(self, tok, msg: str):
        raise VerilogSyntaxError(msg, getattr(tok, "lineno", 0), getattr(tok, "lexpos", 0))

    def term(self) -> Term:
        tok = self._next("term")
        if tok.type == "INT":
            return Const(tok.value)
        if tok.type == "SYMBOL":
            return Var(tok.value)
        if tok.type == "RPAREN":
            self._fail(tok, "unexpected ')'")
        return self._node(tok)

    def _node(self, open_tok) -> Node:
        op_tok = self._next("operator")
        if op_tok.type != "SYMBOL":
            self._fail(op_tok, "expected operator symbol")
        op = OP_ALIASES.get(op_tok.value, op_tok.value)
        ops = [op]
        if self.allow_pattern and op not in OPERATORS:
            parts = op.split("|")
            if len(parts) > 1 and all(p in OPERATORS for p in parts):
                ops = parts
        for o in ops:
            if o not in OPERATORS:
                self._fail(op_tok, f"unknown operator {o!r}")
        width = self._width()
        n_params = OPERATORS[ops[0]].n_params
        params = []
        for _ in range(n_params):
            tok = self._next("integer parameter")
            if tok.type == "INT":
                params.append(tok.value)
            elif tok.type == "SYMBOL" and self.allow_pattern:
                # 模式里的参数可以是位宽表达式，如 slice 的 w1-1
                params.append(tok.value)
            else:
                raise ArityError(f"operator {op} expects {n_params} integer parameters")
        args = []
        while True:
            tok = self._peek()
            if tok is None:
                raise ArityError(f"unterminated ({op} …)")
            if tok.type == "RPAREN":
                self.pos += 1
                break
            w = self._width()
            s = self._signage()
            t = self.term()
            args.append(Arg(w, s, t))
        for o in ops:
            if not arity_ok(o, len(args)):
                raise ArityError(f"operator {o} does not accept {len(args)} arguments")
        return Node(op, width, tuple(args), tuple(params))

    def _width(self):
        tok = self._next("width")
        if tok.type == "INT":
            if tok.value < 1:
                raise ArityError("width must be >= 1")
            return tok.value
        if tok.type == "SYMBOL" and self.allow_pattern:
            return tok.value
        raise ArityError(f"expected width, got {tok.value!r}")

    def _signage(self):
        tok = self._next("signage")
        if tok.type == "SYMBOL":
            if tok.value in ("unsign", "sign"):
                return Signage(tok.value)
            if self.allow_pattern:
                return tok.value
        raise ArityError(f"expected signage, got {tok.value!r}")


def parse_verilang(text: str, allow_pattern: bool = False) -> Term:
    """
    解析一个 VeriLang 项

    Args:
        text: S 表达式文本（空白不敏感）
        allow_pattern: 是否允许位宽 / 符号变量与算子集合

    Raises:
        VerilogSyntaxError: 括号 / 词法错误
        ArityError: 参数个数或标注缺失
    """
    toks = _get_lexer().tokenize(text)
    if not toks:
        raise VerilogSyntaxError("empty VeriLang text")
    p = _Parser(toks, allow_pattern)
    t = p.term()
    if p.pos != len(toks):
        extra = toks[p.pos]
        raise VerilogSyntaxError("trailing tokens after term", extra.lineno, extra.lexpos)
    if not allow_pattern and not is_concrete(t):
        raise ArityError("term is not concrete")
    return t


def parse_pattern(text: str) -> Term:
    return parse_verilang(text, allow_pattern=True)


def print_verilang(t: Term) -> str:
    """规范化打印：单空格分隔，乘法写作 *"""
    if isinstance(t, Var):
        return t.name
    if isinstance(t, Const):
        return str(t.value)
    parts: List[str] = [t.op, str(t.width)]
    parts.extend(str(p) for p in t.params)
    for a in t.args:
        parts.extend([str(a.width), str(a.signage), print_verilang(a.term)])
    return "(" + " ".join(parts) + ")"
