"""
VeriLang 中间表示：带位宽 / 符号标注的项（term）及其整数语义

语义（对每个操作数先取 residue，再做整数运算，最后按输出位宽无符号截断）：
    ⟦(op w w1 s1 t1 … wn sn tn)⟧ = (⟦op⟧ ⟦t1⟧_{w1,s1} … ⟦tn⟧_{wn,sn})_{w,unsign}

    k_{w,unsign} = k mod 2^w
    k_{w,sign}   = 2(k mod 2^(w-1)) − (k mod 2^w)

equivalent_bounded 是整个工具的"等价性检查器"：在输入总位数不超过预算时，
用 numpy 向量化地穷举所有输入赋值。
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Iterator, List, Optional, Set, Tuple, Union

import numpy as np

from engine.errors import ArityError, BudgetExceeded, UnsupportedOperator

logger = logging.getLogger(__name__)

DEFAULT_BUDGET = 24
# int64 向量路径允许的最大位宽；超过则退回 object dtype（Python 大整数）
_INT64_MAX_WIDTH = 62
_CHUNK = 1 << 20


# ---------------------------------------------------------------------------
# 基本类型
# ---------------------------------------------------------------------------

class Signage(str, Enum):
    UNSIGN = "unsign"
    SIGN = "sign"

    def __str__(self) -> str:
        return self.value


# 模式中的位宽 / 符号可以是变量名（str）
WidthLike = Union[int, str]
SignageLike = Union[Signage, str]


@dataclass(frozen=True)
class Var:
    """输入信号，或在模式中绑定到 e-class 的项变量"""
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Const:
    value: int

    def __str__(self) -> str:
        return str(self.value)


@dataclass(frozen=True)
class Arg:
    width: WidthLike
    signage: SignageLike
    term: "Term"


@dataclass(frozen=True)
class Node:
    op: str
    width: WidthLike
    args: Tuple[Arg, ...]
    # slice 的 (hi, lo)、repl 的重复次数
    params: Tuple[int, ...] = ()
    _hash: int = field(init=False, repr=False, compare=False, default=0)

    def __post_init__(self):
        object.__setattr__(self, "_hash", hash((self.op, self.width, self.args, self.params)))

    def __hash__(self) -> int:
        return self._hash

    def __reduce__(self):
        # 子进程的字符串哈希种子可能不同，反序列化时重新计算 _hash
        return (Node, (self.op, self.width, self.args, self.params))


Term = Union[Var, Const, Node]
Env = Dict[str, int]


# ---------------------------------------------------------------------------
# 算子表
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OpInfo:
    name: str
    min_arity: int
    max_arity: Optional[int]  # None = n 元
    n_params: int
    kind: str
    verilog: str


def _op(name, lo, hi, kind, verilog, n_params=0):
    return name, OpInfo(name, lo, hi, n_params, kind, verilog)


OPERATORS: Dict[str, OpInfo] = dict([
    # 直接来自 Verilog 的算子
    _op("+", 2, 2, "arith", "+"),
    _op("-", 1, 2, "arith", "-"),          # 1 元 = 取负
    _op("*", 2, 2, "arith", "*"),
    _op("~", 1, 1, "bitwise", "~"),
    _op("&", 2, 2, "bitwise", "&"),
    _op("|", 2, 2, "bitwise", "|"),
    _op("^", 2, 2, "bitwise", "^"),
    _op("~^", 2, 2, "bitwise", "~^"),
    _op("r&", 1, 1, "reduce", "&"),
    _op("r|", 1, 1, "reduce", "|"),
    _op("r^", 1, 1, "reduce", "^"),
    _op("r~&", 1, 1, "reduce", "~&"),
    _op("r~|", 1, 1, "reduce", "~|"),
    _op("r~^", 1, 1, "reduce", "~^"),
    _op("<<", 2, 2, "shift", "<<"),
    _op(">>", 2, 2, "shift", ">>"),
    _op("?", 3, 3, "mux", "?:"),
    _op("concat", 2, None, "wiring", "{}"),
    _op("repl", 1, 1, "wiring", "{{}}", n_params=1),
    _op("==", 2, 2, "compare", "=="),
    _op("!=", 2, 2, "compare", "!="),
    _op("<", 2, 2, "compare", "<"),
    _op("<=", 2, 2, "compare", "<="),
    _op(">", 2, 2, "compare", ">"),
    _op(">=", 2, 2, "compare", ">="),
    _op("!", 1, 1, "logic", "!"),
    _op("&&", 2, 2, "logic", "&&"),
    _op("||", 2, 2, "logic", "||"),
    # 自定义算子
    _op("slice", 1, 1, "wiring", "[:]", n_params=2),
    _op("SUM", 2, None, "merge", "SUM"),
    _op("MUXAR", 3, 3, "merge", "MUXAR"),
    _op("FMA", 3, 3, "merge", "FMA"),
])

OP_ALIASES = {"×": "*", "mul": "*", "neg": "-"}


def op_info(op: str) -> OpInfo:
    info = OPERATORS.get(op)
    if info is None:
        raise UnsupportedOperator(f"operator {op!r} has no integer interpretation")
    return info


def arity_ok(op: str, n: int) -> bool:
    info = OPERATORS.get(op)
    if info is None:
        return False
    if n < info.min_arity:
        return False
    return info.max_arity is None or n <= info.max_arity


# ---------------------------------------------------------------------------
# residue
# ---------------------------------------------------------------------------

def residue(k, w: int, s: Signage):
    """
    最小正剩余定义下的位向量解释

    Args:
        k: 整数（或 numpy 整数数组）
        w: 位宽，>= 1
        s: Signage.UNSIGN → k mod 2^w；Signage.SIGN → 2(k mod 2^(w-1)) − (k mod 2^w)

    Returns:
        unsign 时落在 [0, 2^w)，sign 时落在 [−2^(w−1), 2^(w−1))
    """
    u = k & ((1 << w) - 1)
    if s == Signage.SIGN:
        half = 1 << (w - 1)
        return (u ^ half) - half
    return u


# ---------------------------------------------------------------------------
# 结构工具
# ---------------------------------------------------------------------------

def is_concrete(t: Term) -> bool:
    """所有位宽 / 符号都是字面量，且算子在算子表内"""
    if isinstance(t, (Var, Const)):
        return True
    if t.op not in OPERATORS or not isinstance(t.width, int):
        return False
    for a in t.args:
        if not isinstance(a.width, int) or not isinstance(a.signage, Signage):
            return False
        if not is_concrete(a.term):
            return False
    return True


def free_vars(t: Term) -> Set[str]:
    out: Set[str] = set()
    for sub in iter_subterms(t):
        if isinstance(sub, Var):
            out.add(sub.name)
    return out


def iter_subterms(t: Term) -> Iterator[Term]:
    """DAG 感知的先序遍历（共享子项只访问一次）"""
    seen: Set[int] = set()
    stack = [t]
    while stack:
        cur = stack.pop()
        if id(cur) in seen:
            continue
        seen.add(id(cur))
        yield cur
        if isinstance(cur, Node):
            for a in reversed(cur.args):
                stack.append(a.term)


def input_widths(*terms: Term) -> Dict[str, int]:
    """每个变量被消费的最大位宽；只依赖低位的运算在该位宽下穷举即完备"""
    widths: Dict[str, int] = {}
    for t in terms:
        for sub in iter_subterms(t):
            if isinstance(sub, Node):
                for a in sub.args:
                    if isinstance(a.term, Var) and isinstance(a.width, int):
                        widths[a.term.name] = max(widths.get(a.term.name, 0), a.width)
    return widths


def term_size(t: Term) -> int:
    return sum(1 for _ in iter_subterms(t))


def count_ops(t: Term, ops: Set[str]) -> int:
    return sum(1 for sub in iter_subterms(t) if isinstance(sub, Node) and sub.op in ops)


def max_width(*terms: Term) -> int:
    m = 1
    for t in terms:
        for sub in iter_subterms(t):
            if isinstance(sub, Node):
                m = max(m, int(sub.width), *(int(a.width) for a in sub.args))
                if sub.op == "slice":
                    m = max(m, sub.params[0] + 1)
            elif isinstance(sub, Const):
                m = max(m, sub.value.bit_length())
    return m


def verify_arity(t: Term) -> None:
    for sub in iter_subterms(t):
        if isinstance(sub, Node) and sub.op in OPERATORS:
            info = OPERATORS[sub.op]
            if not arity_ok(sub.op, len(sub.args)) or len(sub.params) != info.n_params:
                raise ArityError(f"operator {sub.op} got {len(sub.args)} args / {len(sub.params)} params")


# ---------------------------------------------------------------------------
# 求值
# ---------------------------------------------------------------------------

class _Scalar:
    """Python 大整数后端（单点求值）"""

    @staticmethod
    def where(c, a, b):
        return a if c else b

    @staticmethod
    def b2i(x):
        return int(bool(x))

    @staticmethod
    def clamp(x, hi: int):
        return x if x < hi else hi


class _Vector:
    """numpy 后端；dtype 为 int64 或 object"""

    def __init__(self, dtype):
        self.dtype = dtype

    @staticmethod
    def where(c, a, b):
        return np.where(c != 0, a, b)

    def b2i(self, x):
        return np.asarray(x).astype(np.int64).astype(self.dtype)

    @staticmethod
    def clamp(x, hi: int):
        return np.minimum(x, hi)


def _apply(op: str, node: Node, vals: List[Any], be) -> Any:
    """对已取 residue 的操作数应用 ⟦op⟧；返回值尚未做输出截断"""
    W = int(node.width)
    ws = [int(a.width) for a in node.args]
    if op == "+":
        return vals[0] + vals[1]
    if op == "-":
        return -vals[0] if len(vals) == 1 else vals[0] - vals[1]
    if op == "*":
        return vals[0] * vals[1]
    if op == "~":
        return ~vals[0]
    if op == "&":
        return vals[0] & vals[1]
    if op == "|":
        return vals[0] | vals[1]
    if op == "^":
        return vals[0] ^ vals[1]
    if op == "~^":
        return ~(vals[0] ^ vals[1])
    if op.startswith("r"):
        bits = vals[0] & ((1 << ws[0]) - 1)
        base = op.replace("~", "")
        if base == "r&":
            r = be.b2i(bits == (1 << ws[0]) - 1)
        elif base == "r|":
            r = be.b2i(bits != 0)
        else:
            r = bits & 0
            for i in range(ws[0]):
                r = r ^ ((bits >> i) & 1)
        return (r ^ 1) if "~" in op else r
    if op == "<<":
        amt = vals[1] & ((1 << ws[1]) - 1)
        shifted = vals[0] << be.clamp(amt, W)
        return be.where(be.b2i(amt >= W), shifted & 0, shifted)
    if op == ">>":
        wm = max(W, ws[0])
        v = vals[0] & ((1 << wm) - 1)
        amt = vals[1] & ((1 << ws[1]) - 1)
        shifted = v >> be.clamp(amt, wm)
        return be.where(be.b2i(amt >= wm), shifted & 0, shifted)
    if op == "?":
        return be.where(vals[0], vals[1], vals[2])
    if op == "concat":
        acc = vals[0] & ((1 << ws[0]) - 1)
        for v, w in zip(vals[1:], ws[1:]):
            acc = (acc << w) | (v & ((1 << w) - 1))
        return acc
    if op == "repl":
        pat = vals[0] & ((1 << ws[0]) - 1)
        acc = pat
        for _ in range(node.params[0] - 1):
            acc = (acc << ws[0]) | pat
        return acc
    if op == "slice":
        hi, lo = node.params
        return (vals[0] >> lo) & ((1 << (hi - lo + 1)) - 1)
    if op == "==":
        return be.b2i(vals[0] == vals[1])
    if op == "!=":
        return be.b2i(vals[0] != vals[1])
    if op == "<":
        return be.b2i(vals[0] < vals[1])
    if op == "<=":
        return be.b2i(vals[0] <= vals[1])
    if op == ">":
        return be.b2i(vals[0] > vals[1])
    if op == ">=":
        return be.b2i(vals[0] >= vals[1])
    if op == "!":
        return be.b2i(vals[0] == 0)
    if op == "&&":
        return be.b2i(vals[0] != 0) & be.b2i(vals[1] != 0)
    if op == "||":
        return be.b2i(vals[0] != 0) | be.b2i(vals[1] != 0)
    if op == "SUM":
        acc = vals[0]
        for v in vals[1:]:
            acc = acc + v
        return acc
    if op == "FMA":
        return vals[0] * vals[1] + vals[2]
    if op == "MUXAR":
        b, a, c = vals
        acc = a & 0
        for i in range(ws[0]):
            row = be.where((b >> i) & 1, a, c)
            acc = acc + (row << i)
        return acc
    raise UnsupportedOperator(f"operator {op!r} has no integer interpretation")


def _evaluate(t: Term, env: Dict[str, Any], be, memo: Dict[int, Any]):
    key = id(t)
    if key in memo:
        return memo[key]
    if isinstance(t, Var):
        if t.name not in env:
            raise KeyError(f"unbound variable {t.name}")
        out = env[t.name]
    elif isinstance(t, Const):
        out = t.value
    else:
        if t.op not in OPERATORS:
            raise UnsupportedOperator(f"operator {t.op!r} has no integer interpretation")
        vals = [
            residue(_evaluate(a.term, env, be, memo), int(a.width), a.signage)
            for a in t.args
        ]
        out = residue(_apply(t.op, t, vals, be), int(t.width), Signage.UNSIGN)
    memo[key] = out
    return out


def eval_term(t: Term, env: Env) -> int:
    """
    对具体项求值（任意精度整数）

    Args:
        t: 具体项（所有位宽 / 符号为字面量）
        env: 变量名 → 原始位模式

    Returns:
        输出值，落在 [0, 2^out_width)
    """
    return int(_evaluate(t, env, _Scalar, {}))


def eval_vector(t: Term, env: Dict[str, np.ndarray], dtype=np.int64) -> np.ndarray:
    """向量化求值：env 中每个变量是一列输入"""
    n = len(next(iter(env.values()))) if env else 1
    be = _Vector(dtype)
    out = np.asarray(_evaluate(t, env, be, {}), dtype=dtype)
    if out.shape != (n,):
        out = np.broadcast_to(out, (n,))
    return out


# ---------------------------------------------------------------------------
# 有界穷举等价性检查
# ---------------------------------------------------------------------------

def enumerate_env(widths: Dict[str, int], start: int, stop: int, dtype=np.int64) -> Dict[str, np.ndarray]:
    """把 [start, stop) 的线性下标拆成各变量的位段；按变量名排序，首个变量占最低位"""
    idx = np.arange(start, stop, dtype=np.int64)
    if dtype is not np.int64:
        idx = idx.astype(object)
    env: Dict[str, np.ndarray] = {}
    offset = 0
    for name in sorted(widths):
        w = widths[name]
        env[name] = (idx >> offset) & ((1 << w) - 1)
        offset += w
    return env


def equivalent_bounded(
    t1: Term,
    t2: Term,
    widths: Optional[Dict[str, int]] = None,
    budget: int = DEFAULT_BUDGET,
    chunk: int = _CHUNK,
) -> Tuple[bool, Optional[Env]]:
    """
    穷举所有输入，判断两个具体项是否函数等价

    Args:
        t1, t2: 具体项
        widths: 每个输入的位宽；缺省时取项中消费该变量的最大位宽
        budget: 输入总位数上限
        chunk: 每批向量化求值的输入个数

    Returns:
        (是否等价, 第一个反例 Env 或 None)

    Raises:
        BudgetExceeded: 输入总位数超过 budget
    """
    if t1 == t2:
        return True, None
    if widths is None:
        widths = input_widths(t1, t2)
    widths = dict(widths)
    for name in free_vars(t1) | free_vars(t2):
        widths.setdefault(name, 1)
    bits = sum(widths.values())
    if bits > budget:
        raise BudgetExceeded(f"{bits} input bits exceed budget {budget}", bits=bits, budget=budget)

    wide = max(max_width(t1, t2), max(widths.values(), default=1)) > _INT64_MAX_WIDTH
    dtype = object if wide else np.int64
    total = 1 << bits
    for start in range(0, total, chunk):
        stop = min(total, start + chunk)
        env = enumerate_env(widths, start, stop, dtype)
        if not env:
            v1, v2 = eval_term(t1, {}), eval_term(t2, {})
            return (True, None) if v1 == v2 else (False, {})
        r1 = eval_vector(t1, env, dtype)
        r2 = eval_vector(t2, env, dtype)
        diff = np.nonzero(r1 != r2)[0]
        if len(diff):
            i = int(diff[0])
            cex = {name: int(col[i]) for name, col in env.items()}
            logger.debug("counterexample found at index %s: %s", start + i, cex)
            return False, cex
    return True, None
