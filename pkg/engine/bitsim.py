"""
逐位门级模拟器：与 ir.eval_term 完全独立的第二个参考实现

每个值是 LSB 在前的比特列表。加法用行波进位，乘法用移位-累加阵列，
移位用桶形移位器（每个选择位一级 2:1 mux），比较用减法器的借位 / 零检测。
只用于测试：对每个算子在小位宽下与 eval_term 逐点比对。
"""

from typing import Dict, List

from engine.ir import Arg, Const, Node, Signage, Term, Var

Bits = List[int]


# ---------------------------------------------------------------------------
# 基础门
# ---------------------------------------------------------------------------

def to_bits(value: int, width: int) -> Bits:
    return [(value >> i) & 1 for i in range(width)]


def from_bits(bits: Bits) -> int:
    out = 0
    for i, b in enumerate(bits):
        out |= (b & 1) << i
    return out


def extend(bits: Bits, width: int, signed: bool) -> Bits:
    """截断或按符号 / 零扩展到 width 位"""
    if len(bits) >= width:
        return bits[:width]
    fill = bits[-1] if (signed and bits) else 0
    return bits + [fill] * (width - len(bits))


def full_adder(a: int, b: int, cin: int):
    s = a ^ b ^ cin
    cout = (a & b) | (cin & (a ^ b))
    return s, cout


def ripple_add(a: Bits, b: Bits, cin: int = 0) -> Bits:
    out = []
    c = cin
    for x, y in zip(a, b):
        s, c = full_adder(x, y, c)
        out.append(s)
    return out


def invert(a: Bits) -> Bits:
    return [1 - x for x in a]


def negate(a: Bits) -> Bits:
    return ripple_add(invert(a), [0] * len(a), 1)


def subtract(a: Bits, b: Bits) -> Bits:
    return ripple_add(a, invert(b), 1)


def array_multiply(a: Bits, b: Bits) -> Bits:
    """移位-累加乘法（模 2^len(a)）"""
    width = len(a)
    acc = [0] * width
    for i, bi in enumerate(b[:width]):
        if bi:
            row = ([0] * i + a)[:width]
            acc = ripple_add(acc, row)
    return acc


def barrel_shift(a: Bits, amount: Bits, left: bool) -> Bits:
    """每个移位选择位一级 mux；超出宽度的移位量得到全 0"""
    width = len(a)
    cur = list(a)
    for k, sel in enumerate(amount):
        step = 1 << k
        if step >= width:
            shifted = [0] * width
        elif left:
            shifted = [0] * step + cur[:width - step]
        else:
            shifted = cur[step:] + [0] * step
        cur = [s if sel else c for s, c in zip(shifted, cur)]
    return cur


def is_zero(a: Bits) -> int:
    acc = 0
    for x in a:
        acc |= x
    return 1 - acc


def less_than(a: Bits, b: Bits, signed: bool) -> int:
    """扩展一位后做减法，取结果符号位"""
    n = len(a) + 1
    diff = subtract(extend(a, n, signed), extend(b, n, signed))
    return diff[-1]


# ---------------------------------------------------------------------------
# 模拟
# ---------------------------------------------------------------------------

def _operand(arg: Arg, env: Dict[str, int], memo) -> Bits:
    raw = _sim(arg.term, env, memo)
    return extend(raw, int(arg.width), False)


def _sim(t: Term, env: Dict[str, int], memo) -> Bits:
    key = id(t)
    if key in memo:
        return memo[key]
    if isinstance(t, Var):
        v = env[t.name]
        out = to_bits(v, max(1, v.bit_length()))
    elif isinstance(t, Const):
        out = to_bits(t.value, max(1, t.value.bit_length()))
    else:
        out = _sim_node(t, env, memo)
    memo[key] = out
    return out


def _sim_node(n: Node, env: Dict[str, int], memo) -> Bits:
    W = int(n.width)
    ops = [_operand(a, env, memo) for a in n.args]
    sg = [a.signage == Signage.SIGN for a in n.args]

    def at(i: int, width: int) -> Bits:
        return extend(ops[i], width, sg[i])

    op = n.op
    if op in ("+", "SUM"):
        acc = at(0, W)
        for i in range(1, len(ops)):
            acc = ripple_add(acc, at(i, W))
        return acc
    if op == "-":
        if len(ops) == 1:
            return negate(at(0, W))
        return subtract(at(0, W), at(1, W))
    if op == "*":
        return array_multiply(at(0, W), at(1, W))
    if op == "FMA":
        return ripple_add(array_multiply(at(0, W), at(1, W)), at(2, W))
    if op == "MUXAR":
        b = ops[0]
        acc = [0] * W
        for i, bit in enumerate(b):
            row = at(1, W) if bit else at(2, W)
            acc = ripple_add(acc, barrel_shift(row, to_bits(i, max(1, i.bit_length())), True))
        return acc
    if op == "~":
        return invert(at(0, W))
    if op in ("&", "|", "^", "~^"):
        a, b = at(0, W), at(1, W)
        if op == "&":
            return [x & y for x, y in zip(a, b)]
        if op == "|":
            return [x | y for x, y in zip(a, b)]
        r = [x ^ y for x, y in zip(a, b)]
        return invert(r) if op == "~^" else r
    if op.startswith("r"):
        bits = ops[0]
        if "&" in op:
            r = 1
            for x in bits:
                r &= x
        elif "|" in op:
            r = 0
            for x in bits:
                r |= x
        else:
            r = 0
            for x in bits:
                r ^= x
        if "~" in op:
            r = 1 - r
        return extend([r], W, False)
    if op == "<<":
        return barrel_shift(at(0, W), ops[1], True)
    if op == ">>":
        wm = max(W, len(ops[0]))
        return extend(barrel_shift(at(0, wm), ops[1], False), W, False)
    if op == "?":
        sel = 1 - is_zero(ops[0])
        return at(1, W) if sel else at(2, W)
    if op == "concat":
        bits: Bits = []
        for o in reversed(ops):
            bits = bits + o
        return extend(bits, W, False)
    if op == "repl":
        return extend(ops[0] * n.params[0], W, False)
    if op == "slice":
        hi, lo = n.params
        return extend(at(0, hi + 1)[lo:hi + 1], W, False)
    if op in ("==", "!=", "<", "<=", ">", ">="):
        width = max(len(ops[0]), len(ops[1]))
        a, b = at(0, width), at(1, width)
        signed = sg[0] or sg[1]
        if sg[0] != sg[1]:
            # 混合符号：都扩展一位后按有符号比较，数值意义与整数比较一致
            width += 1
            a, b = at(0, width), at(1, width)
            signed = True
        eq = is_zero([x ^ y for x, y in zip(a, b)])
        lt = less_than(a, b, signed)
        r = {
            "==": eq, "!=": 1 - eq,
            "<": lt, ">=": 1 - lt,
            "<=": lt | eq, ">": 1 - (lt | eq),
        }[op]
        return extend([r], W, False)
    if op == "!":
        return extend([is_zero(ops[0])], W, False)
    if op in ("&&", "||"):
        x, y = 1 - is_zero(ops[0]), 1 - is_zero(ops[1])
        return extend([x & y if op == "&&" else x | y], W, False)
    raise ValueError(f"bit-level simulator has no model for {op}")


def simulate(t: Term, env: Dict[str, int]) -> int:
    """门级模拟一个具体项，返回输出的无符号值"""
    bits = _sim(t, env, {})
    if isinstance(t, Node):
        bits = extend(bits, int(t.width), False)
    return from_bits(bits)
