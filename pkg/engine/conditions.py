"""
重写条件：位宽 / 符号特征上的积之和（SOP）公式，以及条件库的读写

文本格式（条件库里保存的就是这个）：
    积之间用 " | " 连接，积内文字用 " & " 连接，取反写 "!"；常量写 True / False。
    原子：s1            s1 == unsign
          w1==w2 / w1<w2 / w1+1<w2 / w1-1<w2 / w1+w2<w3 / w1+2^w2<w3

    例：!w2<w3 | s1 & s2 & w1<w2
"""

import json
import logging
import re
from dataclasses import dataclass
from itertools import permutations
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from engine.errors import IncompleteMap
from engine.ir import Signage

logger = logging.getLogger(__name__)

DEFAULT_STORE_PATH = Path(__file__).resolve().parent.parent / "models" / "conditions.json"

Literal = Tuple[str, bool]   # (原子文本, 是否为正文字)
Product = Tuple[Literal, ...]

_ATOM_RE = re.compile(r"^(?P<lhs>[^<=]+?)\s*(?P<op>==|<)\s*(?P<rhs>[A-Za-z_]\w*)$")
_SIGN_VAR_RE = re.compile(r"^s\d+$")
_TERM_RE = re.compile(r"[+-]?[^+-]+")


# ---------------------------------------------------------------------------
# 位宽表达式
# ---------------------------------------------------------------------------

def eval_expr(text: str, m: Mapping[str, Any]) -> int:
    """
    计算位宽表达式：由 + / - 连接的整数、变量、2^变量

    Raises:
        IncompleteMap: 表达式引用了未绑定的变量
    """
    total = 0
    for raw in _TERM_RE.findall(text.replace(" ", "")):
        sign = -1 if raw.startswith("-") else 1
        tok = raw.lstrip("+-")
        if tok.isdigit():
            val = int(tok)
        elif tok.startswith("2^"):
            val = 1 << _lookup(tok[2:], m)
        else:
            val = _lookup(tok, m)
        total += sign * val
    return total


def _lookup(name: str, m: Mapping[str, Any]) -> int:
    v = m.get(name)
    if v is None:
        raise IncompleteMap(f"width variable '{name}' is unbound")
    return int(v)


def eval_atom(atom: str, m: Mapping[str, Any]) -> bool:
    if _SIGN_VAR_RE.match(atom):
        v = m.get(atom)
        if v is None:
            raise IncompleteMap(f"signage variable '{atom}' is unbound")
        return Signage(v) == Signage.UNSIGN
    match = _ATOM_RE.match(atom)
    if match is None:
        raise ValueError(f"malformed condition atom {atom!r}")
    lhs = eval_expr(match.group("lhs"), m)
    rhs = _lookup(match.group("rhs"), m)
    return lhs == rhs if match.group("op") == "==" else lhs < rhs


def atom_variables(atom: str) -> List[str]:
    return re.findall(r"[A-Za-z_]\w*", atom)


# ---------------------------------------------------------------------------
# Condition
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Condition:
    """SOP 公式；products 为空表示 False，含空积表示 True"""

    products: Tuple[Product, ...]

    @property
    def is_true(self) -> bool:
        return any(len(p) == 0 for p in self.products)

    @property
    def is_false(self) -> bool:
        return not self.products

    def evaluate(self, m: Mapping[str, Any]) -> bool:
        for product in self.products:
            if all(eval_atom(atom, m) == positive for atom, positive in product):
                return True
        return False

    __call__ = evaluate

    def variables(self) -> List[str]:
        names = {v for p in self.products for atom, _ in p for v in atom_variables(atom)}
        return sorted(names)

    def __str__(self) -> str:
        if self.is_true:
            return "True"
        if self.is_false:
            return "False"
        return " | ".join(
            " & ".join(atom if positive else f"!{atom}" for atom, positive in p)
            for p in self.products
        )


TRUE = Condition(((),))
FALSE = Condition(())


def parse_condition(text: str) -> Condition:
    """
    解析 SOP 文本

    Raises:
        ValueError: 原子格式不正确
    """
    text = text.strip()
    if text in ("True", "true", ""):
        return TRUE
    if text in ("False", "false"):
        return FALSE
    products = []
    for raw in text.split("|"):
        lits = []
        for lit in raw.split("&"):
            lit = lit.strip()
            positive = not lit.startswith("!")
            atom = lit.lstrip("!").strip().replace(" ", "")
            if not _SIGN_VAR_RE.match(atom) and not _ATOM_RE.match(atom):
                raise ValueError(f"malformed condition atom {atom!r}")
            lits.append((atom, positive))
        products.append(tuple(lits))
    return Condition(tuple(products))


# ---------------------------------------------------------------------------
# 特征
# ---------------------------------------------------------------------------

def feature_atoms(width_vars: Sequence[str], sign_vars: Sequence[str]) -> List[str]:
    """
    决策树使用的特征原子，顺序固定（也决定了信息增益并列时的选择）

    顺序：s_i；w_i==w_j (i<j)；w_i<w_j；w_i+1<w_j；w_i-1<w_j；
          w_i+w_j<w_k (i<j，k 与二者不同)；w_i+2^w_j<w_k (i≠j，k 与二者不同)
    """
    ws = list(width_vars)
    out: List[str] = list(sign_vars)
    out += [f"{a}=={b}" for i, a in enumerate(ws) for b in ws[i + 1:]]
    out += [f"{a}<{b}" for a, b in permutations(ws, 2)]
    out += [f"{a}+1<{b}" for a, b in permutations(ws, 2)]
    out += [f"{a}-1<{b}" for a, b in permutations(ws, 2)]
    out += [f"{a}+{b}<{k}" for i, a in enumerate(ws) for b in ws[i + 1:] for k in ws if k not in (a, b)]
    out += [f"{a}+2^{b}<{k}" for a, b in permutations(ws, 2) for k in ws if k not in (a, b)]
    return out


def feature_vector(atoms: Sequence[str], m: Mapping[str, Any]) -> List[bool]:
    return [eval_atom(a, m) for a in atoms]


# ---------------------------------------------------------------------------
# 条件库
# ---------------------------------------------------------------------------

class ConditionStore:
    """
    规则名 → 条件记录的 JSON 文件

    记录字段：condition（SOP 文本）、source（derived / synthesized）、lhs、rhs，
    合成记录另有 maps / depth。
    """

    def __init__(self, records: Optional[Dict[str, Dict[str, Any]]] = None,
                 path: Optional[Path] = None):
        self.records: Dict[str, Dict[str, Any]] = dict(records or {})
        self.path = path

    @classmethod
    def load(cls, path: Optional[Path] = None) -> "ConditionStore":
        path = Path(path) if path is not None else DEFAULT_STORE_PATH
        if not path.exists():
            logger.warning("condition store %s not found, using catalog defaults", path)
            return cls(path=path)
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
        records = data.get("rules", data)
        logger.info("loaded %s condition records from %s", len(records), path)
        return cls(records, path)

    def save(self, path: Optional[Path] = None) -> None:
        path = Path(path or self.path or DEFAULT_STORE_PATH)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as f:
            json.dump({"rules": self.records}, f, indent=2, sort_keys=True, ensure_ascii=False)
            f.write("\n")

    def condition(self, name: str, default: Optional[Condition] = None) -> Optional[Condition]:
        rec = self.records.get(name)
        if rec is None:
            return default
        return parse_condition(rec["condition"])

    def put(self, name: str, condition: Condition, source: str, **extra: Any) -> None:
        rec = {"condition": str(condition), "source": source}
        rec.update(extra)
        self.records[name] = rec

    def names(self) -> Iterable[str]:
        return sorted(self.records)

    def __contains__(self, name: str) -> bool:
        return name in self.records

    def __len__(self) -> int:
        return len(self.records)
