"""
证明证书：原设计 → 优化设计之间的逐步重写链，以及链上每一步的独立验证

证书是一串完整的 Verilog 模块 R0…Rn：R0 是输入源码本身，Rn 就是最终输出的 RTL，
相邻两个只差一次局部重写。每个模块都重新解析后再比较，所以代码生成本身也在被检查。

每一步的检查方式（按优先级）：
    exhaustive  输入总位数在预算内，直接穷举
    shrunk      把所有位宽按秩缩小到 shrink_width 以内后穷举；只在该步的规则条件
                在缩小后的绑定下仍成立、常数值不变、切片都从 0 位开始时才这样做
    unverified  以上都不适用（或缩小后的检查不可信），在原位宽下随机采样；没发现反例但不算证明
发现反例一律抛 StepFailed，调用方不得输出 RTL。
"""

import json
import logging
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Set, Tuple, Union

import numpy as np

from engine.codegen import assign_lines, render_design
from engine.conditions import ConditionStore
from engine.cost_model import CostModel
from engine.egraph import CONST_FOLD, EGraph
from engine.errors import BudgetExceeded, DatapathError, StepFailed
from engine.ir import (
    Arg, Const, Node, Signage, Term, eval_vector, equivalent_bounded, free_vars, residue,
)
from engine.rules import CATALOG, rule_by_name
from engine.verilog_parser import DesignModule, parse_verilog

logger = logging.getLogger(__name__)

MANIFEST = "manifest.json"
DEFAULT_SAMPLES = 4096
_WIDTH_KEY = re.compile(r"^w\d+$")
_SIGN_KEY = re.compile(r"^s\d+$")
# 端点比较借用的规则名：每一步都已穷举或缩小验证通过时才允许缩小位宽
CHAIN_ENDPOINT = "chain"
VERIFIED = ("exhaustive", "shrunk")
DYNAMIC_RULES = frozenset(e.name for e in CATALOG if e.rhs is None)


# ---------------------------------------------------------------------------
# 数据结构
# ---------------------------------------------------------------------------

@dataclass
class StepRecord:
    index: int
    rule: Optional[str] = None
    output: Optional[str] = None
    modified: List[str] = field(default_factory=list)
    binding: Dict[str, Any] = field(default_factory=dict)
    cost: Optional[int] = None
    verdict: Optional[str] = None
    # 动态规则（右侧由代码构造）这一步在宽位宽下只能采样
    dynamic: bool = False

    def to_dict(self) -> Dict[str, Any]:
        return {
            "index": self.index,
            "file": f"step_{self.index}.v",
            "rule": self.rule,
            "output": self.output,
            "modified": self.modified,
            "binding": self.binding,
            "cost": self.cost,
            "verdict": self.verdict,
            "dynamic": self.dynamic,
        }

    @classmethod
    def from_dict(cls, d: Dict[str, Any]) -> "StepRecord":
        return cls(
            index=d["index"],
            rule=d.get("rule"),
            output=d.get("output"),
            modified=list(d.get("modified", [])),
            binding=dict(d.get("binding", {})),
            cost=d.get("cost"),
            verdict=d.get("verdict"),
            dynamic=bool(d.get("dynamic", False)),
        )


@dataclass
class ProofCertificate:
    """
    Attributes:
        modules: R0…Rn 的 Verilog 文本
        steps: 与 modules 一一对应；steps[0] 是起点，没有规则
    """
    module_name: str
    modules: List[str] = field(default_factory=list)
    steps: List[StepRecord] = field(default_factory=list)
    endpoint_verdict: Optional[str] = None

    def __len__(self) -> int:
        return len(self.modules)

    @property
    def rules(self) -> List[str]:
        return [s.rule for s in self.steps[1:]]

    @property
    def cost_trajectory(self) -> List[Optional[int]]:
        return [s.cost for s in self.steps]

    @property
    def non_monotone(self) -> bool:
        """证书上的代价是否先升后降（先走一步变差的重写，之后才降下来）"""
        costs = [c for c in self.cost_trajectory if c is not None]
        peak = max(costs, default=0)
        return bool(costs) and peak > costs[0] and costs[-1] < peak

    @property
    def final(self) -> str:
        return self.modules[-1]

    def manifest(self) -> Dict[str, Any]:
        return {
            "module": self.module_name,
            "length": len(self.modules),
            "steps": [s.to_dict() for s in self.steps],
            "cost_trajectory": self.cost_trajectory,
            "endpoint_verdict": self.endpoint_verdict,
        }

    def write(self, directory: Union[str, Path]) -> Path:
        """写成 step_<i>.v + manifest.json"""
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        for i, text in enumerate(self.modules):
            (d / f"step_{i}.v").write_text(text, encoding="utf-8")
        with open(d / MANIFEST, "w", encoding="utf-8") as f:
            json.dump(self.manifest(), f, indent=2)
            f.write("\n")
        logger.info("wrote %s-module certificate to %s", len(self.modules), d)
        return d

    @classmethod
    def load(cls, directory: Union[str, Path]) -> "ProofCertificate":
        d = Path(directory)
        with open(d / MANIFEST, "r", encoding="utf-8") as f:
            manifest = json.load(f)
        steps = [StepRecord.from_dict(s) for s in manifest["steps"]]
        modules = [(d / f"step_{s.index}.v").read_text(encoding="utf-8") for s in steps]
        return cls(manifest["module"], modules, steps, manifest.get("endpoint_verdict"))


# ---------------------------------------------------------------------------
# 证书生成
# ---------------------------------------------------------------------------

def _plain_binding(m: Dict[str, Any]) -> Dict[str, Any]:
    """只留位宽 / 符号变量，其余是 e-class id，落盘没有意义"""
    out: Dict[str, Any] = {}
    for k, v in m.items():
        if _WIDTH_KEY.match(k) and isinstance(v, int):
            out[k] = v
        elif _SIGN_KEY.match(k):
            out[k] = str(v)
    return out


def _base_rule(rule: Optional[str]) -> Optional[str]:
    if rule is not None and rule.endswith(" (rev)"):
        return rule[:-len(" (rev)")]
    return rule


def _modified(before: str, after: str) -> List[str]:
    a, b = assign_lines(before), assign_lines(after)
    return sorted(n for n in set(a) | set(b) if a.get(n) != b.get(n))


def produce_proof(
    eg: EGraph,
    design: DesignModule,
    roots: Dict[str, int],
    final_terms: Dict[str, Term],
    preferred: Optional[Dict[Term, str]] = None,
    input_text: Optional[str] = None,
    cost_model: Optional[CostModel] = None,
) -> ProofCertificate:
    """
    把每个输出从原始项到最终项的解释展开成模块链

    输出依次处理：处理第 i 个输出时，前面的输出已是最终项，后面的还是原始项。

    Args:
        roots: 输出名 → 原始项所在的 e-class id
        final_terms: 输出名 → 提取出的项
        input_text: 原始源码；给出时作为 R0，否则用原始项生成
        cost_model: 每步记录的代价

    Returns:
        ProofCertificate；输入与输出相同且没给 input_text 时只有一个模块

    Raises:
        NotEquivalentInEGraph: 某个最终项不在对应输出的 e-class 中
    """
    cm = cost_model or CostModel()
    current = dict(design.output_terms())

    def emit(terms: Dict[str, Term]) -> str:
        return render_design(design, terms, preferred)

    r0 = input_text if input_text is not None else emit(current)
    cert = ProofCertificate(design.name, [r0], [StepRecord(0, cost=cm.dag_cost(*current.values()))])

    for o, _ in design.outputs:
        steps = eg.explain_detailed(roots[o], final_terms[o], current[o])
        for st in steps[1:]:
            current[o] = st.term
            text = emit(current)
            rec = StepRecord(
                index=len(cert.modules),
                rule=st.rule,
                output=o,
                modified=_modified(cert.modules[-1], text),
                binding=_plain_binding(st.binding),
                cost=cm.dag_cost(*current.values()),
                dynamic=_base_rule(st.rule) in DYNAMIC_RULES,
            )
            cert.modules.append(text)
            cert.steps.append(rec)

    final_text = emit(final_terms)
    if input_text is not None and cert.modules[-1] != final_text:
        # 没有重写步，或最后一步的命名与最终输出不同：补一个只改写法的步
        cert.steps.append(StepRecord(
            index=len(cert.modules),
            rule="regenerate",
            modified=_modified(cert.modules[-1], final_text),
            cost=cm.dag_cost(*final_terms.values()),
        ))
        cert.modules.append(final_text)
    logger.info("certificate for %s: %s modules, rules %s",
                design.name, len(cert.modules), sorted(set(r for r in cert.rules if r)))
    return cert


# ---------------------------------------------------------------------------
# 位宽缩小
# ---------------------------------------------------------------------------

def _collect_widths(t: Term, out: Set[int], slices_ok: List[bool]) -> None:
    if not isinstance(t, Node):
        return
    out.add(int(t.width))
    if t.op == "slice":
        hi, lo = t.params
        if lo != 0:
            slices_ok[0] = False
        out.add(hi + 1)
    for a in t.args:
        out.add(int(a.width))
        _collect_widths(a.term, out, slices_ok)


def shrink_map(widths: Set[int], cap: int) -> Dict[int, int]:
    """
    位宽映射：不同位宽不超过 cap 个时按秩映射（保持严格大小关系与相等），否则按比例压缩
    """
    ordered = sorted(widths)
    if len(ordered) <= cap:
        return {w: i + 1 for i, w in enumerate(ordered)}
    top = ordered[-1]
    return {w: max(1, math.ceil(w * cap / top)) for w in ordered}


def _shrink_term(t: Term, wmap: Dict[int, int], memo: Dict[Term, Term]) -> Optional[Term]:
    if not isinstance(t, Node):
        return t
    hit = memo.get(t)
    if hit is not None:
        return hit
    args = []
    for a in t.args:
        w2 = wmap[int(a.width)]
        if isinstance(a.term, Const):
            s = Signage(a.signage)
            if residue(a.term.value, w2, s) != residue(a.term.value, int(a.width), s):
                return None
            child: Optional[Term] = a.term
        else:
            child = _shrink_term(a.term, wmap, memo)
            if child is None:
                return None
        args.append(Arg(w2, a.signage, child))
    params = tuple(t.params)
    if t.op == "slice":
        params = (wmap[params[0] + 1] - 1, 0)
    out = Node(t.op, wmap[int(t.width)], tuple(args), params)
    memo[t] = out
    return out


def _rule_allows_shrink(rule: Optional[str], binding: Dict[str, Any], wmap: Dict[int, int],
                        store: Optional[ConditionStore]) -> bool:
    """没有规则撑腰的比较不缩小；动态规则与常数折叠同样不缩小"""
    if rule is None:
        return False
    if rule in ("regenerate", CHAIN_ENDPOINT):
        return True
    if rule.startswith(CONST_FOLD):
        return False
    if _base_rule(rule) in DYNAMIC_RULES:
        return False
    try:
        rw = rule_by_name(_base_rule(rule), store)
    except KeyError:
        return False
    if rw.is_dynamic:
        return False
    mapped: Dict[str, Any] = {}
    for k, v in binding.items():
        if _WIDTH_KEY.match(k):
            if v not in wmap:
                return False
            mapped[k] = wmap[v]
        elif _SIGN_KEY.match(k):
            mapped[k] = Signage(v)
    return rw.condition_holds(mapped)


# ---------------------------------------------------------------------------
# 比较两个模块
# ---------------------------------------------------------------------------

def _sample_env(widths: Dict[str, int], n: int, seed: int) -> Tuple[Dict[str, np.ndarray], Any]:
    rng = np.random.default_rng(seed)
    wide = max(widths.values(), default=1) > 62
    dtype = object if wide else np.int64
    env: Dict[str, np.ndarray] = {}
    for name in sorted(widths):
        w = widths[name]
        nbytes = (w + 7) // 8
        raw = [int.from_bytes(rng.bytes(nbytes), "little") & ((1 << w) - 1) for _ in range(n)]
        # 全 0 / 全 1 两个角点
        raw[0], raw[1] = 0, (1 << w) - 1
        env[name] = np.array(raw, dtype=dtype)
    return env, dtype


def _sample_check(t1: Term, t2: Term, widths: Dict[str, int], samples: int,
                  seed: int) -> Optional[Dict[str, int]]:
    if not widths:
        return None
    env, dtype = _sample_env(widths, samples, seed)
    r1 = eval_vector(t1, env, dtype)
    r2 = eval_vector(t2, env, dtype)
    diff = np.nonzero(r1 != r2)[0]
    if len(diff):
        i = int(diff[0])
        return {k: int(v[i]) for k, v in env.items()}
    return None


def _compare(a: DesignModule, b: DesignModule, index: int, rule: Optional[str],
             binding: Dict[str, Any], budget: int, shrink_width: int, samples: int,
             store: Optional[ConditionStore]) -> str:
    ta, tb = a.output_terms(), b.output_terms()
    if set(ta) != set(tb):
        raise StepFailed(index, None, "modules declare different outputs")
    in_widths = a.input_widths()
    verdicts = []
    for o in sorted(ta):
        t1, t2 = ta[o], tb[o]
        used = free_vars(t1) | free_vars(t2)
        widths = {n: in_widths.get(n, b.input_widths().get(n, 1)) for n in used}
        if sum(widths.values()) <= budget:
            ok, cex = equivalent_bounded(t1, t2, widths, budget)
            if not ok:
                raise StepFailed(index, cex, f"output {o} differs")
            verdicts.append("exhaustive")
            continue

        verdict = _try_shrunk(t1, t2, widths, rule, binding, budget, shrink_width, store)
        if verdict is None:
            cex = _sample_check(t1, t2, widths, samples, seed=index)
            if cex is not None:
                raise StepFailed(index, cex, f"output {o} differs at full width")
            verdict = "unverified"
        verdicts.append(verdict)
    for v in ("unverified", "shrunk"):
        if v in verdicts:
            return v
    return "exhaustive"


def _try_shrunk(t1: Term, t2: Term, widths: Dict[str, int], rule: Optional[str],
                binding: Dict[str, Any], budget: int, shrink_width: int,
                store: Optional[ConditionStore]) -> Optional[str]:
    """缩小后穷举通过返回 "shrunk"；不适用或缩小后出现差异返回 None（交给采样）"""
    cap = min(shrink_width, budget // max(1, len(widths)))
    if cap < 1:
        return None
    all_widths: Set[int] = set(widths.values())
    slices_ok = [True]
    _collect_widths(t1, all_widths, slices_ok)
    _collect_widths(t2, all_widths, slices_ok)
    all_widths |= {v for k, v in binding.items() if _WIDTH_KEY.match(k)}
    if not slices_ok[0]:
        return None
    wmap = shrink_map(all_widths, cap)
    if not _rule_allows_shrink(rule, binding, wmap, store):
        return None
    memo: Dict[Term, Term] = {}
    s1, s2 = _shrink_term(t1, wmap, memo), _shrink_term(t2, wmap, memo)
    if s1 is None or s2 is None:
        return None
    small = {n: wmap[w] for n, w in widths.items()}
    try:
        ok, cex = equivalent_bounded(s1, s2, small, budget)
    except BudgetExceeded:
        return None
    if not ok:
        logger.warning("shrunk check disagrees (%s), falling back to sampling", cex)
        return None
    return "shrunk"


@dataclass
class VerificationReport:
    """verify_chain 只在全部通过时返回；fully_verified 为假表示有步只做了采样"""
    verdicts: List[str] = field(default_factory=list)
    endpoint: Optional[str] = None

    @property
    def fully_verified(self) -> bool:
        return all(v in VERIFIED for v in self.verdicts + [self.endpoint])

    def to_dict(self) -> Dict[str, Any]:
        return {
            "fully_verified": self.fully_verified,
            "verdicts": self.verdicts,
            "endpoint": self.endpoint,
        }


def verify_chain(
    cert: ProofCertificate,
    budget: int = 24,
    shrink_width: int = 5,
    samples: int = DEFAULT_SAMPLES,
    store: Optional[ConditionStore] = None,
) -> VerificationReport:
    """
    逐对检查证书里相邻的模块，最后再直接比较 R0 与 Rn

    Args:
        budget: 穷举的输入总位数上限
        shrink_width: 缩小后的最大位宽

    Returns:
        VerificationReport；同时把各步结论写回 cert.steps[i].verdict

    Raises:
        StepFailed: 第 index 步（从 1 开始；端点检查用 len(cert)）找到反例
    """
    if not cert.modules:
        raise DatapathError("empty certificate")
    if store is None:
        store = ConditionStore.load()
    parsed = [parse_verilog(text) for text in cert.modules]
    report = VerificationReport()
    for i in range(1, len(parsed)):
        step = cert.steps[i]
        try:
            verdict = _compare(parsed[i - 1], parsed[i], i, step.rule, step.binding,
                               budget, shrink_width, samples, store)
        except StepFailed as exc:
            logger.error("step %s (%s) failed: %s", i, step.rule, exc.message)
            step.verdict = "failed"
            raise
        step.verdict = verdict
        report.verdicts.append(verdict)
        logger.debug("step %s (%s): %s", i, step.rule, verdict)
    cert.steps[0].verdict = "input"
    if len(parsed) > 1:
        # 有一步只做了采样时，端点也只能穷举或采样
        justified = CHAIN_ENDPOINT if all(v in VERIFIED for v in report.verdicts) else None
        try:
            report.endpoint = _compare(parsed[0], parsed[-1], len(parsed), justified, {},
                                       budget, shrink_width, samples, store)
        except StepFailed as exc:
            logger.error("endpoint check failed: %s", exc.message)
            raise
    else:
        report.endpoint = "exhaustive"
    cert.endpoint_verdict = report.endpoint
    logger.info("certificate verified: %s steps, endpoint %s", len(report.verdicts), report.endpoint)
    return report
