"""
E-graph：哈希共享的 e-node、并查集 e-class、e-matching、等式饱和与证明森林

每个 e-node 的键是 (op, 输出位宽, 参数, ((位宽, 符号, 子 e-class), …))，
叶子是 ("$var", 名字) / ("$const", 值)。类型标注是键的一部分，所以同一个算子在
不同位宽 / 符号下是不同的 e-node。

重写只增不删：左侧保留，右侧加入并与左侧合并。每次合并都在证明森林里留下一条边
（规则 / 同余 / 常量折叠），explain 沿森林路径把等价关系展开成逐步重写的项序列。
"""

import json
import logging
import time
from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Iterator, List, Optional, Protocol, Set, Tuple

from engine.errors import AnalysisConflict, DatapathError, IncompleteMap, NotEquivalentInEGraph
from engine.ir import OPERATORS, Arg, Const, Node, Signage, Term, Var, eval_term, residue

logger = logging.getLogger(__name__)

Key = Tuple[Any, ...]
# 展开树：(e-node id, (子展开树, …))，表示 e-graph 里的一个具体项
ETree = Tuple[int, Tuple["ETree", ...]]
MapBinding = Dict[str, Any]

VAR = "$var"
CONST = "$const"
CONGRUENCE = "congruence"
CONST_FOLD = "const-fold"
WILDCARD = "_"
MAX_EXPLAIN_DEPTH = 400


class RewriteLike(Protocol):
    name: str
    lhs: Term

    def condition_holds(self, m: MapBinding) -> bool: ...

    def instantiate(self, egraph: "EGraph", m: MapBinding) -> Optional[Term]: ...


# ---------------------------------------------------------------------------
# 并查集
# ---------------------------------------------------------------------------

class UnionFind:
    """按 id 合并：较小 id 做根，保证 e-class id 的确定性"""

    def __init__(self):
        self.parent: List[int] = []

    def make_set(self) -> int:
        self.parent.append(len(self.parent))
        return len(self.parent) - 1

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: int, b: int) -> int:
        a, b = self.find(a), self.find(b)
        if a == b:
            return a
        if b < a:
            a, b = b, a
        self.parent[b] = a
        return a


@dataclass
class EClassData:
    id: int
    nodes: List[int] = field(default_factory=list)
    parents: List[int] = field(default_factory=list)
    const: Optional[int] = None
    names: Set[str] = field(default_factory=set)
    width: Optional[int] = None


@dataclass
class ProvenanceEntry:
    merged_from: int
    merged_into: int
    rule: str
    binding: MapBinding


@dataclass
class ExplainStep:
    term: Term
    rule: Optional[str] = None
    path: Tuple[int, ...] = ()
    binding: MapBinding = field(default_factory=dict)


@dataclass
class RunReport:
    stop_reason: str = "saturated"
    iterations: List[Dict[str, int]] = field(default_factory=list)
    applied: Counter = field(default_factory=Counter)
    elapsed: float = 0.0

    @property
    def nodes(self) -> int:
        return self.iterations[-1]["nodes"] if self.iterations else 0

    @property
    def classes(self) -> int:
        return self.iterations[-1]["classes"] if self.iterations else 0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "stop_reason": self.stop_reason,
            "iterations": self.iterations,
            "applied": dict(self.applied),
            "elapsed": round(self.elapsed, 3),
        }


class EGraph:
    def __init__(self, var_widths: Optional[Dict[str, int]] = None):
        self.uf = UnionFind()
        self.keys: List[Key] = []            # e-node id → 创建时的键
        self.orig_children: List[Tuple[int, ...]] = []
        self.enode_class: List[int] = []
        self.classes: Dict[int, EClassData] = {}
        self.hashcons: Dict[Key, int] = {}
        self.op_classes: Dict[str, Set[int]] = {}
        self.worklist: List[int] = []
        self.provenance: List[ProvenanceEntry] = []
        self.var_widths: Dict[str, int] = dict(var_widths or {})
        # 证明森林：e-node → [(邻居, 原因, 是否正向)]
        self._forest: Dict[int, List[Tuple[int, tuple, bool]]] = {}
        self._added_trees: Dict[int, ETree] = {}
        self._default_trees: Dict[int, ETree] = {}
        self._canon_cache: Dict[int, List[Tuple[int, Key]]] = {}
        self._const_leaf: Dict[int, int] = {}

    # ---------- 基本查询 ----------

    def find(self, cid: int) -> int:
        return self.uf.find(cid)

    def class_of(self, eid: int) -> int:
        return self.uf.find(self.enode_class[eid])

    @property
    def node_count(self) -> int:
        return len(self.keys)

    @property
    def class_count(self) -> int:
        return len(self.classes)

    def class_ids(self) -> List[int]:
        return sorted(self.classes)

    def canonical(self, key: Key) -> Key:
        if key[0] in (VAR, CONST):
            return key
        op, width, params, children = key
        return (op, width, params, tuple((w, s, self.uf.find(c)) for w, s, c in children))

    def nodes_of(self, cid: int) -> List[Tuple[int, Key]]:
        """e-class 中去重后的规范 e-node：[(e-node id, 规范键)]，按插入顺序"""
        cid = self.find(cid)
        cached = self._canon_cache.get(cid)
        if cached is not None:
            return cached
        seen: Set[Key] = set()
        out = []
        for eid in self.classes[cid].nodes:
            k = self.canonical(self.keys[eid])
            if k not in seen:
                seen.add(k)
                out.append((eid, k))
        self._canon_cache[cid] = out
        return out

    def data(self, cid: int) -> EClassData:
        return self.classes[self.find(cid)]

    def const_of(self, cid: int) -> Optional[int]:
        return self.data(cid).const

    def width_of(self, cid: int) -> Optional[int]:
        return self.data(cid).width

    def set_name(self, cid: int, name: str) -> None:
        self.data(cid).names.add(name)

    def equivalent(self, a: int, b: int) -> bool:
        return self.find(a) == self.find(b)

    # ---------- 插入 ----------

    def _add_key(self, key: Key, children: Tuple[int, ...] = ()) -> int:
        """插入一个键（子 e-class 已规范化），返回 e-node id；已存在时返回已有 e-node"""
        key = self.canonical(key)
        existing = self.hashcons.get(key)
        if existing is not None:
            return existing
        eid = len(self.keys)
        cid = self.uf.make_set()
        self.keys.append(key)
        self.orig_children.append(children)
        self.enode_class.append(cid)
        data = EClassData(id=cid, nodes=[eid])
        self.classes[cid] = data
        self.hashcons[key] = eid
        self._forest[eid] = []
        if key[0] == VAR:
            data.width = self.var_widths.get(key[1])
        elif key[0] == CONST:
            data.const = key[1]
            data.width = max(1, key[1].bit_length())
            self._const_leaf[cid] = eid
        else:
            self.op_classes.setdefault(key[0], set()).add(cid)
            data.width = key[1]
            for _, _, c in key[3]:
                self.classes[self.find(c)].parents.append(eid)
            folded = self._fold(key)
            if folded is not None:
                data.const = folded
                self._inject_const(cid, eid, folded)
        self._canon_cache.clear()
        return eid

    def _fold(self, key: Key) -> Optional[int]:
        op, width, params, children = key
        vals = []
        for w, s, c in children:
            v = self.classes[self.find(c)].const
            if v is None:
                return None
            vals.append(Arg(w, s, Const(v)))
        return eval_term(Node(op, width, tuple(vals), params), {})

    def _inject_const(self, cid: int, eid: int, value: int) -> None:
        """常量折叠：把 Const 叶子并入折叠出常数的 e-class"""
        leaf = self._add_key((CONST, value))
        if self.class_of(leaf) != self.find(cid):
            self._union(eid, leaf, (CONST_FOLD, eid), CONST_FOLD, {})

    def add_term(self, t: Term) -> int:
        """
        把具体项插入 e-graph

        Returns:
            项所在的 e-class id；相同子项共享 e-class
        """
        eid, tree = self._add_term(t, {})
        cid = self.class_of(eid)
        self._added_trees[cid] = tree
        return cid

    def _add_term(self, t: Term, memo: Dict[int, Tuple[int, ETree]]) -> Tuple[int, ETree]:
        hit = memo.get(id(t))
        if hit is not None:
            return hit
        if isinstance(t, Var):
            eid = self._add_key((VAR, t.name))
            out = (eid, (eid, ()))
        elif isinstance(t, Const):
            eid = self._add_key((CONST, t.value))
            out = (eid, (eid, ()))
        else:
            kids = [self._add_term(a.term, memo) for a in t.args]
            key = (t.op, t.width, t.params, tuple(
                (a.width, a.signage, self.class_of(k[0])) for a, k in zip(t.args, kids)))
            eid = self._add_key(key, tuple(k[0] for k in kids))
            out = (eid, (eid, tuple(k[1] for k in kids)))
        memo[id(t)] = out
        return out

    # ---------- 合并与重建 ----------

    def _union(self, a: int, b: int, reason: tuple, rule: str, binding: MapBinding) -> bool:
        ca, cb = self.class_of(a), self.class_of(b)
        if ca == cb:
            return False
        da, db = self.classes[ca], self.classes[cb]
        if da.const is not None and db.const is not None and da.const != db.const:
            raise AnalysisConflict(
                f"rule '{rule}' merged classes with constants {da.const} and {db.const}")
        self._forest[a].append((b, reason, True))
        self._forest[b].append((a, reason, False))
        root = self.uf.union(ca, cb)
        other = cb if root == ca else ca
        dr, do = self.classes[root], self.classes.pop(other)
        dr.nodes.extend(do.nodes)
        dr.parents.extend(do.parents)
        dr.names |= do.names
        if do.width is not None and (dr.width is None or do.width < dr.width):
            dr.width = do.width
        const_changed = dr.const is None and do.const is not None
        if const_changed:
            dr.const = do.const
        if other in self._const_leaf and root not in self._const_leaf:
            self._const_leaf[root] = self._const_leaf[other]
        self._const_leaf.pop(other, None)
        for op, cs in self.op_classes.items():
            if other in cs:
                cs.discard(other)
                cs.add(root)
        self.provenance.append(ProvenanceEntry(other, root, rule, binding))
        self.worklist.append(root)
        self._canon_cache.clear()
        return True

    def rebuild(self) -> int:
        """恢复同余闭包与哈希共享不变量，返回因同余产生的合并次数"""
        merges = 0
        while self.worklist:
            todo = sorted({self.find(c) for c in self.worklist})
            self.worklist = []
            for cid in todo:
                merges += self._repair(cid)
        return merges

    def _repair(self, cid: int) -> int:
        cid = self.find(cid)
        data = self.classes.get(cid)
        if data is None:
            return 0
        merges = 0
        for eid in list(data.parents):
            key = self.canonical(self.keys[eid])
            other = self.hashcons.get(key)
            if other is None:
                self.hashcons[key] = eid
            elif self.class_of(other) != self.class_of(eid):
                self._union(eid, other, (CONGRUENCE,), CONGRUENCE, {})
                merges += 1
            pc = self.class_of(eid)
            if self.classes[pc].const is None:
                folded = self._fold(key)
                if folded is not None:
                    self.classes[pc].const = folded
                    self._inject_const(pc, eid, folded)
                    self.worklist.append(pc)
        return merges

    # ---------- e-matching ----------

    def ematch(self, pattern: Term) -> List[MapBinding]:
        """
        在整个 e-graph 上匹配一个模式

        Returns:
            绑定列表；每个绑定含 "__root__"（匹配到的 e-class）与 "__enodes__"
            （模式中每个算子节点按先序匹配到的 e-node）
        """
        if not isinstance(pattern, Node):
            raise ValueError("pattern root must be an operator node")
        out: List[MapBinding] = []
        roots = set()
        for op in _pattern_ops(pattern.op):
            roots |= {self.find(c) for c in self.op_classes.get(op, ())}
        for cid in sorted(roots):
            for eid, key in self.nodes_of(cid):
                if key[0] in (VAR, CONST):
                    continue
                for m in self._match_node(pattern, key, {}, [eid]):
                    enodes = m.pop("__trail__")
                    m["__root__"] = cid
                    m["__enodes__"] = tuple(enodes)
                    out.append(m)
        return out

    def find_matches(self, rw: RewriteLike) -> List[MapBinding]:
        matcher = getattr(rw, "matcher", None)
        if matcher is not None:
            return matcher(self)
        return self.ematch(rw.lhs)

    def _match_node(self, p: Node, key: Key, m: MapBinding, trail: List[int]) -> Iterator[MapBinding]:
        op, width, params, children = key
        if p.op in OPERATORS:
            if p.op != op:
                return
        else:
            if op not in _pattern_ops(p.op):
                return
            bound = m.get(p.op)
            if bound is not None and bound != op:
                return
            if bound is None:
                m = dict(m)
                m[p.op] = op
        if len(p.args) != len(children) or tuple(p.params) != tuple(params):
            return
        m = _bind(m, p.width, width)
        if m is None:
            return
        yield from self._match_args(p.args, children, 0, m, trail)

    def _match_args(self, args, children, i, m, trail) -> Iterator[MapBinding]:
        if i == len(args):
            out = dict(m)
            out["__trail__"] = list(trail)
            yield out
            return
        a = args[i]
        w, s, c = children[i]
        m1 = _bind(m, a.width, w)
        if m1 is None:
            return
        m1 = _bind(m1, a.signage, s)
        if m1 is None:
            return
        if isinstance(a.term, Const):
            # 常数按被消费时的值匹配：4 位有符号下的 15 是 -1，不匹配模式常数 15
            v = self.classes[self.find(c)].const
            if v is not None and residue(v, w, s) == a.term.value:
                yield from self._match_args(args, children, i + 1, m1, trail)
            return
        for m2, extra in self._match_class(a.term, c, m1):
            yield from self._match_args(args, children, i + 1, m2, trail + extra)

    def _match_class(self, p: Term, cid: int, m: MapBinding) -> Iterator[Tuple[MapBinding, List[int]]]:
        cid = self.find(cid)
        if isinstance(p, Var):
            bound = m.get(p.name)
            if bound is None:
                m2 = dict(m)
                m2[p.name] = cid
                yield m2, []
            elif self.find(bound) == cid:
                yield m, []
            return
        for eid, key in self.nodes_of(cid):
            if key[0] in (VAR, CONST):
                continue
            for m2 in self._match_node(p, key, m, [eid]):
                yield m2, m2.pop("__trail__")

    # ---------- 重写 ----------

    def apply_rewrite(self, rw: RewriteLike, m: MapBinding) -> str:
        """
        对一个匹配应用条件重写

        Returns:
            "applied" / "skipped-condition" / "skipped-noop"

        Raises:
            IncompleteMap: 右侧引用了未绑定的变量
        """
        if not rw.condition_holds(m):
            return "skipped-condition"
        rhs = rw.instantiate(self, m)
        if rhs is None:
            return "skipped-condition"
        var_trees: Dict[str, ETree] = {}
        # 动态匹配器可以给每个匹配附带自己的左侧形状
        lhs_tree = self._lhs_tree(m.get("__pattern__", rw.lhs), m, var_trees)
        eid, rhs_tree = self._add_instance(rhs, m, var_trees)
        root_eid = lhs_tree[0]
        binding = {k: v for k, v in m.items() if not k.startswith("__")}
        changed = self._union(root_eid, eid, ("rule", rw.name, lhs_tree, rhs_tree, binding), rw.name, binding)
        return "applied" if changed else "skipped-noop"

    def _lhs_tree(self, p: Node, m: MapBinding, var_trees: Dict[str, ETree]) -> ETree:
        it = iter(m["__enodes__"])

        def build(pat: Node) -> ETree:
            eid = next(it)
            kids = []
            for i, a in enumerate(pat.args):
                if isinstance(a.term, Node):
                    kids.append(build(a.term))
                elif isinstance(a.term, Var):
                    tree = var_trees.get(a.term.name)
                    if tree is None:
                        tree = self.default_tree(self.orig_children[eid][i])
                        var_trees[a.term.name] = tree
                    kids.append(tree)
                else:
                    cid = self.canonical(self.keys[eid])[3][i][2]
                    kids.append((self._const_leaf[self.find(cid)], ()))
            return (eid, tuple(kids))

        return build(p)

    def _add_instance(self, t: Term, m: MapBinding, var_trees: Dict[str, ETree]) -> Tuple[int, ETree]:
        if isinstance(t, Var):
            tree = var_trees.get(t.name)
            if tree is None:
                cid = m.get(t.name)
                if cid is None:
                    raise IncompleteMap(f"right-hand side uses unbound variable '{t.name}'")
                tree = self.default_tree(self.classes[self.find(cid)].nodes[0])
                var_trees[t.name] = tree
            return tree[0], tree
        if isinstance(t, Const):
            eid = self._add_key((CONST, t.value))
            return eid, (eid, ())
        if t.op not in OPERATORS or not isinstance(t.width, int):
            raise IncompleteMap(f"right-hand side node {t.op} is not concrete")
        kids = [self._add_instance(a.term, m, var_trees) for a in t.args]
        ann = []
        for a, (k, _) in zip(t.args, kids):
            if not isinstance(a.width, int) or not isinstance(a.signage, Signage):
                raise IncompleteMap(f"right-hand side annotation {a.width}/{a.signage} is unbound")
            ann.append((a.width, a.signage, self.class_of(k)))
        eid = self._add_key((t.op, t.width, tuple(t.params), tuple(ann)), tuple(k for k, _ in kids))
        return eid, (eid, tuple(tr for _, tr in kids))

    def add_pattern_instance(self, t: Term, m: MapBinding) -> int:
        """builder 用：插入一个以 e-class 变量为叶子的项，返回 e-class id"""
        eid, _ = self._add_instance(t, m, {})
        return self.class_of(eid)

    # ---------- 饱和 ----------

    def run_saturation(
        self,
        rules: List[RewriteLike],
        max_iters: int = 30,
        max_nodes: int = 100_000,
        time_limit: float = 300.0,
        on_apply: Optional[Callable[[RewriteLike, MapBinding], None]] = None,
    ) -> RunReport:
        """
        等式饱和主循环：每轮先对冻结的 e-graph 做全部匹配，再顺序应用，最后重建

        Returns:
            RunReport；停止原因 saturated / iter_limit / node_limit / time_limit
        """
        report = RunReport()
        start = time.monotonic()
        self.rebuild()
        for it in range(max_iters):
            nodes_before, classes_before = self.node_count, self.class_count
            matches = [(rw, m) for rw in rules for m in self.find_matches(rw)]
            applied = skipped = 0
            stop = None
            for rw, m in matches:
                if self.node_count >= max_nodes:
                    stop = "node_limit"
                    break
                if time.monotonic() - start > time_limit:
                    stop = "time_limit"
                    break
                status = self.apply_rewrite(rw, m)
                if status == "applied":
                    applied += 1
                    report.applied[rw.name] += 1
                    if on_apply is not None:
                        on_apply(rw, m)
                else:
                    skipped += 1
            self.rebuild()
            report.iterations.append({
                "iteration": it + 1,
                "nodes": self.node_count,
                "classes": self.class_count,
                "applied": applied,
                "skipped": skipped,
            })
            logger.info("iteration %s: %s nodes, %s classes, %s rewrites applied",
                        it + 1, self.node_count, self.class_count, applied)
            if stop is not None:
                report.stop_reason = stop
                break
            if self.node_count == nodes_before and self.class_count == classes_before:
                report.stop_reason = "saturated"
                break
            if self.node_count >= max_nodes:
                report.stop_reason = "node_limit"
                break
        else:
            report.stop_reason = "iter_limit"
        report.elapsed = time.monotonic() - start
        return report

    # ---------- 展开树与项 ----------

    def default_tree(self, eid: int) -> ETree:
        tree = self._default_trees.get(eid)
        if tree is None:
            tree = (eid, tuple(self.default_tree(c) for c in self.orig_children[eid]))
            self._default_trees[eid] = tree
        return tree

    def tree_term(self, tree: ETree, memo: Optional[Dict[ETree, Term]] = None) -> Term:
        memo = {} if memo is None else memo
        hit = memo.get(tree)
        if hit is not None:
            return hit
        eid, kids = tree
        key = self.keys[eid]
        if key[0] == VAR:
            t: Term = Var(key[1])
        elif key[0] == CONST:
            t = Const(key[1])
        else:
            op, width, params, children = key
            t = Node(op, width, tuple(
                Arg(w, s, self.tree_term(k, memo)) for (w, s, _), k in zip(children, kids)), params)
        memo[tree] = t
        return t

    def tree_of_term(self, t: Term) -> ETree:
        """在 e-graph 中定位一个具体项（每个子项都必须已被表示）"""
        if isinstance(t, Var):
            key: Key = (VAR, t.name)
            kids: Tuple[ETree, ...] = ()
        elif isinstance(t, Const):
            key, kids = (CONST, t.value), ()
        else:
            kids = tuple(self.tree_of_term(a.term) for a in t.args)
            key = (t.op, t.width, t.params, tuple(
                (a.width, a.signage, self.class_of(k[0])) for a, k in zip(t.args, kids)))
        eid = self.hashcons.get(self.canonical(key))
        if eid is None:
            raise NotEquivalentInEGraph(f"term is not represented in the e-graph: {key[0]}")
        return (eid, kids)

    def lookup_term(self, t: Term) -> Optional[int]:
        try:
            return self.class_of(self.tree_of_term(t)[0])
        except NotEquivalentInEGraph:
            return None

    # ---------- 解释 ----------

    def explain(self, root_before: int, term_after: Term, term_before: Optional[Term] = None
                ) -> List[Tuple[Term, Optional[str]]]:
        """
        把 e-class 里的等价关系展开成逐步重写序列

        Args:
            root_before: 原始项的 e-class id（add_term 的返回值）
            term_after: 同一 e-class 中的目标项
            term_before: 原始项；缺省时使用 add_term 时记录的项

        Returns:
            [(项, 规则名)]，首项规则名为 None；相邻两项只在一个位置上差一次重写

        Raises:
            NotEquivalentInEGraph: 目标项不在 root_before 所在的 e-class
        """
        return [(s.term, s.rule) for s in self.explain_detailed(root_before, term_after, term_before)]

    def explain_detailed(self, root_before: int, term_after: Term,
                         term_before: Optional[Term] = None) -> List[ExplainStep]:
        """同 explain，每步另带重写位置和规则绑定（常量折叠步的绑定为空）"""
        if term_before is not None:
            start = self.tree_of_term(term_before)
        else:
            start = self._added_trees.get(root_before)
            if start is None:
                raise NotEquivalentInEGraph(f"no recorded term for e-class {root_before}")
        target = self.tree_of_term(term_after)
        if self.class_of(target[0]) != self.find(root_before):
            raise NotEquivalentInEGraph("target term lies in a different e-class")
        steps = _Explainer(self).between(start, target, 0)
        memo: Dict[ETree, Term] = {}
        out = [ExplainStep(self.tree_term(start, memo))]
        for tree, name, path, binding in steps:
            out.append(ExplainStep(self.tree_term(tree, memo), name, path, dict(binding)))
        return out

    def explain_paths(self, root_before: int, term_after: Term) -> List[Tuple[int, ...]]:
        """每一步重写发生的位置（子项下标路径），与 explain 的步一一对应"""
        start = self._added_trees[root_before]
        target = self.tree_of_term(term_after)
        return [p for _, _, p, _ in _Explainer(self).between(start, target, 0)]

    def forest_path(self, a: int, b: int) -> List[Tuple[int, tuple, bool]]:
        """证明森林中 e-node a 到 b 的唯一路径：[(下一个 e-node, 原因, 是否正向)]"""
        if a == b:
            return []
        prev: Dict[int, Tuple[int, tuple, bool]] = {a: (-1, (), True)}
        queue = deque([a])
        while queue:
            u = queue.popleft()
            if u == b:
                break
            for v, reason, fwd in self._forest[u]:
                if v not in prev:
                    prev[v] = (u, reason, fwd)
                    queue.append(v)
        if b not in prev:
            raise NotEquivalentInEGraph(f"e-nodes {a} and {b} are not connected")
        path = []
        cur = b
        while cur != a:
            u, reason, fwd = prev[cur]
            path.append((cur, reason, fwd))
            cur = u
        path.reverse()
        return path

    # ---------- 导出 ----------

    def to_json(self) -> Dict[str, Any]:
        classes = []
        for cid in self.class_ids():
            d = self.classes[cid]
            nodes = []
            for eid, key in self.nodes_of(cid):
                if key[0] == VAR:
                    nodes.append({"id": eid, "var": key[1]})
                elif key[0] == CONST:
                    nodes.append({"id": eid, "const": key[1]})
                else:
                    nodes.append({
                        "id": eid,
                        "op": key[0],
                        "width": key[1],
                        "params": list(key[2]),
                        "children": [[w, str(s), c] for w, s, c in key[3]],
                    })
            classes.append({
                "id": cid,
                "const": d.const,
                "names": sorted(d.names),
                "width": d.width,
                "nodes": nodes,
            })
        return {"nodes": self.node_count, "classes": classes}

    def dump_json(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_json(), f, indent=2)

    def to_dot(self) -> str:
        lines = ["digraph egraph {", "  compound=true;", "  node [shape=box];"]
        for cid in self.class_ids():
            lines.append(f"  subgraph cluster_{cid} {{")
            lines.append(f'    label="c{cid}"; style=dashed;')
            for eid, key in self.nodes_of(cid):
                if key[0] in (VAR, CONST):
                    label = str(key[1])
                else:
                    label = f"{key[0]} {key[1]}" + (f" {list(key[2])}" if key[2] else "")
                lines.append(f'    n{eid} [label="{label}"];')
            lines.append("  }")
        for cid in self.class_ids():
            for eid, key in self.nodes_of(cid):
                if key[0] in (VAR, CONST):
                    continue
                for i, (w, s, c) in enumerate(key[3]):
                    target = self.nodes_of(c)[0][0]
                    lines.append(f'  n{eid} -> n{target} [lhead=cluster_{c}, label="{i}:{w}{str(s)[0]}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# 解释器
# ---------------------------------------------------------------------------

# (展开树, 规则名, 子项路径, 规则绑定)
Step = Tuple[ETree, str, Tuple[int, ...], MapBinding]


class _Explainer:
    def __init__(self, eg: EGraph):
        self.eg = eg
        self.memo: Dict[Tuple[ETree, ETree], List[Step]] = {}

    def between(self, a: ETree, b: ETree, depth: int) -> List[Step]:
        """把展开树 a 逐步改写成 b（两者在同一 e-class）"""
        if a == b:
            return []
        hit = self.memo.get((a, b))
        if hit is not None:
            return hit
        if depth > MAX_EXPLAIN_DEPTH:
            raise DatapathError("explanation recursion exceeded depth limit")
        if a[0] == b[0]:
            steps = self._children(a, b[1], depth)
        else:
            steps = []
            cur = a
            for nxt, reason, fwd in self.eg.forest_path(a[0], b[0]):
                kind = reason[0]
                if kind == "rule":
                    _, name, lt, rt, binding = reason
                    src, dst = (lt, rt) if fwd else (rt, lt)
                    steps += self.between(cur, src, depth + 1)
                    steps.append((dst, name if fwd else f"{name} (rev)", (), binding))
                    cur = dst
                elif kind == CONGRUENCE:
                    cur = (nxt, cur[1])
                else:
                    dst = (nxt, ()) if fwd else self.eg.default_tree(nxt)
                    steps.append((dst, CONST_FOLD if fwd else f"{CONST_FOLD} (rev)", (), {}))
                    cur = dst
            steps += self.between(cur, b, depth + 1)
        self.memo[(a, b)] = steps
        return steps

    def _children(self, a: ETree, targets: Tuple[ETree, ...], depth: int) -> List[Step]:
        eid = a[0]
        kids = list(a[1])
        steps: List[Step] = []
        for i, tgt in enumerate(targets):
            for tree, name, path, binding in self.between(kids[i], tgt, depth + 1):
                kids[i] = tree
                steps.append(((eid, tuple(kids)), name, (i,) + path, binding))
            kids[i] = tgt
        return steps


# ---------------------------------------------------------------------------
# 绑定工具
# ---------------------------------------------------------------------------

def _pattern_ops(op: str) -> List[str]:
    if op in OPERATORS:
        return [op]
    return [o for o in op.split("|") if o in OPERATORS]


def _bind(m: MapBinding, pat, value) -> Optional[MapBinding]:
    """位宽 / 符号：字面量必须相等，变量则绑定或检查一致"""
    if isinstance(pat, (int, Signage)):
        return m if pat == value else None
    if pat == WILDCARD:
        return m
    bound = m.get(pat)
    if bound is None:
        m2 = dict(m)
        m2[pat] = value
        return m2
    return m if bound == value else None
