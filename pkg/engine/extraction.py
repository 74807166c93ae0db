"""
提取：从饱和后的 e-graph 里为每个需要的 e-class 选一个 e-node，得到无环的最低代价实现

    greedy_extract   自底向上不动点，每个 e-class 取 "自身代价 + 子类最优代价之和" 最小的节点，
                     不考虑共享（(a+b)×(a+b) 里的加法计两次）
    ilp_extract      0/1 整数规划，共享子项只计一次：
                         min Σ cost(n)·x_n
                         根类：Σ_{n∈r} x_n = 1
                         子类：x_n ≤ Σ_{m∈k} x_m           （k 为 n 的每个子类）
                         无环：t_{C(n)} − N·x_n − t_k ≥ 1 − N
                     无环约束只对检测到环的 e-class 按需加入；超时返回当前最好解（贪心解做初始上界）

ExtractionProblem 可以导出成 LP 文本交给外部求解器，解文件再用 import_solution 读回。
"""

import logging
import math
import re
import time
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Set, Tuple

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, linprog, milp
from scipy.sparse import coo_matrix

from engine.cost_model import CostModel
from engine.egraph import CONST, VAR, EGraph
from engine.errors import CyclicDag, Infeasible, Unextractable
from engine.ir import Arg, Const, Node, Term, Var

logger = logging.getLogger(__name__)

INF = math.inf
_EPS = 1e-6


# ---------------------------------------------------------------------------
# 数据结构
# ---------------------------------------------------------------------------

@dataclass
class ENodeRecord:
    eid: int
    cid: int
    cost: int
    # 子类（按出现顺序，可重复）；贪心按出现次数计代价
    child_list: Tuple[int, ...] = ()

    @property
    def children(self) -> Tuple[int, ...]:
        return tuple(dict.fromkeys(self.child_list))


@dataclass
class ExtractionProblem:
    nodes: List[ENodeRecord]
    classes: Dict[int, List[int]]        # e-class → nodes 中的下标
    roots: List[int]

    @property
    def ncount(self) -> int:
        return len(self.classes)

    @classmethod
    def from_egraph(cls, eg: EGraph, roots: Sequence[int],
                    cost_model: Optional[CostModel] = None) -> "ExtractionProblem":
        """
        收集从根可达的 e-class 与 e-node（自环节点直接丢弃）

        Raises:
            Infeasible: 没有根
        """
        if not roots:
            raise Infeasible("extraction problem has no root classes")
        cm = cost_model or CostModel()
        roots = list(dict.fromkeys(eg.find(r) for r in roots))
        nodes: List[ENodeRecord] = []
        classes: Dict[int, List[int]] = {}
        queue = list(roots)
        seen: Set[int] = set(roots)
        while queue:
            cid = queue.pop(0)
            idx: List[int] = []
            members = eg.nodes_of(cid)
            if eg.const_of(cid) is not None:
                # 常数类只保留常数叶子，代价与还原出的项一致
                members = [(e, k) for e, k in members if k[0] == CONST] or members
            for eid, key in members:
                if key[0] in (VAR, CONST):
                    rec = ENodeRecord(eid, cid, 0)
                else:
                    op, width, params, children = key
                    kids = tuple(eg.find(c) for _, _, c in children)
                    if cid in kids:
                        continue
                    operands = [(w, s, eg.const_of(c)) for w, s, c in children]
                    rec = ENodeRecord(eid, cid, cm.node_cost(op, width, operands, params), kids)
                    for k in kids:
                        if k not in seen:
                            seen.add(k)
                            queue.append(k)
                idx.append(len(nodes))
                nodes.append(rec)
            classes[cid] = idx
        return cls(nodes, classes, roots)


@dataclass
class ExtractionResult:
    """
    Attributes:
        choices: e-class → 选中的 e-node id（只含从根可达的类）
        cost: 报告代价；贪心为不计共享的树代价，ILP 为共享后的 DAG 代价
        dag_cost: 选中节点集合的代价和（共享只计一次）
        status: optimal / incumbent（超时）/ greedy / external（外部解）
    """
    choices: Dict[int, int]
    cost: float
    dag_cost: int
    status: str
    roots: List[int] = field(default_factory=list)
    solver: str = "greedy"
    elapsed: float = 0.0
    lp_solves: int = 0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "cost": self.cost,
            "dag_cost": self.dag_cost,
            "status": self.status,
            "solver": self.solver,
            "elapsed": round(self.elapsed, 3),
            "lp_solves": self.lp_solves,
            "roots": self.roots,
            "choices": {str(c): e for c, e in sorted(self.choices.items())},
        }


# ---------------------------------------------------------------------------
# 公共工具
# ---------------------------------------------------------------------------

def _node_index(problem: ExtractionProblem) -> Dict[int, ENodeRecord]:
    return {rec.eid: rec for rec in problem.nodes}


def _reachable_choices(problem: ExtractionProblem, pick: Dict[int, int]) -> Dict[int, int]:
    """从根出发，只保留被用到的类的选择"""
    by_eid = _node_index(problem)
    out: Dict[int, int] = {}
    stack = list(problem.roots)
    while stack:
        c = stack.pop()
        if c in out:
            continue
        if c not in pick:
            raise Unextractable(f"e-class {c} has no selected node")
        out[c] = pick[c]
        stack.extend(by_eid[pick[c]].children)
    return out


def _check_acyclic(problem: ExtractionProblem, choices: Dict[int, int]) -> None:
    by_eid = _node_index(problem)
    state: Dict[int, int] = {}

    def visit(c: int) -> None:
        st = state.get(c)
        if st == 2:
            return
        if st == 1:
            raise CyclicDag(f"selected nodes form a cycle through e-class {c}")
        state[c] = 1
        for k in by_eid[choices[c]].children:
            visit(k)
        state[c] = 2

    for r in problem.roots:
        visit(r)


def dag_cost(problem: ExtractionProblem, choices: Dict[int, int]) -> int:
    by_eid = _node_index(problem)
    return sum(by_eid[e].cost for e in choices.values())


def terms_from_choices(eg: EGraph, roots: Sequence[int], choices: Dict[int, int]) -> List[Term]:
    """
    把选择还原成具体项；同一个 e-class 对应同一个 Term 对象（DAG 共享）

    Raises:
        CyclicDag: 选择里有环
    """
    memo = dag_terms(eg, roots, choices)
    return [memo[eg.find(r)] for r in roots]


def dag_terms(eg: EGraph, roots: Sequence[int], choices: Dict[int, int]) -> Dict[int, Term]:
    """从根可达的每个 e-class → 还原出的项"""
    memo: Dict[int, Term] = {}
    active: Set[int] = set()

    def build(cid: int) -> Term:
        cid = eg.find(cid)
        hit = memo.get(cid)
        if hit is not None:
            return hit
        if cid in active:
            raise CyclicDag(f"selected nodes form a cycle through e-class {cid}")
        active.add(cid)
        key = eg.canonical(eg.keys[choices[cid]])
        if key[0] == VAR:
            t: Term = Var(key[1])
        elif key[0] == CONST:
            t = Const(key[1])
        else:
            op, width, params, children = key
            t = Node(op, width, tuple(Arg(w, s, build(c)) for w, s, c in children), params)
        active.discard(cid)
        memo[cid] = t
        return t

    for r in roots:
        build(r)
    return memo


# ---------------------------------------------------------------------------
# 贪心
# ---------------------------------------------------------------------------

def greedy_extract(eg: EGraph, roots: Sequence[int], cost_model: Optional[CostModel] = None,
                   problem: Optional[ExtractionProblem] = None) -> ExtractionResult:
    """
    自底向上的贪心提取

    Returns:
        ExtractionResult，cost 为各根的树代价之和（不计共享）

    Raises:
        Unextractable: 某个根类没有有限代价的无环实现
    """
    start = time.monotonic()
    problem = problem or ExtractionProblem.from_egraph(eg, roots, cost_model)
    best: Dict[int, float] = {c: INF for c in problem.classes}
    pick: Dict[int, int] = {}
    changed = True
    while changed:
        changed = False
        for rec in problem.nodes:
            total = rec.cost + sum(best[k] for k in rec.child_list)
            if total < best[rec.cid]:
                best[rec.cid] = total
                pick[rec.cid] = rec.eid
                changed = True
    for r in problem.roots:
        if best[r] == INF:
            raise Unextractable(f"root e-class {r} has no finite-cost acyclic implementation")
    choices = _reachable_choices(problem, pick)
    _check_acyclic(problem, choices)
    tree = sum(best[r] for r in problem.roots)
    result = ExtractionResult(
        choices=choices,
        cost=int(tree),
        dag_cost=dag_cost(problem, choices),
        status="greedy",
        roots=list(problem.roots),
        solver="greedy",
        elapsed=time.monotonic() - start,
    )
    logger.info("greedy extraction: tree cost %s, dag cost %s", result.cost, result.dag_cost)
    return result


# ---------------------------------------------------------------------------
# ILP 模型
# ---------------------------------------------------------------------------

class _IlpModel:
    """
    x_n 为 0/1 变量，t_c 只为出现在环里的 e-class 建立

    变量向量 = [x_0 … x_{n-1}, t_…]；约束行按 (列下标, 系数) 记录，求解时组装成稀疏矩阵。
    """

    def __init__(self, problem: ExtractionProblem):
        self.p = problem
        self.n = len(problem.nodes)
        self.N = problem.ncount
        self.t_index: Dict[int, int] = {}
        self.ub_rows: List[Tuple[List[Tuple[int, float]], float]] = []
        self.eq_rows: List[Tuple[List[Tuple[int, float]], float]] = []
        self.cycle_classes: Set[int] = set()
        for r in problem.roots:
            self.eq_rows.append(([(i, 1.0) for i in problem.classes[r]], 1.0))
        for i, rec in enumerate(problem.nodes):
            for k in rec.children:
                row = [(i, 1.0)] + [(j, -1.0) for j in problem.classes[k]]
                self.ub_rows.append((row, 0.0))
        self.c = np.array([rec.cost for rec in problem.nodes], dtype=float)

    @property
    def size(self) -> int:
        return self.n + len(self.t_index)

    def _t(self, cid: int) -> int:
        col = self.t_index.get(cid)
        if col is None:
            col = self.n + len(self.t_index)
            self.t_index[cid] = col
        return col

    def add_cycle_rows(self, scc: Set[int]) -> int:
        """对环上的类加入 t_{C(n)} − N·x_n − t_k ≥ 1 − N；返回新增行数"""
        new = scc - self.cycle_classes
        if not new:
            return 0
        self.cycle_classes |= new
        added = 0
        for i, rec in enumerate(self.p.nodes):
            if rec.cid not in self.cycle_classes:
                continue
            for k in rec.children:
                if k not in self.cycle_classes:
                    continue
                if rec.cid not in new and k not in new:
                    continue
                # −t_c + N·x_n + t_k ≤ N − 1
                row = [(self._t(rec.cid), -1.0), (i, float(self.N)), (self._t(k), 1.0)]
                self.ub_rows.append((row, float(self.N - 1)))
                added += 1
        return added

    def matrices(self):
        size = self.size

        def build(rows):
            if not rows:
                return None, None
            r, c, v = [], [], []
            for ri, (row, _) in enumerate(rows):
                for col, coef in row:
                    r.append(ri)
                    c.append(col)
                    v.append(coef)
            A = coo_matrix((v, (r, c)), shape=(len(rows), size)).tocsr()
            b = np.array([rhs for _, rhs in rows], dtype=float)
            return A, b

        A_ub, b_ub = build(self.ub_rows)
        A_eq, b_eq = build(self.eq_rows)
        cost = np.concatenate([self.c, np.zeros(len(self.t_index))])
        return cost, A_ub, b_ub, A_eq, b_eq

    def bounds(self, fixed: Dict[int, int]) -> Tuple[np.ndarray, np.ndarray]:
        lo = np.zeros(self.size)
        hi = np.concatenate([np.ones(self.n), np.full(len(self.t_index), float(self.N - 1))])
        for i, v in fixed.items():
            lo[i] = hi[i] = v
        return lo, hi

    # ---------- 解的解释 ----------

    def selected(self, x: np.ndarray) -> List[int]:
        return [i for i in range(self.n) if x[i] > 0.5]

    def find_cycle_scc(self, selected: Sequence[int]) -> Optional[Set[int]]:
        """被选中节点诱导的类图里的一个非平凡强连通分量"""
        edges: Dict[int, Set[int]] = {}
        for i in selected:
            rec = self.p.nodes[i]
            edges.setdefault(rec.cid, set()).update(rec.children)
        for scc in _tarjan(edges):
            if len(scc) > 1:
                return scc
        return None

    def choices(self, selected: Sequence[int]) -> Dict[int, int]:
        pick: Dict[int, int] = {}
        for i in selected:
            rec = self.p.nodes[i]
            if rec.cid not in pick or rec.eid < pick[rec.cid]:
                pick[rec.cid] = rec.eid
        return _reachable_choices(self.p, pick)


def _tarjan(edges: Dict[int, Set[int]]) -> List[Set[int]]:
    index: Dict[int, int] = {}
    low: Dict[int, int] = {}
    on_stack: Set[int] = set()
    stack: List[int] = []
    out: List[Set[int]] = []
    counter = [0]

    def strong(v: int) -> None:
        # 迭代写法，避免大图递归过深
        work = [(v, iter(sorted(edges.get(v, ()))))]
        index[v] = low[v] = counter[0]
        counter[0] += 1
        stack.append(v)
        on_stack.add(v)
        while work:
            node, it = work[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = low[w] = counter[0]
                    counter[0] += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(sorted(edges.get(w, ())))))
                    advanced = True
                    break
                if w in on_stack:
                    low[node] = min(low[node], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[node])
            if low[node] == index[node]:
                comp = set()
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.add(w)
                    if w == node:
                        break
                out.append(comp)

    for v in sorted(edges):
        if v not in index:
            strong(v)
    return out


# ---------------------------------------------------------------------------
# 分支定界（LP 松弛 + 深度优先）
# ---------------------------------------------------------------------------

class _BranchAndBound:
    def __init__(self, model: _IlpModel, incumbent_cost: float, incumbent: Dict[int, int],
                 deadline: float):
        self.m = model
        self.best_cost = incumbent_cost
        self.best = incumbent
        self.deadline = deadline
        self.lp_solves = 0
        self.timed_out = False

    def _relax(self, fixed: Dict[int, int]):
        cost, A_ub, b_ub, A_eq, b_eq = self.m.matrices()
        lo, hi = self.m.bounds(fixed)
        self.lp_solves += 1
        res = linprog(cost, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
                      bounds=list(zip(lo, hi)), method="highs")
        return res

    def run(self) -> bool:
        """返回是否在时限内完成搜索（完成即证明最优）"""
        stack: List[Dict[int, int]] = [{}]
        while stack:
            if time.monotonic() > self.deadline:
                self.timed_out = True
                return False
            fixed = stack.pop()
            res = self._relax(fixed)
            if res.status != 0:
                continue
            # 代价都是整数，松弛下界可以上取整
            if math.ceil(res.fun - _EPS) >= self.best_cost:
                continue
            x = res.x
            frac = [(abs(x[i] - 0.5), i) for i in range(self.m.n) if _EPS < x[i] < 1 - _EPS]
            if not frac:
                sel = self.m.selected(x)
                scc = self.m.find_cycle_scc(sel)
                if scc is not None:
                    added = self.m.add_cycle_rows(scc)
                    logger.debug("cycle through %s classes, %s rows added", len(scc), added)
                    if added:
                        stack.append(fixed)
                    continue
                choices = self.m.choices(sel)
                cost = dag_cost(self.m.p, choices)
                if cost < self.best_cost:
                    self.best_cost = cost
                    self.best = choices
                    logger.debug("new incumbent %s after %s LP solves", cost, self.lp_solves)
                continue
            _, j = min(frac)
            down = dict(fixed)
            down[j] = 0
            up = dict(fixed)
            up[j] = 1
            stack.append(down)
            stack.append(up)
        return True


def _solve_highs(model: _IlpModel, incumbent_cost: float, incumbent: Dict[int, int],
                 deadline: float) -> Tuple[float, Dict[int, int], bool, int]:
    """scipy.optimize.milp（HiGHS）；环约束同样按需加入"""
    best_cost, best = incumbent_cost, incumbent
    solves = 0
    while True:
        remaining = deadline - time.monotonic()
        if remaining <= 0:
            return best_cost, best, False, solves
        cost, A_ub, b_ub, A_eq, b_eq = model.matrices()
        cons = []
        if A_ub is not None:
            cons.append(LinearConstraint(A_ub, -np.inf, b_ub))
        if A_eq is not None:
            cons.append(LinearConstraint(A_eq, b_eq, b_eq))
        lo, hi = model.bounds({})
        integrality = np.concatenate([np.ones(model.n), np.zeros(len(model.t_index))])
        solves += 1
        res = milp(cost, constraints=cons, integrality=integrality, bounds=Bounds(lo, hi),
                   options={"time_limit": remaining})
        if res.x is None:
            return best_cost, best, False, solves
        sel = model.selected(res.x)
        scc = model.find_cycle_scc(sel)
        if scc is not None:
            if not model.add_cycle_rows(scc):
                return best_cost, best, False, solves
            continue
        choices = model.choices(sel)
        c = dag_cost(model.p, choices)
        if c < best_cost:
            best_cost, best = c, choices
        return best_cost, best, res.status == 0, solves


def ilp_extract(eg: EGraph, roots: Sequence[int], timeout: float = 120.0,
                cost_model: Optional[CostModel] = None, solver: str = "bnb") -> ExtractionResult:
    """
    共享感知的精确提取

    Args:
        timeout: 秒；超时返回当前最好解，status 为 incumbent
        solver: bnb（LP 松弛分支定界）或 highs（scipy.optimize.milp）

    Raises:
        Unextractable: 根不可提取（贪心初始解都不存在）
    """
    start = time.monotonic()
    problem = ExtractionProblem.from_egraph(eg, roots, cost_model)
    greedy = greedy_extract(eg, roots, cost_model, problem)
    deadline = start + timeout
    model = _IlpModel(problem)
    if solver == "highs":
        best_cost, best, proven, solves = _solve_highs(model, greedy.dag_cost, greedy.choices, deadline)
    elif solver == "bnb":
        bnb = _BranchAndBound(model, greedy.dag_cost, greedy.choices, deadline)
        proven = bnb.run()
        best_cost, best, solves = bnb.best_cost, bnb.best, bnb.lp_solves
    else:
        raise ValueError(f"unknown ILP solver {solver!r}")
    _check_acyclic(problem, best)
    status = "optimal" if proven else "incumbent"
    result = ExtractionResult(
        choices=best,
        cost=int(best_cost),
        dag_cost=dag_cost(problem, best),
        status=status,
        roots=list(problem.roots),
        solver=solver,
        elapsed=time.monotonic() - start,
        lp_solves=solves,
    )
    if status == "incumbent":
        logger.warning("ILP extraction hit the %ss timeout, returning incumbent of cost %s",
                       timeout, result.cost)
    else:
        logger.info("ILP extraction optimal: cost %s (greedy dag cost %s, %s LP solves)",
                    result.cost, greedy.dag_cost, solves)
    return result


# ---------------------------------------------------------------------------
# LP 文件导出 / 导入
# ---------------------------------------------------------------------------

def _wrap(terms: List[str], head: str) -> List[str]:
    lines, cur = [], head
    for t in terms:
        if len(cur) + len(t) + 1 > 240:
            lines.append(cur)
            cur = "   "
        cur += " " + t
    lines.append(cur)
    return lines


def _lin(coefs: List[Tuple[float, str]]) -> List[str]:
    out = []
    for i, (coef, name) in enumerate(coefs):
        sign = "-" if coef < 0 else "+"
        mag = abs(coef)
        mag_s = f"{mag:g}"
        if i == 0:
            out.append(f"{'-' if coef < 0 else ''}{mag_s} {name}")
        else:
            out.append(f"{sign} {mag_s} {name}")
    return out


def export_lp(problem: ExtractionProblem) -> str:
    """
    完整的 LP 文本（CPLEX LP 格式）：每个 e-class 都有 t_c，每条边都有无环约束

    Raises:
        Infeasible: 没有根
    """
    if not problem.roots:
        raise Infeasible("extraction problem has no root classes")
    N = problem.ncount
    nodes = problem.nodes
    lines = [f"\\ e-graph extraction: {N} classes, {len(nodes)} nodes", "Minimize"]
    obj = _lin([(float(rec.cost), f"x{rec.eid}") for rec in nodes])
    lines += _wrap(obj, " obj:")
    lines.append("Subject To")
    for r in problem.roots:
        row = _lin([(1.0, f"x{nodes[i].eid}") for i in problem.classes[r]])
        lines += _wrap(row + ["= 1"], f" root_c{r}:")
    for rec in nodes:
        for k in rec.children:
            row = _lin([(1.0, f"x{rec.eid}")] + [(-1.0, f"x{nodes[j].eid}") for j in problem.classes[k]])
            lines += _wrap(row + ["<= 0"], f" child_n{rec.eid}_c{k}:")
    for rec in nodes:
        for k in rec.children:
            row = _lin([(1.0, f"t{rec.cid}"), (-float(N), f"x{rec.eid}"), (-1.0, f"t{k}")])
            lines += _wrap(row + [f">= {1 - N}"], f" acyc_n{rec.eid}_c{k}:")
    lines.append("Bounds")
    for c in sorted(problem.classes):
        lines.append(f" 0 <= t{c} <= {N - 1}")
    lines.append("Binaries")
    lines += _wrap([f"x{rec.eid}" for rec in nodes], "")
    lines.append("Generals")
    lines += _wrap([f"t{c}" for c in sorted(problem.classes)], "")
    lines.append("End")
    return "\n".join(lines) + "\n"


_SOL_NAME = re.compile(r"^[xt]\d+$")


def import_solution(problem: ExtractionProblem, text: str, status: str = "external") -> ExtractionResult:
    """
    读回外部求解器的解：每行 "变量名 值"，也接受 CBC 风格的 "序号 变量名 值 …"

    Raises:
        Infeasible: 解没有覆盖所有需要的 e-class
    """
    values: Dict[str, float] = {}
    for line in text.splitlines():
        toks = line.split()
        for i, tok in enumerate(toks[:-1]):
            if _SOL_NAME.match(tok):
                try:
                    values[tok] = float(toks[i + 1])
                except ValueError:
                    pass
                break
    pick: Dict[int, int] = {}
    for rec in problem.nodes:
        if values.get(f"x{rec.eid}", 0.0) > 0.5:
            if rec.cid not in pick or rec.eid < pick[rec.cid]:
                pick[rec.cid] = rec.eid
    try:
        choices = _reachable_choices(problem, pick)
    except Unextractable as exc:
        raise Infeasible(f"imported solution is incomplete: {exc.message}") from exc
    _check_acyclic(problem, choices)
    cost = dag_cost(problem, choices)
    return ExtractionResult(choices=choices, cost=cost, dag_cost=cost, status=status,
                            roots=list(problem.roots), solver="external")


def solve_lp_scipy(problem: ExtractionProblem, timeout: float = 120.0) -> Tuple[ExtractionResult, str]:
    """
    用 scipy.optimize.milp 解完整的 LP 模型（所有 t_c 都建立），用于交叉检查

    Returns:
        (结果, "变量名 值" 形式的解文本，可直接交给 import_solution)
    """
    start = time.monotonic()
    model = _IlpModel(problem)
    model.add_cycle_rows(set(problem.classes))
    cost, A_ub, b_ub, A_eq, b_eq = model.matrices()
    cons = []
    if A_ub is not None:
        cons.append(LinearConstraint(A_ub, -np.inf, b_ub))
    if A_eq is not None:
        cons.append(LinearConstraint(A_eq, b_eq, b_eq))
    lo, hi = model.bounds({})
    res = milp(cost, constraints=cons, integrality=np.ones(model.size), bounds=Bounds(lo, hi),
               options={"time_limit": timeout})
    if res.x is None:
        raise Infeasible(f"scipy milp returned no solution: {res.message}")
    names = [f"x{rec.eid}" for rec in problem.nodes]
    names += [f"t{c}" for c, _ in sorted(model.t_index.items(), key=lambda kv: kv[1])]
    sol = "\n".join(f"{n} {int(round(v))}" for n, v in zip(names, res.x)) + "\n"
    result = import_solution(problem, sol, status="optimal" if res.status == 0 else "incumbent")
    result.solver = "scipy-milp"
    result.elapsed = time.monotonic() - start
    return result, sol
