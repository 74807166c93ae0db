"""
重写条件合成：小位宽穷举等价检查 → 决策树 → 积之和

流程：
    1. enumerate_maps 枚举所有位宽 (1…wmax) / 符号组合
    2. label_maps 在每个组合下实例化左右两侧，用穷举等价检查打标签（可多进程）
    3. fit_tree 以信息增益自顶向下建树，最大深度从 0 开始递增，直到训练误差为 0；
       再做一次精确搜索，看更浅的零误差树是否存在
    4. tree_to_sop 只保留 T 叶子，每个叶子对应一个积项

得到的条件只在 wmax 以内精确；更宽的位宽靠后端的逐步验证兜底。
"""

import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import product
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from engine.conditions import FALSE, TRUE, Condition, feature_atoms, feature_vector
from engine.errors import BudgetExceeded, CombinatorialBudget, Inseparable
from engine.ir import (
    DEFAULT_BUDGET, Signage, Term, equivalent_bounded, eval_vector, free_vars, input_widths, max_width,
)
from engine.rules import constants_fit, op_choices, substitute, type_variables

logger = logging.getLogger(__name__)

DEFAULT_WMAX = 8
DEFAULT_MAP_CAP = 10 ** 6
# 打标签前的随机抽样数
PRESAMPLE = 1024
_SAMPLE_MAX_WIDTH = 62
# 精确最小深度搜索的节点上限，超出后保留贪心树
EXACT_SEARCH_BUDGET = 50_000
SIGNAGES = (Signage.UNSIGN, Signage.SIGN)

MapBinding = Dict[str, Any]


# ---------------------------------------------------------------------------
# 数据结构
# ---------------------------------------------------------------------------

@dataclass
class TruthTable:
    width_vars: List[str]
    sign_vars: List[str]
    maps: List[MapBinding]
    labels: List[bool]

    def __len__(self) -> int:
        return len(self.maps)

    @property
    def true_count(self) -> int:
        return sum(self.labels)

    @property
    def features(self) -> List[str]:
        return feature_atoms(self.width_vars, self.sign_vars)

    def matrix(self) -> np.ndarray:
        atoms = self.features
        return np.array([feature_vector(atoms, m) for m in self.maps], dtype=bool).reshape(
            len(self.maps), len(atoms))


@dataclass
class DecisionTree:
    """内部节点测试一个特征原子（真走右、假走左）；叶子带 T/F 标签"""

    label: Optional[bool] = None
    feature: Optional[str] = None
    index: int = -1
    left: Optional["DecisionTree"] = None
    right: Optional["DecisionTree"] = None

    @property
    def is_leaf(self) -> bool:
        return self.feature is None

    @property
    def depth(self) -> int:
        if self.is_leaf:
            return 0
        return 1 + max(self.left.depth, self.right.depth)

    @property
    def leaves(self) -> int:
        if self.is_leaf:
            return 1
        return self.left.leaves + self.right.leaves

    def predict_row(self, row: Sequence[bool]) -> bool:
        node = self
        while not node.is_leaf:
            node = node.right if row[node.index] else node.left
        return bool(node.label)

    def to_dict(self) -> Dict[str, Any]:
        if self.is_leaf:
            return {"label": self.label}
        return {"feature": self.feature, "false": self.left.to_dict(), "true": self.right.to_dict()}


@dataclass
class SynthesisReport:
    condition: Condition
    maps: int
    true_count: int
    depth: int
    label_time: float
    fit_time: float
    width_vars: List[str] = field(default_factory=list)
    sign_vars: List[str] = field(default_factory=list)
    tree: Optional[DecisionTree] = None
    table: Optional[TruthTable] = None

    def to_record(self, lhs: str, rhs: str) -> Dict[str, Any]:
        """条件库记录"""
        return {
            "condition": str(self.condition),
            "source": "synthesized",
            "lhs": lhs,
            "rhs": rhs,
            "maps": self.maps,
            "depth": self.depth,
        }

    def to_dict(self) -> Dict[str, Any]:
        return {
            "condition": str(self.condition),
            "maps": self.maps,
            "true": self.true_count,
            "false": self.maps - self.true_count,
            "depth": self.depth,
            "label_time": round(self.label_time, 3),
            "fit_time": round(self.fit_time, 3),
            "width_vars": self.width_vars,
            "sign_vars": self.sign_vars,
        }


# ---------------------------------------------------------------------------
# 枚举与打标签
# ---------------------------------------------------------------------------

def pattern_variables(lhs: Term, rhs: Term) -> Tuple[List[str], List[str]]:
    lw, ls = type_variables(lhs)
    rw, rs = type_variables(rhs)
    ws = lw + [w for w in rw if w not in lw]
    ss = ls + [s for s in rs if s not in ls]
    key = lambda n: int(n[1:])
    return sorted(ws, key=key), sorted(ss, key=key)


def enumerate_maps(lhs: Term, rhs: Term, wmax: int = DEFAULT_WMAX,
                   cap: int = DEFAULT_MAP_CAP) -> List[MapBinding]:
    """
    枚举位宽 1…wmax、符号 unsign/sign 的全部组合（字典序）

    Raises:
        CombinatorialBudget: 组合数 wmax^H · 2^G 超过 cap
    """
    ws, ss = pattern_variables(lhs, rhs)
    total = wmax ** len(ws) * 2 ** len(ss)
    if total > cap:
        raise CombinatorialBudget(f"{total} maps exceed the cap of {cap}")
    out = []
    for widths in product(range(1, wmax + 1), repeat=len(ws)):
        for signs in product(SIGNAGES, repeat=len(ss)):
            m: MapBinding = dict(zip(ws, widths))
            m.update(zip(ss, signs))
            out.append(m)
    return out


def label_one(lhs: Term, rhs: Term, m: MapBinding, budget: int = DEFAULT_BUDGET) -> bool:
    """
    单个绑定下左右两侧是否等价；算子集合的每种取法都必须等价

    左侧常数在该绑定下放不下时，e-matching 不会产生这个绑定，视为成立。
    先随机抽一批输入找反例，找不到再穷举。
    """
    if not constants_fit(lhs, m):
        return True
    for ops in op_choices(lhs):
        mm = dict(m)
        mm.update(ops)
        left = substitute(lhs, mm, fill_wildcards=True)
        right = substitute(rhs, mm)
        if _sampled_mismatch(left, right):
            return False
        try:
            ok, _ = equivalent_bounded(left, right, budget=budget)
        except BudgetExceeded as exc:
            raise BudgetExceeded(f"{exc.message} at map {_show(mm)}", exc.bits, exc.budget) from exc
        if not ok:
            return False
    return True


def _sampled_mismatch(left: Term, right: Term, samples: int = PRESAMPLE) -> bool:
    """随机输入上出现差异即可判假；输入空间小于采样量时直接交给穷举"""
    widths = input_widths(left, right)
    for name in free_vars(left) | free_vars(right):
        widths.setdefault(name, 1)
    bits = sum(widths.values())
    if not widths or (1 << bits) <= samples or max_width(left, right) > _SAMPLE_MAX_WIDTH:
        return False
    rng = np.random.default_rng(bits)
    env = {n: rng.integers(0, 1 << w, size=samples, dtype=np.int64) for n, w in sorted(widths.items())}
    return bool(np.any(eval_vector(left, env) != eval_vector(right, env)))


def _map_bits(lhs: Term, rhs: Term, m: MapBinding) -> int:
    """该绑定实例化后的输入总位数，用来估计穷举的工作量"""
    mm = dict(m)
    mm.update(op_choices(lhs)[0])
    left = substitute(lhs, mm, fill_wildcards=True)
    right = substitute(rhs, mm)
    return sum(input_widths(left, right).values())


def _label_chunk(args: Tuple[Term, Term, List[MapBinding], int]) -> List[bool]:
    lhs, rhs, maps, budget = args
    return [label_one(lhs, rhs, m, budget) for m in maps]


def _balanced_jobs(costs: Sequence[int], workers: int) -> List[List[int]]:
    """
    按工作量从大到小排好下标，再切成大致等量的任务

    穷举的工作量随输入位数指数增长，按枚举顺序连续切块会让最后几个进程独占最宽的绑定。
    大任务先提交，进程池按先来先做的方式自然摊平。
    """
    order = sorted(range(len(costs)), key=lambda i: -costs[i])
    work = [1 << min(costs[i], 62) for i in order]
    target = max(1, sum(work) // (workers * 16))
    jobs: List[List[int]] = []
    current: List[int] = []
    load = 0
    for i, w in zip(order, work):
        current.append(i)
        load += w
        if load >= target:
            jobs.append(current)
            current, load = [], 0
    if current:
        jobs.append(current)
    return jobs


def label_maps(lhs: Term, rhs: Term, maps: List[MapBinding], workers: Optional[int] = None,
               budget: int = DEFAULT_BUDGET) -> TruthTable:
    """
    用穷举等价检查给每个绑定打标签

    Args:
        workers: 进程数；None 取 CPU 数，<= 1 时串行

    Raises:
        BudgetExceeded: 某个绑定的输入位数超过 budget（消息里带该绑定）
    """
    ws, ss = pattern_variables(lhs, rhs)
    if workers is None:
        workers = os.cpu_count() or 1
    if workers <= 1 or len(maps) < 64:
        labels = _label_chunk((lhs, rhs, maps, budget))
    else:
        jobs = _balanced_jobs([_map_bits(lhs, rhs, m) for m in maps], workers)
        chunks = [(lhs, rhs, [maps[i] for i in job], budget) for job in jobs]
        out: List[Optional[bool]] = [None] * len(maps)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for job, part in zip(jobs, pool.map(_label_chunk, chunks)):
                for i, label in zip(job, part):
                    out[i] = label
        labels = [bool(v) for v in out]
    logger.info("labeled %s maps: %s valid", len(maps), sum(labels))
    return TruthTable(ws, ss, list(maps), labels)


def _show(m: MapBinding) -> str:
    return "{" + ", ".join(f"{k}={v}" for k, v in m.items()) + "}"


# ---------------------------------------------------------------------------
# 决策树
# ---------------------------------------------------------------------------

def _entropy(pos: np.ndarray, n: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        p = np.where(n > 0, pos / np.maximum(n, 1), 0.0)
        h = -(p * np.log2(np.where(p > 0, p, 1)) + (1 - p) * np.log2(np.where(p < 1, 1 - p, 1)))
    return h


def _best_split(X: np.ndarray, y: np.ndarray) -> Optional[int]:
    """信息增益最大的特征；只考虑两侧都非空的划分，并列取下标最小者"""
    n = len(y)
    n_true = X.sum(axis=0)
    n_false = n - n_true
    valid = (n_true > 0) & (n_false > 0)
    if not valid.any():
        return None
    pos_true = (X & y[:, None]).sum(axis=0)
    pos_false = y.sum() - pos_true
    weighted = (n_true * _entropy(pos_true, n_true) + n_false * _entropy(pos_false, n_false)) / n
    # 越小越好；四舍五入让浮点误差不影响并列判断
    score = np.where(valid, np.round(weighted, 12), np.inf)
    return int(np.argmin(score))


def _grow(X: np.ndarray, y: np.ndarray, atoms: Sequence[str], depth: int) -> DecisionTree:
    n_pos = int(y.sum())
    majority = n_pos * 2 >= len(y)
    if n_pos == 0 or n_pos == len(y) or depth == 0:
        return DecisionTree(label=bool(majority))
    j = _best_split(X, y)
    if j is None:
        return DecisionTree(label=bool(majority))
    mask = X[:, j]
    return DecisionTree(
        feature=atoms[j],
        index=j,
        left=_grow(X[~mask], y[~mask], atoms, depth - 1),
        right=_grow(X[mask], y[mask], atoms, depth - 1),
    )


def _errors(tree: DecisionTree, X: np.ndarray, y: np.ndarray) -> int:
    return sum(tree.predict_row(row) != bool(label) for row, label in zip(X, y))


class _SearchExhausted(Exception):
    pass


class _ExactSearch:
    """
    深度不超过 k 的零误差树是否存在；存在时给出一棵

    在行下标集合上递归，同一 (行集合, 剩余深度) 只算一次。候选特征按加权熵排序，
    与贪心建树的偏好一致，所以存在多棵同深度的树时结果仍稳定。
    """

    def __init__(self, X: np.ndarray, y: np.ndarray, atoms: Sequence[str],
                 budget: int = EXACT_SEARCH_BUDGET):
        self.X, self.y, self.atoms = X, y, atoms
        self.budget = budget
        self.calls = 0
        self.memo: Dict[Tuple[bytes, int], Optional[DecisionTree]] = {}

    def solve(self, k: int) -> Optional[DecisionTree]:
        return self._search(np.arange(len(self.y)), k)

    def _search(self, rows: np.ndarray, k: int) -> Optional[DecisionTree]:
        yr = self.y[rows]
        n_pos = int(yr.sum())
        if n_pos == 0 or n_pos == len(rows):
            return DecisionTree(label=bool(n_pos))
        if k == 0:
            return None
        key = (rows.tobytes(), k)
        if key in self.memo:
            return self.memo[key]
        self.calls += 1
        if self.calls > self.budget:
            raise _SearchExhausted()

        Xr = self.X[rows]
        n = len(rows)
        n_true = Xr.sum(axis=0)
        n_false = n - n_true
        valid = (n_true > 0) & (n_false > 0)
        pos_true = (Xr & yr[:, None]).sum(axis=0)
        pos_false = n_pos - pos_true
        weighted = (n_true * _entropy(pos_true, n_true) + n_false * _entropy(pos_false, n_false)) / n
        order = np.argsort(np.where(valid, np.round(weighted, 12), np.inf), kind="stable")

        result: Optional[DecisionTree] = None
        if k == 1:
            pure = ((pos_true == 0) | (pos_true == n_true)) & ((pos_false == 0) | (pos_false == n_false))
            hits = [int(j) for j in order if valid[j] and pure[j]]
            if hits:
                j = hits[0]
                result = self._split_leaves(j, int(pos_false[j]), int(pos_true[j]))
        elif k == 2:
            result = self._depth_two(Xr, yr, order, valid)
        else:
            for j in order:
                if not valid[j]:
                    break
                mask = Xr[:, j]
                left = self._search(rows[~mask], k - 1)
                if left is None:
                    continue
                right = self._search(rows[mask], k - 1)
                if right is None:
                    continue
                result = DecisionTree(feature=self.atoms[int(j)], index=int(j), left=left, right=right)
                break
        self.memo[key] = result
        return result

    def _split_leaves(self, j: int, n_false_pos: int, n_true_pos: int) -> DecisionTree:
        return DecisionTree(
            feature=self.atoms[j], index=j,
            left=DecisionTree(label=n_false_pos > 0),
            right=DecisionTree(label=n_true_pos > 0),
        )

    def _depth_two(self, Xr: np.ndarray, yr: np.ndarray, order: np.ndarray,
                   valid: np.ndarray) -> Optional[DecisionTree]:
        """深度 2 一次算完：两两特征的共现计数用矩阵乘法得到"""
        # 浮点矩阵乘走 BLAS；计数远小于 2^53，取整无误差
        Xf = Xr.astype(np.float64)
        n, n_pos = len(yr), int(yr.sum())
        both = np.rint(Xf.T @ Xf).astype(np.int64)
        both_pos = np.rint(Xf.T @ (Xf * yr[:, None])).astype(np.int64)
        n_true = np.diag(both)
        pos_true = np.diag(both_pos)

        def side_ok(cnt, pos, n1, p1):
            # cnt/pos: 每个 j 这一侧的行数与正例数；n1/p1: 再按 l 划分后为真的一半
            n0, p0 = cnt[:, None] - n1, pos[:, None] - p1
            split = ((p1 == 0) | (p1 == n1)) & ((p0 == 0) | (p0 == n0))
            pure = (pos == 0) | (pos == cnt)
            return pure | split.any(axis=1), split

        ok_t, split_t = side_ok(n_true, pos_true, both, both_pos)
        ok_f, split_f = side_ok(n - n_true, n_pos - pos_true,
                                n_true[None, :] - both, pos_true[None, :] - both_pos)
        for j in order:
            if not valid[j]:
                break
            if not (ok_t[j] and ok_f[j]):
                continue
            sides = []
            for cnt, pos, n1, p1, split in (
                (n - n_true[j], n_pos - pos_true[j], n_true - both[j], pos_true - both_pos[j], split_f[j]),
                (n_true[j], pos_true[j], both[j], both_pos[j], split_t[j]),
            ):
                if pos == 0 or pos == cnt:
                    sides.append(DecisionTree(label=bool(pos)))
                    continue
                l = int(np.nonzero(split)[0][0])
                sides.append(self._split_leaves(l, int(pos - p1[l]), int(p1[l])))
            return DecisionTree(feature=self.atoms[int(j)], index=int(j), left=sides[0], right=sides[1])
        return None


def fit_tree(table: TruthTable, max_depth: Optional[int] = None,
             exact_budget: int = EXACT_SEARCH_BUDGET) -> DecisionTree:
    """
    先用贪心建树：从深度 0 开始逐步加深，取第一棵训练误差为 0 的树；
    再在更浅的深度上做精确搜索，找到就换成更浅的那棵

    贪心按信息增益选特征，遇到要两层配合才能分开的情形会多用一层；精确搜索补上这一层。
    搜索超过 exact_budget 个节点时保留贪心结果。

    Raises:
        Inseparable: 特征不足以区分所有绑定（同一特征向量上既有 T 又有 F）
        ValueError: 真值表为空
    """
    if len(table) == 0:
        raise ValueError("empty truth table")
    atoms = table.features
    X = table.matrix()
    y = np.array(table.labels, dtype=bool)
    limit = max_depth if max_depth is not None else len(atoms)
    prev_leaves = -1
    greedy = None
    for depth in range(0, limit + 1):
        tree = _grow(X, y, atoms, depth)
        errors = _errors(tree, X, y)
        logger.debug("depth %s: %s training errors, %s leaves", depth, errors, tree.leaves)
        if errors == 0:
            greedy = tree
            break
        if tree.leaves == prev_leaves:
            break
        prev_leaves = tree.leaves
    if greedy is None:
        raise Inseparable(
            f"no zero-error tree up to depth {limit}; the feature set cannot separate these maps")

    search = _ExactSearch(X, y, atoms, exact_budget)
    try:
        for k in range(1, greedy.depth):
            tree = search.solve(k)
            if tree is not None:
                logger.info("exact search found depth %s below greedy depth %s", k, greedy.depth)
                return tree
    except _SearchExhausted:
        logger.warning("exact tree search gave up after %s nodes, keeping greedy depth %s",
                       search.calls, greedy.depth)
    return greedy


def tree_to_sop(tree: DecisionTree) -> Condition:
    """每个 T 叶子变成一个积项（根到叶子路径上的文字）"""
    products = []

    def walk(node: DecisionTree, path: Tuple[Tuple[str, bool], ...]):
        if node.is_leaf:
            if node.label:
                products.append(path)
            return
        walk(node.left, path + ((node.feature, False),))
        walk(node.right, path + ((node.feature, True),))

    walk(tree, ())
    if not products:
        return FALSE
    if products == [()]:
        return TRUE
    return Condition(tuple(products))


def synthesize(lhs: Term, rhs: Term, wmax: int = DEFAULT_WMAX, workers: Optional[int] = None,
               cap: int = DEFAULT_MAP_CAP, budget: int = DEFAULT_BUDGET) -> SynthesisReport:
    """枚举 → 打标签 → 建树 → SOP，一次完成"""
    maps = enumerate_maps(lhs, rhs, wmax, cap)
    t0 = time.monotonic()
    table = label_maps(lhs, rhs, maps, workers, budget)
    t1 = time.monotonic()
    tree = fit_tree(table)
    t2 = time.monotonic()
    cond = tree_to_sop(tree)
    logger.info("synthesized condition with %s products at depth %s", len(cond.products), tree.depth)
    return SynthesisReport(
        condition=cond,
        maps=len(maps),
        true_count=table.true_count,
        depth=tree.depth,
        label_time=t1 - t0,
        fit_time=t2 - t1,
        width_vars=table.width_vars,
        sign_vars=table.sign_vars,
        tree=tree,
        table=table,
    )
