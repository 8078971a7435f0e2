# subset_solver.py
"""
最优子集求解模块
功能：带宽固定时在 Σz = p、高相关对互斥等约束下求使总加权残差平方和最小的变量子集
      （穷举与最优优先分支定界两种策略，结果完全一致）
日期：2026.1.5
"""

import heapq
import itertools
from dataclasses import dataclass, field
from math import comb
from typing import FrozenSet, Iterable, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from src.analysis.kernel import integrated_objective, weight_matrix
from src.analysis.wls import FocalGram, LocalFit, WlsEngine
from src.core.config import SolverDefaults
from src.core.exceptions import ConfigError, InfeasibleCardinalityError
from src.core.models import (
    BandwidthField,
    CoefficientField,
    DistanceMatrix,
    SpatialDataset,
    SubsetMask,
)
from src.core.utils import get_logger

logger = get_logger(__name__)

Pairs = FrozenSet[Tuple[int, int]]


@dataclass(frozen=True)
class SubsetSearchNode:
    """
    分支定界树节点

    Attributes:
        forced_in: 已确定入选的列
        forced_out: 已确定排除的列
        lower_bound: Σ_o WSSE_o(forced_in ∪ 未决定列)
        depth: 已决定的候选列个数
    """
    forced_in: FrozenSet[int]
    forced_out: FrozenSet[int]
    lower_bound: float
    depth: int


@dataclass
class SearchStats:
    """一次子集搜索的统计"""
    strategy: str = ''
    nodes_expanded: int = 0
    leaves_evaluated: int = 0
    candidates: int = 0


@dataclass(frozen=True)
class SubsetSolution:
    """MP_β 的解"""
    mask: SubsetMask
    beta: CoefficientField
    objective: float
    total_wsse: float
    local_fit: LocalFit
    gram: Optional[FocalGram] = None
    stats: SearchStats = field(default_factory=SearchStats)


def _violates(columns: Iterable[int], pairs: Pairs) -> bool:
    chosen = set(columns)
    return any(j in chosen and k in chosen for j, k in pairs)


def _free_pool(free_indices: Sequence[int], p: int, pairs: Pairs,
               required: Iterable[int], excluded: Iterable[int]) -> Tuple[Tuple[int, ...], Tuple[int, ...], int]:
    """
    整理候选列

    Returns:
        (必选列, 待选列, 还需从待选列中选出的个数)
    """
    free = set(free_indices)
    required = tuple(sorted(set(required)))
    excluded = set(excluded)
    unknown = (set(required) | excluded) - free
    if unknown:
        raise ConfigError(f"必选/排除变量不是可选列: {sorted(unknown)}")
    if set(required) & excluded:
        raise ConfigError(f"变量同时被要求入选和排除: {sorted(set(required) & excluded)}")
    if p < 0 or p > len(free):
        raise InfeasibleCardinalityError(f"p={p} 超出可选变量个数 {len(free)}")
    if _violates(required, pairs):
        raise InfeasibleCardinalityError("必选变量之间存在高相关对")
    pool = tuple(j for j in sorted(free) if j not in excluded and j not in required)
    k = p - len(required)
    if k < 0 or k > len(pool):
        raise InfeasibleCardinalityError(
            f"必选 {len(required)} 个、可选 {len(pool)} 个变量，无法凑成 p={p}")
    return required, pool, k


def enumerate_feasible_masks(m_free: int, p: int, forbidden_pairs: Iterable[Tuple[int, int]] = (),
                             intercept: bool = True, required: Iterable[int] = (),
                             excluded: Iterable[int] = ()) -> Iterator[SubsetMask]:
    """
    按字典序逐个产生全部可行子集

    Args:
        m_free: 非截距变量个数（列下标为 1..m_free，无截距时为 0..m_free-1）
        p: 子集基数
        forbidden_pairs: 不能同时入选的列对
        intercept: 是否含截距列
        required: 必选列
        excluded: 排除列

    Yields:
        SubsetMask: 可行子集
    """
    pairs = frozenset((min(j, k), max(j, k)) for j, k in forbidden_pairs)
    offset = 1 if intercept else 0
    m = m_free + offset
    free_indices = range(offset, m)
    req, pool, k = _free_pool(free_indices, p, pairs, required, excluded)
    for combo in itertools.combinations(pool, k):
        columns = tuple(sorted(req + combo))
        if _violates(columns, pairs):
            continue
        yield SubsetMask.from_columns(m, columns, forbidden_pairs=pairs, intercept_locked=intercept)


class SubsetSolver:
    """MP_β 精确求解器"""

    def __init__(self, engine: Optional[WlsEngine] = None, strategy: Optional[str] = None,
                 exhaustive_limit: Optional[int] = None, tie_tolerance: Optional[float] = None):
        """
        Args:
            engine: 加权最小二乘求解器
            strategy: exhaustive / branch_and_bound / auto
            exhaustive_limit: auto 模式下穷举的组合数上限
            tie_tolerance: 目标值并列的相对容差
        """
        self.engine = engine or WlsEngine()
        self.strategy = strategy or SolverDefaults.SUBSET_STRATEGY
        if self.strategy not in SolverDefaults.STRATEGIES:
            raise ConfigError(f"未知的子集求解策略: {self.strategy}")
        self.exhaustive_limit = exhaustive_limit or SolverDefaults.EXHAUSTIVE_LIMIT
        self.tie_tolerance = tie_tolerance if tie_tolerance is not None else SolverDefaults.TIE_TOLERANCE
        self.last_stats = SearchStats()

    # ---------------- 并列与剪枝阈值 ----------------

    def _tie_slack(self, best: float, scale: float) -> float:
        return self.tie_tolerance * abs(best) + 1e-14 * scale

    def _prune_level(self, incumbent: float, scale: float) -> float:
        return incumbent + self._tie_slack(incumbent, scale) + 1e-9 * abs(incumbent) + 1e-12 * scale

    def _pick(self, leaves: List[Tuple[float, Tuple[int, ...]]], m: int, pairs: Pairs,
              intercept: bool, scale: float) -> Tuple[SubsetMask, float]:
        """在最优值容差内的候选中按下标和最小选出唯一子集"""
        best = min(total for total, _ in leaves)
        slack = self._tie_slack(best, scale)
        tied = {cols: total for total, cols in leaves if total <= best + slack}
        self.last_stats.candidates = len(tied)
        masks = [SubsetMask.from_columns(m, cols, forbidden_pairs=pairs, intercept_locked=intercept)
                 for cols in tied]
        chosen = min(masks, key=lambda mask: mask.tie_key)
        return chosen, tied[chosen.free_columns]

    def _total(self, gram: FocalGram, columns: Tuple[int, ...], intercept: bool) -> float:
        cols = ((0,) if intercept else ()) + tuple(sorted(columns))
        return float(np.sum(self.engine.subset_wsse(gram, cols)))

    # ---------------- 穷举 ----------------

    def exhaustive(self, ds: SpatialDataset, gram: FocalGram, p: int, pairs: Pairs,
                   required: Iterable[int] = (), excluded: Iterable[int] = ()) -> Tuple[SubsetMask, float]:
        """
        穷举全部可行子集

        Returns:
            Tuple[SubsetMask, float]: (最优子集, 总 WSSE)
        """
        self.last_stats = SearchStats(strategy='exhaustive')
        leaves = []
        for mask in enumerate_feasible_masks(ds.m_free, p, pairs, intercept=ds.intercept,
                                             required=required, excluded=excluded):
            leaves.append((self._total(gram, mask.free_columns, ds.intercept), mask.free_columns))
        self.last_stats.leaves_evaluated = len(leaves)
        if not leaves:
            raise InfeasibleCardinalityError(f"高相关变量对约束下不存在基数为 {p} 的子集")
        return self._pick(leaves, ds.m, pairs, ds.intercept, float(np.sum(gram.yWy)))

    # ---------------- 分支定界 ----------------

    def branch_and_bound(self, ds: SpatialDataset, dm: DistanceMatrix, bw: BandwidthField, p: int,
                         forbidden_pairs: Iterable[Tuple[int, int]] = (),
                         incumbent: Optional[SubsetMask] = None,
                         required: Iterable[int] = (), excluded: Iterable[int] = (),
                         gram: Optional[FocalGram] = None) -> SubsetMask:
        """
        最优优先分支定界

        节点下界取 forced_in ∪ 未决定列 的总 WSSE（加列不会使 WSSE 增大）；
        下界超过当前最优值时剪枝。

        Args:
            ds: 数据集
            dm: 距离矩阵
            bw: 固定的带宽
            p: 子集基数
            forbidden_pairs: 高相关对
            incumbent: 初始可行解（热启动）
            required: 必选列
            excluded: 排除列
            gram: 已有的 Gram 缓存

        Returns:
            SubsetMask: 最优子集
        """
        if gram is None:
            gram = FocalGram(ds.X, ds.y, weight_matrix(dm, bw.per_focal(dm.c)))
        mask, _ = self._branch_and_bound(ds, gram, p, _pairs(forbidden_pairs), incumbent,
                                         required, excluded)
        return mask

    def _branch_and_bound(self, ds: SpatialDataset, gram: FocalGram, p: int, pairs: Pairs,
                          incumbent: Optional[SubsetMask], required: Iterable[int],
                          excluded: Iterable[int]) -> Tuple[SubsetMask, float]:
        stats = SearchStats(strategy='branch_and_bound')
        self.last_stats = stats
        req, pool, k = _free_pool(ds.free_indices, p, pairs, required, excluded)
        scale = float(np.sum(gram.yWy))
        leaves: List[Tuple[float, Tuple[int, ...]]] = []
        best = np.inf

        def evaluate(columns: Tuple[int, ...]):
            nonlocal best
            columns = tuple(sorted(columns))
            if _violates(columns, pairs):
                return
            total = self._total(gram, columns, ds.intercept)
            stats.leaves_evaluated += 1
            leaves.append((total, columns))
            best = min(best, total)

        if incumbent is not None and self._admissible(incumbent, p, pairs, req, excluded):
            evaluate(incumbent.free_columns)

        def leaf_columns(node_in: FrozenSet[int], depth: int) -> Optional[Tuple[int, ...]]:
            remaining = pool[depth:]
            if len(node_in) == k:
                return req + tuple(node_in)
            if len(node_in) + len(remaining) == k:
                return req + tuple(node_in) + remaining
            return None

        counter = itertools.count()
        heap = []

        def push(node_in: FrozenSet[int], node_out: FrozenSet[int], depth: int,
                 bound: Optional[float] = None):
            cols = leaf_columns(node_in, depth)
            if cols is not None:
                evaluate(cols)
                return
            if bound is None:
                bound = self._total(gram, req + tuple(node_in) + pool[depth:], ds.intercept)
            node = SubsetSearchNode(forced_in=node_in, forced_out=node_out,
                                    lower_bound=bound, depth=depth)
            heapq.heappush(heap, (bound, next(counter), node))

        push(frozenset(), frozenset(), 0)

        while heap:
            bound, _, node = heapq.heappop(heap)
            if bound > self._prune_level(best, scale):
                break
            stats.nodes_expanded += 1
            v = pool[node.depth]
            chosen = set(req) | node.forced_in
            # 入选分支：候选列集合不变，下界沿用
            if len(node.forced_in) < k and not any((min(v, u), max(v, u)) in pairs for u in chosen):
                push(node.forced_in | {v}, node.forced_out, node.depth + 1, bound)
            # 排除分支
            if len(node.forced_in) + len(pool) - node.depth - 1 >= k:
                push(node.forced_in, node.forced_out | {v}, node.depth + 1)

        if not leaves:
            raise InfeasibleCardinalityError(f"高相关变量对约束下不存在基数为 {p} 的子集")
        return self._pick(leaves, ds.m, pairs, ds.intercept, scale)

    @staticmethod
    def _admissible(mask: SubsetMask, p: int, pairs: Pairs, required: Sequence[int],
                    excluded: Iterable[int]) -> bool:
        cols = set(mask.free_columns)
        return (mask.p == p and not _violates(cols, pairs) and set(required) <= cols
                and not (cols & set(excluded)))

    # ---------------- 入口 ----------------

    def choose_strategy(self, pool_size: int, k: int) -> str:
        if self.strategy != 'auto':
            return self.strategy
        return 'exhaustive' if comb(pool_size, k) <= self.exhaustive_limit else 'branch_and_bound'

    def solve_mp_beta(self, ds: SpatialDataset, dm: DistanceMatrix, bw: BandwidthField, p: int,
                      forbidden_pairs: Iterable[Tuple[int, int]] = (),
                      warm_start: Optional[SubsetMask] = None,
                      required: Iterable[int] = (), excluded: Iterable[int] = ()) -> SubsetSolution:
        """
        带宽固定时求解最优子集与各焦点系数

        Args:
            ds: 数据集
            dm: 距离矩阵
            bw: 固定带宽
            p: 子集基数（不含截距）
            forbidden_pairs: 高相关对
            warm_start: 上一轮的子集，作为初始可行解
            required: 必选列
            excluded: 排除列

        Returns:
            SubsetSolution: 子集、系数场与整体目标值
        """
        pairs = _pairs(forbidden_pairs)
        required = tuple(required)
        excluded = tuple(excluded)
        req, pool, k = _free_pool(ds.free_indices, p, pairs, required, excluded)
        gram = FocalGram(ds.X, ds.y, weight_matrix(dm, bw.per_focal(dm.c)))

        strategy = self.choose_strategy(len(pool), k)
        if strategy == 'exhaustive':
            mask, total = self.exhaustive(ds, gram, p, pairs, required, excluded)
        else:
            mask, total = self._branch_and_bound(ds, gram, p, pairs, warm_start, required, excluded)

        local = self.engine.fit_local(ds, gram, mask.columns)
        objective = integrated_objective(local.residuals, dm, bw)
        logger.debug(f"MP_β [{strategy}] 子集 {mask.free_columns} 目标 {objective:.6g}")
        return SubsetSolution(mask=mask, beta=CoefficientField(local.beta), objective=objective,
                              total_wsse=total, local_fit=local, gram=gram, stats=self.last_stats)


def _pairs(forbidden_pairs: Iterable[Tuple[int, int]]) -> Pairs:
    return frozenset((min(j, k), max(j, k)) for j, k in forbidden_pairs)
