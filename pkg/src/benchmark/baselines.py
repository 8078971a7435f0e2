# baselines.py
"""
基准方法模块
功能：基础 GWR（CV / AICc 选带宽）、每步重新选带宽的前向选择、全局 OLS 参照
日期：2026.1.5
"""

from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import statsmodels.api as sm

from src.analysis.kernel import weight_matrix
from src.analysis.wls import FocalGram, WlsEngine
from src.benchmark.analyzer import FitAnalyzer, recommend_p
from src.core.config import BandwidthSearchConfig
from src.core.dataset import build_forbidden_pairs
from src.core.exceptions import (
    ConfigError,
    InfeasibleCardinalityError,
    SearchBracketFailureError,
    SingularNormalMatrixError,
)
from src.core.models import CoefficientField, DistanceMatrix, MetricsBlock, SpatialDataset, SubsetMask
from src.core.utils import get_logger, log_success

logger = get_logger(__name__)

CRITERIA = ('cv', 'aicc')


@dataclass(frozen=True)
class BaselineFit:
    """
    基准方法的拟合结果

    Attributes:
        method: bgwr_cv / bgwr_aicc / forward_selection / ols
        bandwidth: 全局带宽 γ
        subset: 变量子集
        beta: 系数场
        metrics: 指标
        criterion_value: 带宽搜索准则在 γ 处的值
        fitted: 焦点处的预测值
        warnings: 提示
    """
    method: str
    bandwidth: float
    subset: SubsetMask
    beta: CoefficientField
    metrics: MetricsBlock
    criterion_value: float
    fitted: np.ndarray
    warnings: Tuple[str, ...] = ()


@dataclass(frozen=True)
class ForwardSelectionResult:
    """前向选择结果：p = 1..p_max 的嵌套子集链"""
    fits: Tuple[BaselineFit, ...]
    order: Tuple[int, ...]
    stop_p: int
    criterion: str

    @property
    def rss_values(self) -> List[float]:
        return [fit.metrics.rss for fit in self.fits]

    def fit_for(self, p: int) -> BaselineFit:
        return self.fits[p - 1]

    @property
    def elbow_p(self) -> int:
        """RSS 曲线上按肘部规则推荐的 p"""
        return recommend_p(range(1, len(self.fits) + 1), self.rss_values)


def golden_section(function: Callable[[float], float], a: float, c: float,
                   tol: float = None, max_iters: int = None) -> Tuple[float, float]:
    """
    黄金分割搜索一维单峰函数的最小值

    Args:
        function: 目标函数
        a: 区间左端
        c: 区间右端
        tol: 区间宽度终止阈值
        max_iters: 最大迭代次数

    Returns:
        Tuple[float, float]: (最优点, 最优值)
    """
    tol = tol or BandwidthSearchConfig.GOLDEN_TOL
    max_iters = max_iters or BandwidthSearchConfig.GOLDEN_MAX_ITERS
    delta = 0.38197
    scores: Dict[float, float] = {}

    def score(x: float) -> float:
        if x not in scores:
            scores[x] = function(x)
        return scores[x]

    b = a + delta * (c - a)
    d = c - delta * (c - a)
    iters = 0
    while abs(c - a) > tol and iters < max_iters:
        iters += 1
        if score(b) <= score(d):
            c, d = d, b
            b = a + delta * (c - a)
        else:
            a, b = b, d
            d = c - delta * (c - a)
    best = min(scores, key=lambda x: (scores[x], x))
    return best, scores[best]


class BaselineEstimator:
    """基础 GWR 与前向选择"""

    def __init__(self, engine: Optional[WlsEngine] = None, grid_points: int = None,
                 log10_min: float = None, log10_max: float = None):
        """
        Args:
            engine: 加权最小二乘求解器
            grid_points: 粗网格点数
            log10_min: 带宽搜索下界（log10 γ）
            log10_max: 带宽搜索上界（log10 γ）
        """
        self.engine = engine or WlsEngine()
        self.grid_points = grid_points or BandwidthSearchConfig.GRID_POINTS
        self.log10_min = log10_min if log10_min is not None else BandwidthSearchConfig.LOG10_GAMMA_MIN
        self.log10_max = log10_max if log10_max is not None else BandwidthSearchConfig.LOG10_GAMMA_MAX
        self.analyzer = FitAnalyzer()
        self.warnings: List[str] = []

    def _warn(self, message: str):
        if message not in self.warnings:
            self.warnings.append(message)
            logger.warning(message)

    @staticmethod
    def _require_matched(ds: SpatialDataset):
        if not ds.all_focal_matched:
            raise ConfigError("CV / AICc 需要每个焦点都与观测点重合")

    def _gram(self, ds: SpatialDataset, dm: DistanceMatrix, gamma: float) -> FocalGram:
        return FocalGram(ds.X, ds.y, weight_matrix(dm, np.full(dm.c, gamma)))

    def criterion_value(self, ds: SpatialDataset, dm: DistanceMatrix, columns: Sequence[int],
                        gamma: float, criterion: str) -> float:
        """
        带宽 γ 处的 CV 或 AICc

        CV(γ) = Σ_o (y_o - ŷ_o^loo(γ))²；法方程奇异时返回 inf
        """
        gram = self._gram(ds, dm, gamma)
        cols = tuple(columns)
        y_obs = ds.y[ds.focal_match]
        try:
            if criterion == 'cv':
                pred = self.engine.loo_predictions(ds, gram, cols)
                return float(np.sum((y_obs - pred) ** 2))
            local = self.engine.fit_local(ds, gram, cols)
            rss = float(np.sum((y_obs - local.fitted_at_focal) ** 2))
            value = self.analyzer.aicc(rss, ds.n, self.engine.hat_trace(ds, gram, cols))
        except SingularNormalMatrixError:
            return np.inf
        return np.inf if value is None else float(value)

    def _scan(self, objective: Callable[[float], float], lo: float, hi: float) -> Tuple[np.ndarray, np.ndarray]:
        grid = np.linspace(lo, hi, self.grid_points)
        return grid, np.array([objective(x) for x in grid])

    def search_bandwidth(self, ds: SpatialDataset, dm: DistanceMatrix, columns: Sequence[int],
                         criterion: str) -> Tuple[float, float]:
        """
        在 log10 γ 上先粗网格扫描，再在最优格点相邻区间内黄金分割细化

        Args:
            ds: 数据集
            dm: 距离矩阵
            columns: 入选列
            criterion: 'cv' 或 'aicc'

        Returns:
            Tuple[float, float]: (γ*, 准则值)
        """
        if criterion not in CRITERIA:
            raise ConfigError(f"未知的带宽准则: {criterion}")
        self._require_matched(ds)

        def objective(log_gamma: float) -> float:
            return self.criterion_value(ds, dm, columns, 10.0 ** log_gamma, criterion)

        lo, hi = self.log10_min, self.log10_max
        for widened in (False, True):
            grid, values = self._scan(objective, lo, hi)
            finite = np.isfinite(values)
            if not np.any(finite):
                raise SearchBracketFailureError(f"带宽区间 [1e{lo:g}, 1e{hi:g}] 内准则全部无定义")
            best = float(np.min(values[finite]))
            spread = float(np.max(values[finite]) - best)
            if spread <= BandwidthSearchConfig.FLAT_TOL * (1.0 + abs(best)):
                self._warn(f"{criterion} 准则在带宽区间内是平的，取区间中点 γ=1")
                mid = 0.5 * (lo + hi)
                return 10.0 ** mid, objective(mid)
            i = int(np.argmin(np.where(finite, values, np.inf)))
            if i < len(grid) - 1:
                break
            if widened:
                raise SearchBracketFailureError(f"{criterion} 准则最小值在带宽上界 1e{hi:g}")
            logger.info("准则最小值在带宽上界，扩大搜索区间")
            lo -= BandwidthSearchConfig.LOG10_WIDEN
            hi += BandwidthSearchConfig.LOG10_WIDEN

        if i == 0:
            logger.info(f"{criterion} 准则最小值在带宽下界，接近全局回归")
        a = grid[max(i - 1, 0)]
        c = grid[min(i + 1, len(grid) - 1)]
        x, value = golden_section(objective, a, c)
        if values[i] < value:
            x, value = float(grid[i]), float(values[i])
        return 10.0 ** x, value

    def bgwr_fit(self, ds: SpatialDataset, dm: DistanceMatrix, subset: SubsetMask,
                 criterion: str = 'aicc', method: Optional[str] = None) -> BaselineFit:
        """
        基础 GWR：按准则搜索全局带宽后逐焦点加权最小二乘

        Args:
            ds: 数据集
            dm: 距离矩阵
            subset: 变量子集
            criterion: 'cv' 或 'aicc'
            method: 结果中的方法名，默认 bgwr_<criterion>

        Returns:
            BaselineFit: 拟合结果
        """
        gamma, value = self.search_bandwidth(ds, dm, subset.columns, criterion)
        gram = self._gram(ds, dm, gamma)
        local = self.engine.fit_local(ds, gram, subset.columns)
        hat_trace = self.engine.hat_trace(ds, gram, subset.columns)
        y_obs, fitted = self.analyzer.matched_pairs(ds, local.fitted_at_focal)
        metrics = self.analyzer.compute_metrics(y_obs, fitted, subset.p + (1 if ds.intercept else 0), hat_trace)
        warnings = tuple(self.warnings + self.engine.drain_warnings())
        self.warnings = []
        return BaselineFit(method=method or f'bgwr_{criterion}', bandwidth=float(gamma), subset=subset,
                           beta=CoefficientField(local.beta), metrics=metrics, criterion_value=value,
                           fitted=local.fitted_at_focal, warnings=warnings)

    def forward_selection(self, ds: SpatialDataset, dm: DistanceMatrix, p_max: Optional[int] = None,
                          criterion: str = 'aicc', rho: Optional[float] = None,
                          forbidden_pairs=None) -> ForwardSelectionResult:
        """
        前向选择：每步对每个候选变量重新搜索带宽，加入准则最小的变量

        Args:
            ds: 数据集
            dm: 距离矩阵
            p_max: 最多选入的变量数，默认全部
            criterion: 'cv' 或 'aicc'
            rho: 高相关阈值（给出时候选变量不能与已选变量构成高相关对）
            forbidden_pairs: 直接给出高相关对

        Returns:
            ForwardSelectionResult: 嵌套子集链与停止点
        """
        p_max = ds.m_free if p_max is None else int(p_max)
        if not 1 <= p_max <= ds.m_free:
            raise InfeasibleCardinalityError(f"p_max={p_max} 超出可选变量个数 {ds.m_free}")
        if forbidden_pairs is None:
            forbidden_pairs = build_forbidden_pairs(ds, rho) if rho is not None else frozenset()
        pairs = frozenset(forbidden_pairs)

        selected: List[int] = []
        fits: List[BaselineFit] = []
        for step in range(1, p_max + 1):
            best_fit, best_j = None, None
            for j in ds.free_indices:
                if j in selected or any((min(j, k), max(j, k)) in pairs for k in selected):
                    continue
                mask = SubsetMask.from_columns(ds.m, selected + [j], forbidden_pairs=pairs,
                                               intercept_locked=ds.intercept)
                fit = self.bgwr_fit(ds, dm, mask, criterion, method='forward_selection')
                # 严格小于：并列时保留下标较小的变量
                if best_fit is None or fit.criterion_value < best_fit.criterion_value:
                    best_fit, best_j = fit, j
            if best_fit is None:
                raise InfeasibleCardinalityError(f"高相关对约束下无法选入第 {step} 个变量")
            selected.append(best_j)
            fits.append(best_fit)
            logger.info(f"前向选择第{step}步: 加入 {ds.var_names[best_j]} "
                        f"(γ={best_fit.bandwidth:.4g}, {criterion}={best_fit.criterion_value:.6g})")

        stop_p = self._stop_point(fits)
        log_success(logger, f"前向选择顺序 {ds.names_of(selected)}，AICc 停止于 p={stop_p}")
        return ForwardSelectionResult(fits=tuple(fits), order=tuple(selected), stop_p=stop_p,
                                      criterion=criterion)

    @staticmethod
    def _stop_point(fits: Sequence[BaselineFit]) -> int:
        """AICc 第一次变差之前的 p；始终不变差时为最后一个 p"""
        for p in range(2, len(fits) + 1):
            prev, cur = fits[p - 2].metrics.aicc, fits[p - 1].metrics.aicc
            if prev is not None and cur is not None and cur > prev:
                return p - 1
        return len(fits)

    def ols_fit(self, ds: SpatialDataset, subset: Optional[SubsetMask] = None) -> BaselineFit:
        """
        全局普通最小二乘（statsmodels），作为对比表中的参照行

        Args:
            ds: 数据集
            subset: 变量子集，默认全部变量

        Returns:
            BaselineFit: 系数在所有焦点上相同
        """
        subset = subset or SubsetMask.full(ds.m, intercept_locked=ds.intercept)
        cols = list(subset.columns)
        result = sm.OLS(ds.y, ds.X[:, cols]).fit()
        beta = np.zeros((ds.c, ds.m))
        beta[:, cols] = np.asarray(result.params)
        coefficients = CoefficientField(beta)
        fitted = coefficients.predict(ds.X_focal)
        y_obs, fitted_obs = self.analyzer.matched_pairs(ds, fitted)
        metrics = self.analyzer.compute_metrics(y_obs, fitted_obs, len(cols),
                                                hat_trace=float(len(cols)))
        return BaselineFit(method='ols', bandwidth=0.0, subset=subset, beta=coefficients,
                           metrics=metrics, criterion_value=float(result.aic), fitted=fitted)
