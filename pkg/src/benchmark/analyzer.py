# analyzer.py
"""
拟合评价模块
功能：RSS、R²、调整 R²、AICc、系数极差均值比、局部子集平均对称差、RSS 曲线肘部规则，以及方法对比表
"""

from math import comb, log, pi
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from src.core.config import OutputConfig, SolverDefaults
from src.core.exceptions import (
    ConfigError,
    ConstantResponseError,
    ShapeMismatchError,
    UndefinedMetricError,
    ZeroMeanError,
)
from src.core.models import CoefficientField, MetricsBlock, SpatialDataset


def recommend_p(p_values: Sequence[int], rss_values: Sequence[float],
                tolerance: Optional[float] = None) -> int:
    """
    肘部规则推荐子集基数

    1. 第一个满足 RSS(p+1) ≥ RSS(p)·(1 - tolerance) 的 p；
    2. 否则取到首末两点连线（坐标归一化到 [0, 1]）垂直距离最大的 p。

    Args:
        p_values: 递增的 p
        rss_values: 对应的 RSS
        tolerance: 相对改善阈值

    Returns:
        int: 推荐的 p
    """
    tol = tolerance if tolerance is not None else SolverDefaults.ELBOW_TOLERANCE
    p = [int(v) for v in p_values]
    rss = np.asarray(rss_values, dtype=float)
    if len(p) == 0 or len(p) != len(rss):
        raise ConfigError("p 与 RSS 序列长度不一致或为空")
    for i in range(len(p) - 1):
        if rss[i + 1] >= rss[i] * (1.0 - tol):
            return p[i]
    if len(p) <= 2:
        return p[-1]

    x = np.asarray(p, dtype=float)
    x = (x - x[0]) / (x[-1] - x[0])
    span = rss[0] - rss[-1]
    y = (rss - rss[-1]) / span if span > 0 else np.zeros_like(rss)
    # 点到首末连线的距离（分母为常数，可省略）
    dx, dy = x[-1] - x[0], y[-1] - y[0]
    distance = np.abs(dy * x - dx * y + x[-1] * y[0] - y[-1] * x[0])
    return p[int(np.argmax(distance))]


class FitAnalyzer:
    """拟合结果分析器"""

    def __init__(self, zero_mean_tol: float = None):
        """
        Args:
            zero_mean_tol: 系数均值视为 0 的阈值
        """
        self.zero_mean_tol = zero_mean_tol or 1e-12

    @staticmethod
    def matched_pairs(ds: SpatialDataset, fitted_at_focal) -> Tuple[np.ndarray, np.ndarray]:
        """
        取出与观测点重合的焦点上的 (观测值, 预测值)

        Args:
            ds: 数据集
            fitted_at_focal: c 个焦点预测值

        Returns:
            (y, fitted): 只含匹配焦点
        """
        fitted = np.asarray(fitted_at_focal, dtype=float)
        if fitted.shape[0] != ds.c:
            raise ShapeMismatchError(f"预测值个数 {fitted.shape[0]} 与焦点数 {ds.c} 不一致")
        matched = ds.focal_match >= 0
        return ds.y[ds.focal_match[matched]], fitted[matched]

    def compute_metrics(self, y, fitted, n_params_nominal: int,
                        hat_trace: Optional[float] = None) -> MetricsBlock:
        """
        计算拟合优度

        Args:
            y: 观测值
            fitted: 预测值
            n_params_nominal: 名义参数个数（p + 截距）
            hat_trace: 帽子矩阵的迹，给出时计算有效自由度版本的调整 R² 与 AICc

        Returns:
            MetricsBlock: 指标
        """
        y = np.asarray(y, dtype=float)
        fitted = np.asarray(fitted, dtype=float)
        if y.shape != fitted.shape:
            raise ShapeMismatchError(f"观测值 {y.shape} 与预测值 {fitted.shape} 长度不一致")
        n = int(y.shape[0])
        rss = float(np.sum((y - fitted) ** 2))
        tss = float(np.sum((y - y.mean()) ** 2))
        if tss <= 0:
            raise ConstantResponseError("因变量方差为 0，R² 无定义")
        r2 = 1.0 - rss / tss

        # 名义自由度: n - p - 1
        dof = n - n_params_nominal
        r2_adj = 1.0 - (1.0 - r2) * (n - 1) / dof if dof > 0 else None

        r2_adj_eff = None
        aicc = None
        if hat_trace is not None:
            if n - hat_trace > 0:
                r2_adj_eff = 1.0 - (1.0 - r2) * (n - 1) / (n - hat_trace)
            aicc = self.aicc(rss, n, hat_trace)
        return MetricsBlock(rss=rss, tss=tss, r2=r2, r2_adj=r2_adj, n=n,
                            n_params_nominal=int(n_params_nominal), hat_trace=hat_trace,
                            r2_adj_effective=r2_adj_eff, aicc=aicc)

    @staticmethod
    def aicc(rss: float, n: int, hat_trace: float) -> Optional[float]:
        """
        AICc = 2n·log σ̂ + n·log 2π + n(n + tr H)/(n - 2 - tr H)，σ̂ = sqrt(RSS/n)

        Returns:
            Optional[float]: 分母非正或 RSS 为 0 时返回 None
        """
        denom = n - 2.0 - hat_trace
        if denom <= 0 or rss <= 0:
            return None
        sigma = np.sqrt(rss / n)
        return float(2.0 * n * log(sigma) + n * log(2.0 * pi) + n * (n + hat_trace) / denom)

    def range_to_mean(self, beta: CoefficientField, j: int) -> float:
        """
        系数极差均值比 (max - min) / mean

        Raises:
            ZeroMeanError: 均值接近 0
        """
        column = beta.column(j)
        mean = float(np.mean(column))
        if abs(mean) <= self.zero_mean_tol:
            raise ZeroMeanError(f"第 {j} 列系数均值接近 0，极差均值比无定义")
        return float((np.max(column) - np.min(column)) / mean)

    @staticmethod
    def avg_symmetric_difference(subsets: Sequence[Iterable[int]]) -> float:
        """
        局部子集两两对称差大小的平均值

        对每个变量 j，含 j 的子集个数为 k_j，则所有无序对的对称差之和为 Σ_j k_j·(c - k_j)。

        Args:
            subsets: c 个焦点的变量集合

        Returns:
            float: 平均对称差
        """
        c = len(subsets)
        if c < 2:
            raise UndefinedMetricError("焦点少于 2 个，平均对称差无定义")
        counts: Dict[int, int] = {}
        for s in subsets:
            for j in set(s):
                counts[j] = counts.get(j, 0) + 1
        total = sum(k * (c - k) for k in counts.values())
        return total / comb(c, 2)

    def coefficient_summary(self, beta: CoefficientField, var_names: Sequence[str],
                            columns: Optional[Iterable[int]] = None) -> pd.DataFrame:
        """
        各变量系数的描述统计

        Returns:
            pd.DataFrame: 行为变量，列为 mean/std/min/median/max/range_to_mean
        """
        cols = list(columns) if columns is not None else list(range(beta.m))
        rows = []
        for j in cols:
            values = beta.column(j)
            try:
                rtm = self.range_to_mean(beta, j)
            except ZeroMeanError:
                rtm = None
            rows.append({
                'var': var_names[j],
                'mean': float(np.mean(values)),
                'std': float(np.std(values)),
                'min': float(np.min(values)),
                'median': float(np.median(values)),
                'max': float(np.max(values)),
                'range_to_mean': rtm,
            })
        return pd.DataFrame(rows).set_index('var')

    def comparison_row(self, method: str, p: Optional[int], metrics: Optional[MetricsBlock],
                       beta: CoefficientField, var_names: Sequence[str],
                       compare_vars: Sequence[str]) -> Dict:
        """
        对比表中的一行

        Args:
            method: 方法名
            p: 子集基数（外部方法为 None）
            metrics: 指标，未知时为 None
            beta: 系数场
            var_names: beta 各列的名字
            compare_vars: 需要输出极差均值比的变量

        Returns:
            Dict: 行数据
        """
        skip = [j for j, name in enumerate(var_names) if name == OutputConfig.INTERCEPT_NAME]
        subsets = beta.local_subsets(skip_columns=skip)
        try:
            asd = self.avg_symmetric_difference(subsets)
        except UndefinedMetricError:
            asd = None
        row = {
            'method': method,
            'p': p,
            'rss': metrics.rss if metrics else None,
            'r2': metrics.r2 if metrics else None,
            'r2_adj': metrics.r2_adj if metrics else None,
            'aicc': metrics.aicc if metrics else None,
            'subset_cardinality': float(np.mean([len(s) for s in subsets])),
            'avg_symmetric_difference': asd,
        }
        for name in compare_vars:
            value = None
            if name in var_names:
                try:
                    value = self.range_to_mean(beta, list(var_names).index(name))
                except ZeroMeanError:
                    value = None
            row[f'range_to_mean_{name}'] = value
        return row

    def external_row(self, method: str, table: pd.DataFrame, ds: SpatialDataset,
                     compare_vars: Sequence[str]) -> Dict:
        """
        外部方法（MGWR/GWL）的对比行

        焦点编号恰为 0..n-1 且变量都在数据集中时才计算 RSS/R²。

        Args:
            method: 方法名
            table: focal_id × var 的系数表
            ds: 数据集
            compare_vars: 需要输出极差均值比的变量
        """
        var_names = [str(v) for v in table.columns]
        beta = CoefficientField(table.to_numpy(dtype=float))
        metrics = None
        ids = table.index.to_numpy()
        if np.array_equal(ids, np.arange(ds.n)) and all(v in ds.var_names for v in var_names):
            X = ds.X[:, [ds.var_names.index(v) for v in var_names]]
            fitted = np.einsum('ij,ij->i', X, beta.beta)
            n_params = sum(1 for v in var_names if v != OutputConfig.INTERCEPT_NAME) + 1
            metrics = self.compute_metrics(ds.y, fitted, n_params)
        return self.comparison_row(method, None, metrics, beta, var_names, compare_vars)

    @staticmethod
    def comparison_table(rows: List[Dict]) -> pd.DataFrame:
        """把多行对比数据整理成表，列顺序固定"""
        frame = pd.DataFrame(rows)
        leading = ['method', 'p', 'rss', 'r2', 'r2_adj', 'aicc',
                   'subset_cardinality', 'avg_symmetric_difference']
        rest = [col for col in frame.columns if col not in leading]
        return frame[[col for col in leading if col in frame.columns] + rest]
