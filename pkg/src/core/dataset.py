# dataset.py
"""
数据集处理模块
功能：数据集校验、距离矩阵构建、高相关变量对识别、标准化
日期：2026.1.5
"""

from typing import FrozenSet, Tuple

import numpy as np
import pandas as pd
from scipy.spatial.distance import cdist
from sklearn.preprocessing import StandardScaler

from src.core.exceptions import (
    ConfigError,
    ConstantResponseError,
    DegenerateGeometryError,
    NonFiniteError,
    ShapeMismatchError,
)
from src.core.models import DistanceMatrix, SpatialDataset
from src.core.utils import get_logger

logger = get_logger(__name__)


def validate_dataset(ds: SpatialDataset) -> SpatialDataset:
    """
    校验数据集的全部不变量

    Args:
        ds: 待校验的数据集

    Returns:
        SpatialDataset: 校验通过的数据集，重复坐标等提示写入 warnings
    """
    n = ds.y.shape[0]
    if n < 2:
        raise ShapeMismatchError(f"观测数至少为 2: {n}")
    if ds.X.shape[0] != n:
        raise ShapeMismatchError(f"X 行数 {ds.X.shape[0]} 与 y 长度 {n} 不一致")
    if ds.X.shape[1] < 1:
        raise ShapeMismatchError("X 至少需要一列")
    if ds.coords.shape != (n, 2):
        raise ShapeMismatchError(f"coords 形状应为 ({n}, 2)，实际为 {ds.coords.shape}")
    if ds.focal_coords.ndim != 2 or ds.focal_coords.shape[1] != 2 or ds.focal_coords.shape[0] < 1:
        raise ShapeMismatchError(f"focal_coords 形状应为 (c, 2)，实际为 {ds.focal_coords.shape}")
    if len(ds.var_names) != ds.X.shape[1]:
        raise ShapeMismatchError(f"变量名个数 {len(ds.var_names)} 与 X 列数 {ds.X.shape[1]} 不一致")
    if len(set(ds.var_names)) != len(ds.var_names):
        raise ConfigError(f"变量名重复: {list(ds.var_names)}")

    for name, arr in (('y', ds.y), ('X', ds.X), ('coords', ds.coords), ('focal_coords', ds.focal_coords)):
        if not np.all(np.isfinite(arr)):
            raise NonFiniteError(f"{name} 中存在 NaN 或 inf")

    if ds.intercept and not np.all(ds.X[:, 0] == 1.0):
        raise ShapeMismatchError("启用截距时 X 第一列必须全为 1")
    if np.ptp(ds.y) == 0:
        raise ConstantResponseError("因变量方差为 0，R² 无定义")

    warnings = list(ds.warnings)
    _, counts = np.unique(ds.coords, axis=0, return_counts=True)
    duplicated = int(np.sum(counts[counts > 1]))
    if duplicated:
        message = f"{duplicated} 个观测点坐标重复"
        logger.warning(message)
        if message not in warnings:
            warnings.append(message)
    return ds.replace(warnings=tuple(warnings))


def build_distance_matrix(ds: SpatialDataset) -> DistanceMatrix:
    """
    构建焦点到观测点的欧氏距离矩阵，并除以全局最大值缩放到 [0, 1]

    Args:
        ds: 数据集

    Returns:
        DistanceMatrix: 缩放后的距离矩阵
    """
    raw = cdist(ds.focal_coords, ds.coords, metric='euclidean')
    raw_max = float(raw.max()) if raw.size else 0.0
    if raw_max <= 0:
        raise DegenerateGeometryError("所有焦点与观测点的距离均为 0")
    d = raw / raw_max
    # 最大值处精确为 1
    d[raw == raw_max] = 1.0
    return DistanceMatrix(d=d, d_raw_max=raw_max, squared_row_sums=np.sum(d ** 2, axis=1))


def build_forbidden_pairs(ds: SpatialDataset, rho: float) -> FrozenSet[Tuple[int, int]]:
    """
    识别高相关变量对 |ρ_jk| ≥ rho

    截距列与零方差列不参与相关系数计算。

    Args:
        ds: 数据集
        rho: 相关系数阈值

    Returns:
        FrozenSet[Tuple[int, int]]: 列下标对 (j, k)，j < k
    """
    if not 0 < rho <= 1:
        raise ConfigError(f"rho 必须在 (0, 1] 内: {rho}")
    columns = [j for j in ds.free_indices if np.ptp(ds.X[:, j]) > 0]
    if len(columns) < 2:
        return frozenset()

    frame = pd.DataFrame(ds.X[:, columns], columns=columns)
    corr = frame.corr(method='pearson').abs().to_numpy()
    pairs = set()
    for a in range(len(columns)):
        for b in range(a + 1, len(columns)):
            # 完全相同的列由于舍入可能略小于 1
            if corr[a, b] >= rho or np.isclose(corr[a, b], 1.0, rtol=0, atol=1e-12):
                pairs.add((columns[a], columns[b]))
    if pairs:
        logger.info(f"高相关变量对 (|ρ| ≥ {rho}): {sorted(pairs)}")
    return frozenset(pairs)


def standardize_dataset(ds: SpatialDataset, x: bool = False, y: bool = False) -> SpatialDataset:
    """
    用 StandardScaler 标准化自变量和/或因变量，截距列不变

    Args:
        ds: 数据集
        x: 是否标准化非截距列
        y: 是否标准化因变量

    Returns:
        SpatialDataset: 新数据集
    """
    if not (x or y):
        return ds
    X = np.array(ds.X)
    y_values = np.array(ds.y)
    if x:
        free = list(ds.free_indices)
        varying = [j for j in free if np.ptp(X[:, j]) > 0]
        if varying:
            X[:, varying] = StandardScaler().fit_transform(X[:, varying])
    if y:
        y_values = StandardScaler().fit_transform(y_values.reshape(-1, 1)).ravel()
    return ds.replace(X=X, y=y_values)
