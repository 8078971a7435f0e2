# kernel.py
"""
核函数与目标函数模块
功能：指数核权重 W_oi = exp(-γ_o·d_oi²) 及整体负对数似然目标
"""

from dataclasses import dataclass

import numpy as np

from src.core.exceptions import NegativeBandwidthError, NonFiniteError, ShapeMismatchError
from src.core.models import BandwidthField, DistanceMatrix


@dataclass(frozen=True)
class WeightRow:
    """单个焦点的核权重"""
    w: np.ndarray
    gamma_used: float


def _check_gamma(gamma: float):
    if not np.isfinite(gamma):
        raise NonFiniteError(f"带宽非有限: {gamma}")
    if gamma < 0:
        raise NegativeBandwidthError(f"带宽不能为负: {gamma}")


def weight_row(d_row, gamma: float) -> WeightRow:
    """
    计算一个焦点的指数核权重

    Args:
        d_row: 该焦点到 n 个观测点的缩放距离
        gamma: 带宽 γ ≥ 0

    Returns:
        WeightRow: 权重及所用带宽
    """
    gamma = float(gamma)
    _check_gamma(gamma)
    d = np.asarray(d_row, dtype=float)
    if not np.all(np.isfinite(d)):
        raise NonFiniteError("距离中存在非有限值")
    w = np.exp(-gamma * d ** 2)
    w.setflags(write=False)
    return WeightRow(w=w, gamma_used=gamma)


def weight_matrix(dm: DistanceMatrix, gammas) -> np.ndarray:
    """所有焦点的权重矩阵 (c×n)，gammas 为每个焦点的带宽"""
    g = np.asarray(gammas, dtype=float).reshape(-1, 1)
    if np.any(g < 0):
        raise NegativeBandwidthError(f"带宽不能为负: {float(g.min())}")
    return np.exp(-g * dm.d2)


def per_focal_objective(errors_o, d_row, gamma_o: float) -> float:
    """
    单个焦点的目标 γ_o·S_o + Σ_i e_oi²·exp(-γ_o·d_oi²)

    Args:
        errors_o: 该焦点模型在 n 个观测上的残差
        d_row: 缩放距离
        gamma_o: 带宽

    Returns:
        float: 目标值
    """
    e = np.asarray(errors_o, dtype=float)
    d = np.asarray(d_row, dtype=float)
    if e.shape != d.shape:
        raise ShapeMismatchError(f"残差长度 {e.shape} 与距离长度 {d.shape} 不一致")
    if not np.all(np.isfinite(e)):
        raise NonFiniteError("残差中存在非有限值")
    _check_gamma(float(gamma_o))
    d2 = d ** 2
    return float(gamma_o * np.sum(d2) + np.sum(e ** 2 * np.exp(-gamma_o * d2)))


def per_focal_terms(errors, dm: DistanceMatrix, gammas) -> np.ndarray:
    """逐焦点目标值向量（长度 c）"""
    e = np.asarray(errors, dtype=float)
    if e.shape != dm.d.shape:
        raise ShapeMismatchError(f"残差形状 {e.shape} 与距离矩阵 {dm.d.shape} 不一致")
    if not np.all(np.isfinite(e)):
        raise NonFiniteError("残差中存在非有限值")
    g = np.asarray(gammas, dtype=float)
    w = weight_matrix(dm, g)
    return g * dm.squared_row_sums + np.sum(e ** 2 * w, axis=1)


def integrated_objective(errors, dm: DistanceMatrix, bw: BandwidthField) -> float:
    """
    整体目标 Σ_o γ_o·S_o + Σ_o Σ_i e_oi²·exp(-γ_o·d_oi²)

    先按焦点求和再跨焦点累加，求和顺序固定。

    Args:
        errors: c×n 残差，第 o 行是焦点 o 的局部模型在所有观测上的残差
        dm: 距离矩阵
        bw: 带宽场

    Returns:
        float: 目标值
    """
    return float(np.sum(per_focal_terms(errors, dm, bw.per_focal(dm.c))))
