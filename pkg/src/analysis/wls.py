# wls.py
"""
加权最小二乘模块
功能：按列子集对每个焦点做加权最小二乘（Cholesky 分解求解法方程），
      提供帽子矩阵行、留一预测，以及批量焦点求解与 Gram 矩阵缓存
日期：2026.1.5
"""

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from src.analysis.kernel import WeightRow
from src.core.config import SolverDefaults
from src.core.exceptions import SingularNormalMatrixError, ShapeMismatchError
from src.core.models import SpatialDataset, SubsetMask
from src.core.utils import get_logger

logger = get_logger(__name__)

Columns = Tuple[int, ...]


@dataclass(frozen=True)
class WlsSolution:
    """
    单个焦点的加权最小二乘解

    Attributes:
        beta_sub: 入选列上的系数
        columns: 入选列下标
        wsse: Σ_i w_i·e_i²
        sse_unweighted: Σ_i e_i²
        fitted_at_focal: 焦点设计行的预测值
        ridge: 实际使用的对角线抖动（0 表示未抖动）
    """
    beta_sub: np.ndarray
    columns: Columns
    wsse: float
    sse_unweighted: float
    fitted_at_focal: float
    ridge: float = 0.0


@dataclass(frozen=True)
class LocalFit:
    """所有焦点在同一列子集上的批量拟合结果"""
    columns: Columns
    beta: np.ndarray  # c×m，未入选列为 0
    wsse: np.ndarray  # c
    residuals: np.ndarray  # c×n，e_oi = y_i - x_i·β_o
    fitted_at_focal: np.ndarray  # c，未匹配焦点为 NaN
    ridge: np.ndarray  # c

    @property
    def total_wsse(self) -> float:
        return float(np.sum(self.wsse))


class FocalGram:
    """
    固定权重下每个焦点的加权 Gram 矩阵缓存

    G_o = XᵀW_oX，b_o = XᵀW_oy，yWy_o = yᵀW_oy；
    任意列子集的法方程直接从 G_o 中切片得到。
    """

    def __init__(self, X: np.ndarray, y: np.ndarray, W: np.ndarray):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        W = np.asarray(W, dtype=float)
        if W.ndim != 2 or W.shape[1] != X.shape[0]:
            raise ShapeMismatchError(f"权重矩阵形状 {W.shape} 与观测数 {X.shape[0]} 不一致")
        self.X = X
        self.y = y
        self.W = W
        WX = W[:, :, None] * X[None, :, :]
        self.G = np.einsum('oij,ik->ojk', WX, X)
        self.b = W @ (X * y[:, None])
        self.yWy = W @ (y * y)
        self._wsse_cache: Dict[Columns, np.ndarray] = {}

    @property
    def c(self) -> int:
        return int(self.W.shape[0])

    def normal_equations(self, columns: Columns) -> Tuple[np.ndarray, np.ndarray]:
        cols = list(columns)
        return self.G[:, cols][:, :, cols], self.b[:, cols]


class WlsEngine:
    """加权最小二乘求解器（奇异时按抖动序列回退）"""

    RIDGE_STEPS = (1e-10, 1e-9, 1e-8, 1e-7, 1e-6)

    def __init__(self, ridge: Optional[float] = None, ridge_max: Optional[float] = None):
        """
        Args:
            ridge: 默认对角线抖动（相对 Gram 对角线均值）
            ridge_max: 回退抖动上限，仍奇异则报错
        """
        self.ridge = ridge if ridge is not None else SolverDefaults.WLS_RIDGE
        self.ridge_max = ridge_max if ridge_max is not None else SolverDefaults.RIDGE_MAX
        self.warnings: List[str] = []

    # ---------------- 抖动与求解 ----------------

    def _ridge_levels(self) -> List[float]:
        levels = [self.ridge]
        levels += [r for r in self.RIDGE_STEPS if self.ridge < r <= self.ridge_max]
        return levels

    def _warn(self, message: str):
        if message not in self.warnings:
            self.warnings.append(message)
            logger.warning(message)

    def drain_warnings(self) -> List[str]:
        """取出并清空累计的提示"""
        out, self.warnings = self.warnings, []
        return out

    @staticmethod
    def _diag_scale(G: np.ndarray) -> np.ndarray:
        q = G.shape[-1]
        scale = np.trace(G, axis1=-2, axis2=-1) / max(q, 1)
        return np.where(scale > 0, scale, 1.0)

    def solve_batch(self, G: np.ndarray, B: np.ndarray,
                    focal_ids: Optional[Sequence[int]] = None) -> Tuple[np.ndarray, np.ndarray]:
        """
        批量求解 G_k·x_k = B_k

        Args:
            G: k×q×q 对称半正定矩阵
            B: k×q×r 右端项
            focal_ids: 报错时使用的焦点编号

        Returns:
            Tuple[np.ndarray, np.ndarray]: (k×q×r 解, k 个实际抖动)
        """
        k, q = G.shape[0], G.shape[-1]
        out = np.zeros(B.shape)
        used = np.zeros(k)
        if q == 0 or k == 0:
            return out, used
        ids = np.arange(k) if focal_ids is None else np.asarray(focal_ids)
        scale = self._diag_scale(G)
        eye = np.eye(q)
        pending = np.arange(k)

        for level in self._ridge_levels():
            A = G[pending] + (level * scale[pending])[:, None, None] * eye
            solved = self._try_batch(A, B[pending])
            if solved is None:
                solved = [self._try_single(A[t], B[pending][t]) for t in range(len(pending))]
            else:
                solved = list(solved)
            done = np.array([s is not None for s in solved], dtype=bool)
            for t in np.flatnonzero(done):
                out[pending[t]] = solved[t]
                used[pending[t]] = level
            if level > self.ridge and np.any(done):
                self._warn(f"法方程奇异，{int(done.sum())} 个焦点使用对角线抖动 {level:g}")
            pending = pending[~done]
            if pending.size == 0:
                return out, used

        first = int(ids[pending[0]])
        raise SingularNormalMatrixError(
            f"抖动到 {self.ridge_max:g} 后法方程仍奇异（焦点 {first}）", focal_index=first)

    @staticmethod
    def _try_batch(A: np.ndarray, B: np.ndarray) -> Optional[np.ndarray]:
        try:
            L = np.linalg.cholesky(A)
        except np.linalg.LinAlgError:
            return None
        z = np.linalg.solve(L, B)
        x = np.linalg.solve(np.swapaxes(L, -1, -2), z)
        if not np.all(np.isfinite(x)):
            return None
        return x

    @staticmethod
    def _try_single(A: np.ndarray, B: np.ndarray) -> Optional[np.ndarray]:
        try:
            factor = cho_factor(A, lower=True, check_finite=True)
            x = cho_solve(factor, B)
        except (LinAlgError, ValueError):
            return None
        if not np.all(np.isfinite(x)):
            return None
        return x

    # ---------------- 单焦点操作 ----------------

    def _solve_single_focal(self, X_sub: np.ndarray, w: np.ndarray,
                            rhs: np.ndarray, focal_index: Optional[int]) -> Tuple[np.ndarray, float]:
        A = X_sub.T @ (X_sub * w[:, None])
        ids = None if focal_index is None else [focal_index]
        x, used = self.solve_batch(A[None], rhs[None], focal_ids=ids)
        return x[0], float(used[0])

    def wls_fit(self, ds: SpatialDataset, subset: SubsetMask, w: WeightRow,
                focal_row, focal_index: Optional[int] = None) -> WlsSolution:
        """
        单个焦点在列子集上的加权最小二乘

        Args:
            ds: 数据集
            subset: 变量子集
            w: 该焦点的核权重
            focal_row: 焦点处的 m 维设计行
            focal_index: 焦点编号（仅用于报错）

        Returns:
            WlsSolution: 系数与残差平方和
        """
        cols = subset.columns
        X_sub = ds.X[:, cols]
        weights = np.asarray(w.w, dtype=float)
        if weights.shape[0] != ds.n:
            raise ShapeMismatchError(f"权重长度 {weights.shape[0]} 与观测数 {ds.n} 不一致")
        rhs = (X_sub.T @ (weights * ds.y)).reshape(-1, 1)
        beta, ridge = self._solve_single_focal(X_sub, weights, rhs, focal_index)
        beta = beta.ravel()
        e = ds.y - X_sub @ beta
        row = np.asarray(focal_row, dtype=float)
        return WlsSolution(
            beta_sub=beta,
            columns=cols,
            wsse=float(np.sum(weights * e ** 2)),
            sse_unweighted=float(np.sum(e ** 2)),
            fitted_at_focal=float(row[list(cols)] @ beta),
            ridge=ridge,
        )

    def hat_row(self, ds: SpatialDataset, subset: SubsetMask, w: WeightRow, focal_row,
                focal_index: Optional[int] = None) -> np.ndarray:
        """
        帽子矩阵行 X_o(S)·(X(S)ᵀW_oX(S))⁻¹·X(S)ᵀW_o

        Returns:
            np.ndarray: n 维，与 y 的内积即焦点预测值
        """
        cols = subset.columns
        X_sub = ds.X[:, cols]
        weights = np.asarray(w.w, dtype=float)
        x_o = np.asarray(focal_row, dtype=float)[list(cols)].reshape(-1, 1)
        v, _ = self._solve_single_focal(X_sub, weights, x_o, focal_index)
        return (X_sub @ v.ravel()) * weights

    def loo_predict(self, ds: SpatialDataset, subset: SubsetMask, w: WeightRow,
                    focal_index: int) -> float:
        """把焦点自身观测的权重置 0 后拟合，再在该观测处预测"""
        weights = np.array(w.w, dtype=float)
        weights[focal_index] = 0.0
        held_out = WeightRow(w=weights, gamma_used=w.gamma_used)
        solution = self.wls_fit(ds, subset, held_out, ds.X[focal_index], focal_index=focal_index)
        return solution.fitted_at_focal

    # ---------------- 批量焦点操作 ----------------

    def subset_wsse(self, gram: FocalGram, columns: Columns) -> np.ndarray:
        """
        由 Gram 缓存计算每个焦点在列子集上的 WSSE（结果按列集合缓存）

        WSSE_o = yWy_o - 2·b_oᵀβ_o + β_oᵀG_oβ_o
        """
        key = tuple(columns)
        cached = gram._wsse_cache.get(key)
        if cached is not None:
            return cached
        if not key:
            wsse = np.array(gram.yWy)
        else:
            G, b = gram.normal_equations(key)
            beta, _ = self.solve_batch(G, b[:, :, None])
            beta = beta[:, :, 0]
            Gbeta = np.einsum('ojk,ok->oj', G, beta)
            wsse = gram.yWy - 2.0 * np.einsum('oj,oj->o', b, beta) + np.einsum('oj,oj->o', beta, Gbeta)
            wsse = np.maximum(wsse, 0.0)
        wsse.setflags(write=False)
        gram._wsse_cache[key] = wsse
        return wsse

    def fit_local(self, ds: SpatialDataset, gram: FocalGram, columns: Columns) -> LocalFit:
        """
        所有焦点在列子集上的加权最小二乘，残差按定义精确重算

        Args:
            ds: 数据集
            gram: 当前权重下的 Gram 缓存
            columns: 入选列（含截距）

        Returns:
            LocalFit: 批量拟合结果
        """
        cols = tuple(columns)
        c, m = gram.c, ds.m
        beta_full = np.zeros((c, m))
        ridge = np.zeros(c)
        if cols:
            G, b = gram.normal_equations(cols)
            beta, ridge = self.solve_batch(G, b[:, :, None])
            beta_full[:, list(cols)] = beta[:, :, 0]
        residuals = ds.y[None, :] - beta_full @ ds.X.T
        wsse = np.sum(gram.W * residuals ** 2, axis=1)
        fitted = np.einsum('oj,oj->o', ds.X_focal, beta_full)
        return LocalFit(columns=cols, beta=beta_full, wsse=wsse, residuals=residuals,
                        fitted_at_focal=fitted, ridge=ridge)

    def hat_trace(self, ds: SpatialDataset, gram: FocalGram, columns: Columns) -> float:
        """
        帽子矩阵的迹 Σ_o H_o,i(o)，要求每个焦点都对应一个观测
        """
        if not ds.all_focal_matched:
            raise ShapeMismatchError("焦点未全部对应观测点，帽子矩阵迹无定义")
        cols = list(columns)
        G, _ = gram.normal_equations(tuple(cols))
        obs = ds.focal_match
        x_o = ds.X[obs][:, cols]
        v, _ = self.solve_batch(G, x_o[:, :, None])
        w_self = gram.W[np.arange(gram.c), obs]
        return float(np.sum(w_self * np.einsum('oj,oj->o', x_o, v[:, :, 0])))

    def loo_predictions(self, ds: SpatialDataset, gram: FocalGram, columns: Columns) -> np.ndarray:
        """
        批量留一预测：从 G_o、b_o 中减去自身观测的贡献后求解

        Returns:
            np.ndarray: c 个留一预测值
        """
        if not ds.all_focal_matched:
            raise ShapeMismatchError("焦点未全部对应观测点，留一预测无定义")
        cols = list(columns)
        G, b = gram.normal_equations(tuple(cols))
        obs = ds.focal_match
        x_o = ds.X[obs][:, cols]
        w_self = gram.W[np.arange(gram.c), obs]
        G_loo = G - w_self[:, None, None] * np.einsum('oj,ok->ojk', x_o, x_o)
        b_loo = b - (w_self * ds.y[obs])[:, None] * x_o
        beta, _ = self.solve_batch(G_loo, b_loo[:, :, None])
        return np.einsum('oj,oj->o', x_o, beta[:, :, 0])


_default_engine = WlsEngine()


def wls_fit(ds: SpatialDataset, subset: SubsetMask, w: WeightRow, focal_row) -> WlsSolution:
    """使用默认求解器的单焦点加权最小二乘"""
    return _default_engine.wls_fit(ds, subset, w, focal_row)


def hat_row(ds: SpatialDataset, subset: SubsetMask, w: WeightRow, focal_row) -> np.ndarray:
    return _default_engine.hat_row(ds, subset, w, focal_row)


def loo_predict(ds: SpatialDataset, subset: SubsetMask, w: WeightRow, focal_index: int) -> float:
    return _default_engine.loo_predict(ds, subset, w, focal_index)
