# bandwidth.py
"""
带宽求解模块
功能：系数固定时求解 MP_γ（逐焦点或全局的一维严格凸问题），以及仅含截距模型的初始带宽
日期：2026.1.5
"""

from typing import List, Optional

import numpy as np
from scipy.optimize import brentq

from src.core.config import SolverDefaults
from src.core.exceptions import ConfigError, NonFiniteResidualError, ShapeMismatchError
from src.core.models import BandwidthField, DistanceMatrix, SpatialDataset
from src.core.utils import get_logger

logger = get_logger(__name__)


class BandwidthSolver:
    """
    MP_γ 求解器

    对每个焦点（local）或全部焦点合并（global）最小化
    f(γ) = γ·S + Σ e²·exp(-γ·d²)，γ ≥ 0。
    f'(γ) = S - Σ d²·e²·exp(-γ·d²) 单调递增，f'(0) ≥ 0 时取 γ = 0，
    否则倍增上界直到 f' > 0，再在区间内求根。
    """

    MAX_DOUBLINGS = 2000

    def __init__(self, gamma_tol: Optional[float] = None):
        """
        Args:
            gamma_tol: 驻点容差，|f'(γ*)| ≤ gamma_tol·(1+S)
        """
        self.gamma_tol = gamma_tol or SolverDefaults.GAMMA_TOL
        self.warnings: List[str] = []

    def _warn(self, message: str):
        if message not in self.warnings:
            self.warnings.append(message)
            logger.warning(message)

    def drain_warnings(self) -> List[str]:
        out, self.warnings = self.warnings, []
        return out

    @staticmethod
    def derivative(gamma: float, d2: np.ndarray, e2: np.ndarray, S: float) -> float:
        """f'(γ)"""
        return float(S - np.sum(d2 * e2 * np.exp(-gamma * d2)))

    @staticmethod
    def objective(gamma: float, d2: np.ndarray, e2: np.ndarray, S: float) -> float:
        """f(γ)"""
        return float(gamma * S + np.sum(e2 * np.exp(-gamma * d2)))

    @staticmethod
    def is_degenerate(d2: np.ndarray, e2: np.ndarray) -> bool:
        """残差全为 0 或距离全为 0 时目标对 γ 只是弱单调"""
        return not np.any(e2 > 0) or not np.any(d2 > 0)

    def solve_1d(self, d2: np.ndarray, e2: np.ndarray) -> float:
        """
        一维带宽问题

        Args:
            d2: 平方距离
            e2: 平方残差

        Returns:
            float: 最优 γ ≥ 0
        """
        S = float(np.sum(d2))
        if self.is_degenerate(d2, e2):
            return 0.0
        if self.derivative(0.0, d2, e2, S) >= 0:
            return 0.0

        hi = 1.0
        for _ in range(self.MAX_DOUBLINGS):
            if self.derivative(hi, d2, e2, S) > 0:
                break
            hi *= 2.0
        else:
            raise NonFiniteResidualError(f"带宽上界倍增 {self.MAX_DOUBLINGS} 次仍未括住驻点")

        lo = hi / 2.0 if hi > 1.0 else 0.0
        gamma = brentq(self.derivative, lo, hi, args=(d2, e2, S), xtol=1e-15, rtol=4 * np.finfo(float).eps,
                       maxiter=500)
        if abs(self.derivative(gamma, d2, e2, S)) > self.gamma_tol * (1.0 + S):
            logger.debug(f"一维带宽求解驻点残差偏大: γ={gamma:.6g}")
        return float(gamma)

    def solve_mp_gamma(self, errors, dm: DistanceMatrix, mode: str) -> BandwidthField:
        """
        系数固定时求解带宽

        Args:
            errors: c×n 残差，第 o 行为焦点 o 的局部模型残差
            dm: 距离矩阵
            mode: 'global' 或 'local'

        Returns:
            BandwidthField: 最优带宽
        """
        if mode not in SolverDefaults.MODES:
            raise ConfigError(f"未知的带宽模式: {mode}")
        e = np.asarray(errors, dtype=float)
        if e.shape != dm.d.shape:
            raise ShapeMismatchError(f"残差形状 {e.shape} 与距离矩阵 {dm.d.shape} 不一致")
        if not np.all(np.isfinite(e)):
            raise NonFiniteResidualError("残差中存在 NaN 或 inf")
        e2 = e ** 2
        d2 = np.asarray(dm.d2)

        if mode == 'global':
            if self.is_degenerate(d2, e2):
                self._warn("残差或距离全为 0，全局带宽取 0")
            return BandwidthField.global_(self.solve_1d(d2.ravel(), e2.ravel()))

        gammas = np.zeros(dm.c)
        degenerate = 0
        for o in range(dm.c):
            if self.is_degenerate(d2[o], e2[o]):
                degenerate += 1
                continue
            gammas[o] = self.solve_1d(d2[o], e2[o])
        if degenerate:
            self._warn(f"{degenerate} 个焦点的残差或距离全为 0，带宽取 0")
        return BandwidthField.local(gammas)

    def gamma_init(self, ds: SpatialDataset, dm: DistanceMatrix, mode: str) -> BandwidthField:
        """
        初始带宽：除截距外系数全部取 0，截距取 y 的算术平均，再求解带宽

        Args:
            ds: 数据集（必须含截距）
            dm: 距离矩阵
            mode: 'global' 或 'local'

        Returns:
            BandwidthField: 初始带宽
        """
        if not ds.intercept:
            raise ConfigError("初始带宽需要截距列")
        residual = ds.y - float(np.mean(ds.y))
        errors = np.broadcast_to(residual, (dm.c, ds.n))
        return self.solve_mp_gamma(errors, dm, mode)
