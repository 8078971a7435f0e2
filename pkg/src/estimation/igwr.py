# igwr.py
"""
交替方向法估计模块
功能：交替求解 MP_β（子集与系数）和 MP_γ（带宽），直到目标函数相对间隙小于阈值；
      按 p 扫描并用肘部规则推荐子集基数
日期：2026.1.5
"""

from dataclasses import dataclass
from typing import FrozenSet, List, Optional, Sequence, Tuple

import numpy as np

from src.analysis.kernel import integrated_objective, weight_matrix
from src.analysis.wls import FocalGram, WlsEngine
from src.benchmark.analyzer import FitAnalyzer, recommend_p
from src.core.config import SolverConfig, SolverDefaults
from src.core.dataset import build_forbidden_pairs
from src.core.exceptions import ConfigError, NonMonotoneObjectiveError
from src.core.models import (
    BandwidthField,
    CoefficientField,
    DistanceMatrix,
    FitReport,
    SpatialDataset,
    SubsetMask,
    TraceEntry,
)
from src.core.utils import get_logger, log_success
from src.estimation.bandwidth import BandwidthSolver
from src.selection.subset_solver import SubsetSolver

logger = get_logger(__name__)


@dataclass(frozen=True)
class SweepResult:
    """按 p 扫描的结果"""
    reports: Tuple[FitReport, ...]
    recommended_p: int

    @property
    def p_values(self) -> List[int]:
        return [r.p for r in self.reports]

    @property
    def rss_values(self) -> List[float]:
        return [r.rss for r in self.reports]

    def report_for(self, p: int) -> FitReport:
        for report in self.reports:
            if report.p == p:
                return report
        raise KeyError(p)


class IGWREstimator:
    """同时估计子集、系数和带宽的交替方向法"""

    def __init__(self, config: Optional[SolverConfig] = None):
        """
        Args:
            config: 求解配置，默认全部取 SolverDefaults
        """
        self.config = config or SolverConfig()
        self.analyzer = FitAnalyzer()

    def _new_solvers(self) -> Tuple[WlsEngine, SubsetSolver, BandwidthSolver]:
        cfg = self.config
        engine = WlsEngine(ridge=cfg.wls_ridge)
        subset_solver = SubsetSolver(engine, strategy=cfg.subset_strategy,
                                     exhaustive_limit=cfg.exhaustive_limit,
                                     tie_tolerance=cfg.tie_tolerance)
        return engine, subset_solver, BandwidthSolver(cfg.gamma_tol)

    def _check_monotone(self, previous: Optional[float], current: float, iteration: int, step: str):
        if previous is None:
            return
        if current > previous * (1.0 + SolverDefaults.MONOTONE_TOLERANCE) + 1e-12:
            raise NonMonotoneObjectiveError(iteration, step, previous, current)

    @staticmethod
    def _relative_gap(previous: float, current: float, floor: float) -> float:
        """|Obj_t+1 - Obj_t| / Obj_t；数值上为 0 的目标按 0 处理"""
        prev = 0.0 if abs(previous) <= floor else previous
        cur = 0.0 if abs(current) <= floor else current
        if prev == 0.0:
            return 0.0 if cur == 0.0 else np.inf
        return abs(cur - prev) / abs(prev)

    def resolve_columns(self, ds: SpatialDataset) -> Tuple[Tuple[int, ...], Tuple[int, ...]]:
        """把配置中的必选/排除变量名转成列下标"""
        required = tuple(ds.column_index(name) for name in self.config.required_vars)
        excluded = tuple(ds.column_index(name) for name in self.config.excluded_vars)
        return required, excluded

    def igwr_fit(self, ds: SpatialDataset, dm: DistanceMatrix, p: int, mode: str = 'global',
                 gamma_init: Optional[BandwidthField] = None,
                 warm_start: Optional[SubsetMask] = None,
                 seed_objective: Optional[float] = None,
                 forbidden_pairs: Optional[FrozenSet[Tuple[int, int]]] = None) -> FitReport:
        """
        交替方向法拟合

        Args:
            ds: 已校验的数据集
            dm: 距离矩阵
            p: 子集基数（不含截距）
            mode: 'global' 或 'local'
            gamma_init: 初始带宽，默认由仅含截距的模型求得
            warm_start: 初始子集
            seed_objective: 种子点的目标值；未给出但同时给了子集和带宽时现场计算
            forbidden_pairs: 高相关对，默认按 config.rho 计算

        Returns:
            FitReport: 拟合报告
        """
        cfg = self.config
        if mode not in SolverDefaults.MODES:
            raise ConfigError(f"未知的带宽模式: {mode}")
        if gamma_init is not None and gamma_init.mode != mode:
            raise ConfigError(f"初始带宽模式 {gamma_init.mode} 与拟合模式 {mode} 不一致")

        engine, subset_solver, bw_solver = self._new_solvers()
        pairs = forbidden_pairs if forbidden_pairs is not None else build_forbidden_pairs(ds, cfg.rho)
        required, excluded = self.resolve_columns(ds)

        gamma = gamma_init if gamma_init is not None else bw_solver.gamma_init(ds, dm, mode)
        mask = warm_start
        floor = 1e-15 * dm.c * float(np.sum((ds.y - ds.y.mean()) ** 2))

        obj_prev = 0.0
        last: Optional[float] = None
        if warm_start is not None and gamma_init is not None:
            if seed_objective is None:
                gram = FocalGram(ds.X, ds.y, weight_matrix(dm, gamma.per_focal(dm.c)))
                seeded = engine.fit_local(ds, gram, warm_start.columns)
                seed_objective = integrated_objective(seeded.residuals, dm, gamma)
            obj_prev = float(seed_objective)
            last = obj_prev

        trace: List[TraceEntry] = []
        converged = False
        solution = None
        iteration = 0
        for iteration in range(1, cfg.max_adm_iters + 1):
            solution = subset_solver.solve_mp_beta(ds, dm, gamma, p, pairs, warm_start=mask,
                                                   required=required, excluded=excluded)
            self._check_monotone(last, solution.objective, iteration, 'beta')
            trace.append(TraceEntry(iteration, 'beta', solution.objective))

            gamma = bw_solver.solve_mp_gamma(solution.local_fit.residuals, dm, mode)
            objective = integrated_objective(solution.local_fit.residuals, dm, gamma)
            self._check_monotone(solution.objective, objective, iteration, 'gamma')
            trace.append(TraceEntry(iteration, 'gamma', objective))

            gap = self._relative_gap(obj_prev, objective, floor)
            logger.info(f"第{iteration}轮: 子集 {ds.names_of(solution.mask.free_columns)} "
                        f"目标 {objective:.10g} 相对间隙 {gap:.3g}")
            mask = solution.mask
            obj_prev = objective
            last = objective
            if gap <= cfg.theta:
                converged = True
                break

        if not converged:
            logger.warning(f"交替迭代 {cfg.max_adm_iters} 轮未收敛")
        else:
            log_success(logger, f"p={p} {mode} 模式 {iteration} 轮收敛，目标 {obj_prev:.10g}")

        warnings = list(ds.warnings) + engine.drain_warnings() + bw_solver.drain_warnings()
        if not converged:
            warnings.append(f"交替迭代 {cfg.max_adm_iters} 轮未收敛")
        return self._build_report(ds, solution, gamma, tuple(trace), obj_prev, iteration,
                                  converged, warnings, engine, mode, p)

    def _build_report(self, ds, solution, gamma, trace, objective, iteration, converged,
                      warnings, engine: WlsEngine, mode: str, p: int) -> FitReport:
        local = solution.local_fit
        hat_trace = None
        if ds.all_focal_matched:
            hat_trace = engine.hat_trace(ds, solution.gram, solution.mask.columns)
        y_obs, fitted = self.analyzer.matched_pairs(ds, local.fitted_at_focal)
        n_params = solution.mask.p + (1 if ds.intercept else 0)
        metrics = self.analyzer.compute_metrics(y_obs, fitted, n_params, hat_trace)
        for message in engine.drain_warnings():
            if message not in warnings:
                warnings.append(message)
        config = dict(self.config.to_dict(), mode=mode, p=p)
        return FitReport(
            selected=solution.mask,
            beta=CoefficientField(local.beta),
            gamma=gamma,
            objective_trace=trace,
            objective=float(objective),
            metrics=metrics,
            fitted=np.asarray(local.fitted_at_focal),
            iterations=iteration,
            converged=converged,
            var_names=ds.var_names,
            warnings=tuple(warnings),
            config=config,
        )

    def sweep_p(self, ds: SpatialDataset, dm: DistanceMatrix, p_range: Sequence[int],
                mode: str = 'global') -> SweepResult:
        """
        对每个 p 运行一次拟合，并用肘部规则推荐 p

        Args:
            ds: 数据集
            dm: 距离矩阵
            p_range: 递增的 p 序列
            mode: 带宽模式

        Returns:
            SweepResult: 各 p 的报告与推荐值
        """
        p_values = sorted(set(int(p) for p in p_range))
        if not p_values:
            raise ConfigError("p 范围为空")
        pairs = build_forbidden_pairs(ds, self.config.rho)
        reports = []
        for p in p_values:
            reports.append(self.igwr_fit(ds, dm, p, mode, forbidden_pairs=pairs))
        recommended = recommend_p(p_values, [r.rss for r in reports], self.config.elbow_tolerance)
        log_success(logger, f"推荐子集基数 p={recommended}")
        return SweepResult(reports=tuple(reports), recommended_p=recommended)
