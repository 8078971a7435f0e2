# config.py
"""
配置模块
功能：统一管理求解器、带宽搜索与输出的配置参数
日期：2026.1.5
"""

from dataclasses import dataclass, field, asdict
from typing import Dict, Tuple

from src.core.exceptions import ConfigError


class SolverDefaults:
    """求解器默认参数"""
    THETA = 1e-6  # 相对间隙阈值
    MAX_ADM_ITERS = 50  # 交替迭代上限
    RHO = 0.9  # 高相关变量对阈值
    GAMMA_TOL = 1e-10  # 一维带宽求解的驻点容差
    WLS_RIDGE = 0.0  # 法方程对角线抖动（0 表示不加）
    RIDGE_FALLBACK = 1e-10  # 奇异时的第一次抖动
    RIDGE_MAX = 1e-6  # 抖动上限，超过仍奇异则报错
    SUBSET_STRATEGY = 'auto'  # exhaustive / branch_and_bound / auto
    EXHAUSTIVE_LIMIT = 20000  # auto 模式下穷举的组合数上限
    ELBOW_TOLERANCE = 0.04  # RSS 相对下降不足 4% 视同未下降；取 0 时只在 RSS 不降时停止
    TIE_TOLERANCE = 1e-12  # 子集目标值并列的相对容差
    MONOTONE_TOLERANCE = 1e-9  # 目标函数单调性检查的相对容差

    STRATEGIES = ('exhaustive', 'branch_and_bound', 'auto')
    MODES = ('global', 'local')


class BandwidthSearchConfig:
    """基准 GWR 带宽搜索配置（log γ 空间）"""
    LOG10_GAMMA_MIN = -4.0
    LOG10_GAMMA_MAX = 4.0
    LOG10_WIDEN = 2.0  # 区间扩展一次时两端各扩展的数量级
    GRID_POINTS = 25  # 粗网格点数
    GOLDEN_TOL = 1e-6  # 黄金分割终止宽度（log γ）
    GOLDEN_MAX_ITERS = 200
    FLAT_TOL = 1e-12  # 准则平坦判定


class OutputConfig:
    """输出配置"""
    SCHEMA = 'igwr-report/1'
    FLOAT_FORMAT = '%.17g'  # 17 位有效数字，保证读回一致
    REPORT_FILE = 'report.json'
    COEFFICIENTS_FILE = 'coefficients.csv'
    BANDWIDTHS_FILE = 'bandwidths.csv'
    SWEEP_FILE = 'rss_vs_p.csv'
    COMPARISON_FILE = 'comparison.csv'
    INTERCEPT_NAME = 'Intercept'


@dataclass(frozen=True)
class SolverConfig:
    """一次拟合使用的全部求解参数"""
    theta: float = SolverDefaults.THETA
    max_adm_iters: int = SolverDefaults.MAX_ADM_ITERS
    rho: float = SolverDefaults.RHO
    gamma_tol: float = SolverDefaults.GAMMA_TOL
    wls_ridge: float = SolverDefaults.WLS_RIDGE
    subset_strategy: str = SolverDefaults.SUBSET_STRATEGY
    standardize_x: bool = False
    standardize_y: bool = False
    exhaustive_limit: int = SolverDefaults.EXHAUSTIVE_LIMIT
    elbow_tolerance: float = SolverDefaults.ELBOW_TOLERANCE
    tie_tolerance: float = SolverDefaults.TIE_TOLERANCE
    required_vars: Tuple[str, ...] = field(default_factory=tuple)
    excluded_vars: Tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if not self.theta > 0:
            raise ConfigError(f"theta 必须大于 0: {self.theta}")
        if not 0 < self.rho <= 1:
            raise ConfigError(f"rho 必须在 (0, 1] 内: {self.rho}")
        if int(self.max_adm_iters) < 1:
            raise ConfigError(f"max_adm_iters 至少为 1: {self.max_adm_iters}")
        if not self.gamma_tol > 0:
            raise ConfigError(f"gamma_tol 必须大于 0: {self.gamma_tol}")
        if self.wls_ridge < 0:
            raise ConfigError(f"wls_ridge 不能为负: {self.wls_ridge}")
        if self.subset_strategy not in SolverDefaults.STRATEGIES:
            raise ConfigError(f"未知的子集求解策略: {self.subset_strategy}")
        if self.exhaustive_limit < 1:
            raise ConfigError(f"exhaustive_limit 至少为 1: {self.exhaustive_limit}")
        if self.elbow_tolerance < 0:
            raise ConfigError(f"elbow_tolerance 不能为负: {self.elbow_tolerance}")
        overlap = set(self.required_vars) & set(self.excluded_vars)
        if overlap:
            raise ConfigError(f"变量同时被要求入选和排除: {sorted(overlap)}")
        # 冻结数据类中规范化为元组
        object.__setattr__(self, 'required_vars', tuple(self.required_vars))
        object.__setattr__(self, 'excluded_vars', tuple(self.excluded_vars))

    def to_dict(self) -> Dict:
        """导出为可写入 JSON 的字典"""
        data = asdict(self)
        data['required_vars'] = list(self.required_vars)
        data['excluded_vars'] = list(self.excluded_vars)
        return data
