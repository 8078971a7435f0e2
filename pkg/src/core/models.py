# models.py
"""
领域类型模块
功能：定义空间数据集、距离矩阵、变量子集、系数场、带宽场与拟合报告

索引约定：X 的第 0 列在启用截距时恒为截距；子集基数 p 只统计非截距列。
"""

from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, FrozenSet, Iterable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from src.core.exceptions import (
    ConfigError,
    InfeasibleCardinalityError,
    NegativeBandwidthError,
    NonFiniteError,
    ShapeMismatchError,
)


def _frozen_array(values, ndim: int, name: str) -> np.ndarray:
    """转换为只读 float 数组并检查维数"""
    arr = np.array(values, dtype=float, copy=True)
    if arr.ndim != ndim:
        raise ShapeMismatchError(f"{name} 维数应为 {ndim}，实际为 {arr.ndim}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class SpatialDataset:
    """
    空间数据集：观测值、设计矩阵、坐标与焦点坐标

    Attributes:
        y: n 个因变量观测
        X: n×m 设计矩阵（启用截距时第 0 列全为 1）
        coords: n×2 观测点平面坐标
        focal_coords: c×2 焦点平面坐标
        var_names: m 个列名
        intercept: 是否含截距列
        warnings: 校验阶段产生的提示
    """
    y: np.ndarray
    X: np.ndarray
    coords: np.ndarray
    focal_coords: np.ndarray
    var_names: Tuple[str, ...]
    intercept: bool = True
    warnings: Tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, 'y', _frozen_array(self.y, 1, 'y'))
        object.__setattr__(self, 'X', _frozen_array(self.X, 2, 'X'))
        object.__setattr__(self, 'coords', _frozen_array(self.coords, 2, 'coords'))
        object.__setattr__(self, 'focal_coords', _frozen_array(self.focal_coords, 2, 'focal_coords'))
        object.__setattr__(self, 'var_names', tuple(str(v) for v in self.var_names))
        object.__setattr__(self, 'warnings', tuple(self.warnings))

    @classmethod
    def from_arrays(cls, y, X, coords, var_names: Optional[Sequence[str]] = None,
                    focal_coords=None, add_intercept: bool = True) -> 'SpatialDataset':
        """
        由原始数组构造数据集

        Args:
            y: 因变量
            X: 不含截距的自变量矩阵
            coords: 观测坐标
            var_names: 自变量名，默认 x1..xk
            focal_coords: 焦点坐标，默认与观测点相同
            add_intercept: 是否在最前面加截距列
        """
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        names = list(var_names) if var_names is not None else [f"x{j + 1}" for j in range(X.shape[1])]
        if add_intercept:
            X = np.column_stack([np.ones(X.shape[0]), X])
            names = ['Intercept'] + names
        coords = np.asarray(coords, dtype=float)
        focal = coords if focal_coords is None else np.asarray(focal_coords, dtype=float)
        return cls(y=np.asarray(y, dtype=float).ravel(), X=X, coords=coords,
                   focal_coords=focal, var_names=tuple(names), intercept=add_intercept)

    @property
    def n(self) -> int:
        return int(self.y.shape[0])

    @property
    def m(self) -> int:
        return int(self.X.shape[1])

    @property
    def c(self) -> int:
        return int(self.focal_coords.shape[0])

    @property
    def free_indices(self) -> Tuple[int, ...]:
        """非截距列的索引"""
        start = 1 if self.intercept else 0
        return tuple(range(start, self.m))

    @property
    def m_free(self) -> int:
        return len(self.free_indices)

    @cached_property
    def focal_match(self) -> np.ndarray:
        """每个焦点对应的观测下标（坐标完全相同的第一个观测），无对应时为 -1"""
        if self.c == self.n and np.array_equal(self.coords, self.focal_coords):
            match = np.arange(self.n)
        else:
            lookup: Dict[Tuple[float, float], int] = {}
            for i, (u, v) in enumerate(self.coords):
                lookup.setdefault((float(u), float(v)), i)
            match = np.array([lookup.get((float(u), float(v)), -1) for u, v in self.focal_coords],
                             dtype=int)
        match.setflags(write=False)
        return match

    @property
    def all_focal_matched(self) -> bool:
        return bool(np.all(self.focal_match >= 0))

    @cached_property
    def X_focal(self) -> np.ndarray:
        """焦点处的设计行，未匹配的焦点为 NaN"""
        rows = np.full((self.c, self.m), np.nan)
        matched = self.focal_match >= 0
        rows[matched] = self.X[self.focal_match[matched]]
        rows.setflags(write=False)
        return rows

    def column_index(self, name: str) -> int:
        """按列名取列下标"""
        try:
            return self.var_names.index(name)
        except ValueError:
            raise ConfigError(f"未知变量: {name}") from None

    def names_of(self, columns: Iterable[int]) -> List[str]:
        return [self.var_names[j] for j in columns]

    def replace(self, **changes) -> 'SpatialDataset':
        """返回替换部分字段后的新数据集"""
        fields = dict(y=self.y, X=self.X, coords=self.coords, focal_coords=self.focal_coords,
                      var_names=self.var_names, intercept=self.intercept, warnings=self.warnings)
        fields.update(changes)
        return SpatialDataset(**fields)


@dataclass(frozen=True)
class DistanceMatrix:
    """
    焦点到观测点的缩放距离矩阵

    Attributes:
        d: c×n 距离，已除以全局最大值，落在 [0, 1]
        d_raw_max: 缩放前的最大距离（原始单位）
        squared_row_sums: S_o = Σ_i d_oi²
    """
    d: np.ndarray
    d_raw_max: float
    squared_row_sums: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, 'd', _frozen_array(self.d, 2, 'd'))
        object.__setattr__(self, 'squared_row_sums',
                           _frozen_array(self.squared_row_sums, 1, 'squared_row_sums'))

    @property
    def c(self) -> int:
        return int(self.d.shape[0])

    @property
    def n(self) -> int:
        return int(self.d.shape[1])

    @cached_property
    def d2(self) -> np.ndarray:
        """平方距离 d_oi²"""
        out = self.d ** 2
        out.setflags(write=False)
        return out


def _normalize_pairs(pairs: Iterable[Tuple[int, int]]) -> FrozenSet[Tuple[int, int]]:
    """无序变量对统一存成 (小, 大)"""
    return frozenset((min(j, k), max(j, k)) for j, k in pairs if j != k)


@dataclass(frozen=True)
class SubsetMask:
    """
    变量子集 z

    Attributes:
        z: m 个布尔值
        p: 非截距变量个数
        forbidden_pairs: 不能同时入选的列对
        intercept_locked: 截距（第 0 列）是否恒入选且不计入 p
    """
    z: Tuple[bool, ...]
    p: int
    forbidden_pairs: FrozenSet[Tuple[int, int]] = frozenset()
    intercept_locked: bool = True

    def __post_init__(self):
        z = tuple(bool(v) for v in self.z)
        object.__setattr__(self, 'z', z)
        object.__setattr__(self, 'forbidden_pairs', _normalize_pairs(self.forbidden_pairs))
        if self.intercept_locked and not z[0]:
            raise ConfigError("截距锁定时第 0 列必须入选")
        if len(self.free_columns) != self.p:
            raise InfeasibleCardinalityError(
                f"子集基数 {len(self.free_columns)} 与 p={self.p} 不一致")
        for j, k in self.forbidden_pairs:
            if z[j] and z[k]:
                raise ConfigError(f"高相关变量对 ({j}, {k}) 同时入选")

    @classmethod
    def from_columns(cls, m: int, columns: Iterable[int],
                     forbidden_pairs: Iterable[Tuple[int, int]] = (),
                     intercept_locked: bool = True) -> 'SubsetMask':
        """由非截距列下标构造子集"""
        z = [False] * m
        if intercept_locked:
            z[0] = True
        free = sorted(set(columns) - ({0} if intercept_locked else set()))
        for j in free:
            z[j] = True
        return cls(z=tuple(z), p=len(free), forbidden_pairs=frozenset(forbidden_pairs),
                   intercept_locked=intercept_locked)

    @classmethod
    def full(cls, m: int, intercept_locked: bool = True) -> 'SubsetMask':
        return cls.from_columns(m, range(m), intercept_locked=intercept_locked)

    @property
    def m(self) -> int:
        return len(self.z)

    @property
    def columns(self) -> Tuple[int, ...]:
        """入选列（含截距）"""
        return tuple(j for j, v in enumerate(self.z) if v)

    @property
    def free_columns(self) -> Tuple[int, ...]:
        """入选的非截距列"""
        start = 1 if self.intercept_locked else 0
        return tuple(j for j in range(start, len(self.z)) if self.z[j])

    @property
    def index_sum(self) -> int:
        return int(sum(self.free_columns))

    @property
    def tie_key(self) -> Tuple[int, Tuple[int, ...]]:
        """并列时的优先键：下标和最小者优先，再按字典序"""
        return self.index_sum, self.free_columns

    def as_array(self) -> np.ndarray:
        return np.array(self.z, dtype=bool)

    def names(self, var_names: Sequence[str], include_intercept: bool = False) -> List[str]:
        cols = self.columns if include_intercept else self.free_columns
        return [var_names[j] for j in cols]


@dataclass(frozen=True)
class CoefficientField:
    """各焦点的局部回归系数 β_oj（未入选列为 0）"""
    beta: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, 'beta', _frozen_array(self.beta, 2, 'beta'))

    @property
    def c(self) -> int:
        return int(self.beta.shape[0])

    @property
    def m(self) -> int:
        return int(self.beta.shape[1])

    def column(self, j: int) -> np.ndarray:
        return self.beta[:, j]

    def respects(self, mask: SubsetMask) -> bool:
        """未入选列是否严格为 0"""
        off = ~mask.as_array()
        return bool(np.all(self.beta[:, off] == 0.0))

    def local_subsets(self, skip_columns: Iterable[int] = ()) -> List[FrozenSet[int]]:
        """每个焦点的非零系数列集合"""
        skip = set(skip_columns)
        keep = [j for j in range(self.m) if j not in skip]
        return [frozenset(j for j in keep if row[j] != 0.0) for row in self.beta]

    def predict(self, X_rows: np.ndarray) -> np.ndarray:
        """逐焦点预测 x_o·β_o"""
        return np.einsum('oj,oj->o', np.asarray(X_rows, dtype=float), self.beta)


@dataclass(frozen=True)
class BandwidthField:
    """
    带宽场

    Attributes:
        mode: 'global'（共享一个 γ）或 'local'（每个焦点一个 γ_o）
        gamma: global 时长度为 1，local 时长度为 c
    """
    mode: str
    gamma: np.ndarray

    def __post_init__(self):
        if self.mode not in ('global', 'local'):
            raise ConfigError(f"未知的带宽模式: {self.mode}")
        gamma = _frozen_array(np.atleast_1d(self.gamma), 1, 'gamma')
        if self.mode == 'global' and gamma.shape[0] != 1:
            raise ShapeMismatchError("global 带宽只能有一个值")
        if not np.all(np.isfinite(gamma)):
            raise NonFiniteError("带宽中存在非有限值")
        if np.any(gamma < 0):
            raise NegativeBandwidthError(f"带宽不能为负: {float(gamma.min())}")
        object.__setattr__(self, 'gamma', gamma)

    @classmethod
    def global_(cls, value: float) -> 'BandwidthField':
        return cls(mode='global', gamma=np.array([float(value)]))

    @classmethod
    def local(cls, values) -> 'BandwidthField':
        return cls(mode='local', gamma=np.asarray(values, dtype=float))

    def per_focal(self, c: int) -> np.ndarray:
        """展开成 c 个值"""
        if self.mode == 'global':
            return np.full(c, float(self.gamma[0]))
        if self.gamma.shape[0] != c:
            raise ShapeMismatchError(f"local 带宽长度 {self.gamma.shape[0]} 与焦点数 {c} 不一致")
        return np.array(self.gamma)

    def summary(self) -> Dict[str, float]:
        g = self.gamma
        return {
            'mode': self.mode,
            'min': float(np.min(g)),
            'max': float(np.max(g)),
            'mean': float(np.mean(g)),
            'median': float(np.median(g)),
        }


class TraceEntry(NamedTuple):
    """目标函数轨迹的一条记录"""
    iteration: int
    step: str  # 'beta' 或 'gamma'
    objective: float


@dataclass(frozen=True)
class MetricsBlock:
    """拟合优度指标"""
    rss: float
    tss: float
    r2: float
    r2_adj: Optional[float]
    n: int
    n_params_nominal: int
    hat_trace: Optional[float] = None
    r2_adj_effective: Optional[float] = None
    aicc: Optional[float] = None

    def to_dict(self) -> Dict:
        return {
            'rss': self.rss, 'tss': self.tss, 'r2': self.r2, 'r2_adj': self.r2_adj,
            'r2_adj_effective': self.r2_adj_effective, 'aicc': self.aicc,
            'hat_trace': self.hat_trace, 'n': self.n, 'n_params_nominal': self.n_params_nominal,
        }


@dataclass(frozen=True)
class FitReport:
    """交替方向法拟合结果"""
    selected: SubsetMask
    beta: CoefficientField
    gamma: BandwidthField
    objective_trace: Tuple[TraceEntry, ...]
    objective: float
    metrics: MetricsBlock
    fitted: np.ndarray
    iterations: int
    converged: bool
    var_names: Tuple[str, ...]
    warnings: Tuple[str, ...] = ()
    config: Dict = field(default_factory=dict)

    @property
    def mode(self) -> str:
        return self.gamma.mode

    @property
    def p(self) -> int:
        return self.selected.p

    @property
    def rss(self) -> float:
        return self.metrics.rss

    @property
    def r2(self) -> float:
        return self.metrics.r2

    @property
    def r2_adj(self) -> float:
        return self.metrics.r2_adj

    @property
    def aicc(self) -> Optional[float]:
        return self.metrics.aicc

    @property
    def selected_names(self) -> List[str]:
        return self.selected.names(self.var_names)

    def objective_values(self) -> np.ndarray:
        return np.array([entry.objective for entry in self.objective_trace])
