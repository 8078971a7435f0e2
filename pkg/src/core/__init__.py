"""核心模块：配置、异常、领域类型和数据集处理"""

from .config import SolverConfig, SolverDefaults, BandwidthSearchConfig, OutputConfig
from .models import (
    SpatialDataset,
    DistanceMatrix,
    SubsetMask,
    CoefficientField,
    BandwidthField,
    TraceEntry,
    MetricsBlock,
    FitReport,
)
from .dataset import (
    validate_dataset,
    build_distance_matrix,
    build_forbidden_pairs,
    standardize_dataset,
)
from .utils import get_logger, format_number

__all__ = [
    'SolverConfig',
    'SolverDefaults',
    'BandwidthSearchConfig',
    'OutputConfig',
    'SpatialDataset',
    'DistanceMatrix',
    'SubsetMask',
    'CoefficientField',
    'BandwidthField',
    'TraceEntry',
    'MetricsBlock',
    'FitReport',
    'validate_dataset',
    'build_distance_matrix',
    'build_forbidden_pairs',
    'standardize_dataset',
    'get_logger',
    'format_number',
]
