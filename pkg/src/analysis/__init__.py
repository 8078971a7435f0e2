"""分析模块：指数核目标函数与加权最小二乘"""

from .kernel import WeightRow, weight_row, integrated_objective, per_focal_objective
from .wls import WlsEngine, WlsSolution, FocalGram, LocalFit

__all__ = [
    'WeightRow',
    'weight_row',
    'integrated_objective',
    'per_focal_objective',
    'WlsEngine',
    'WlsSolution',
    'FocalGram',
    'LocalFit',
]
