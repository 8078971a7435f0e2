"""基准与评价模块：基础 GWR、前向选择与拟合指标"""

from .analyzer import FitAnalyzer
from .baselines import BaselineEstimator, BaselineFit, ForwardSelectionResult, golden_section

__all__ = ['FitAnalyzer', 'BaselineEstimator', 'BaselineFit', 'ForwardSelectionResult', 'golden_section']
