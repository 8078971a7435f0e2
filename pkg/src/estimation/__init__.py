"""估计模块：带宽子问题与交替方向法"""

from .bandwidth import BandwidthSolver
from .igwr import IGWREstimator, SweepResult, recommend_p

__all__ = ['BandwidthSolver', 'IGWREstimator', 'SweepResult', 'recommend_p']
