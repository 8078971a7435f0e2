"""子集选择模块：带宽固定时的最优子集求解"""

from .subset_solver import SubsetSolver, SubsetSolution, SubsetSearchNode, enumerate_feasible_masks

__all__ = ['SubsetSolver', 'SubsetSolution', 'SubsetSearchNode', 'enumerate_feasible_masks']
