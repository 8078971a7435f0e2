"""
IGWR 空间回归工具包

交替求解变量子集与带宽的地理加权回归，包含基础 GWR、前向选择等基准方法与评价指标。
"""

__version__ = "1.0.0"
