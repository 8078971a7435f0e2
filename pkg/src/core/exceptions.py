# exceptions.py
"""
异常模块
功能：统一定义输入错误、数值错误与指标未定义错误
"""

from typing import Optional


class IGWRError(Exception):
    """所有错误的基类"""


class InputError(IGWRError):
    """输入数据或配置错误（命令行退出码 2）"""
    exit_code = 2


class NumericalError(IGWRError):
    """数值计算失败（命令行退出码 3）"""
    exit_code = 3


class UndefinedMetricError(IGWRError):
    """指标在数学上未定义（如均值为 0 的比值）"""


# ---------------- 输入类错误 ----------------

class NonFiniteError(InputError):
    """数据中存在 NaN 或 inf"""


class ShapeMismatchError(InputError):
    """数组维度不一致"""


class ConstantResponseError(InputError):
    """因变量方差为 0，R² 未定义"""


class DegenerateGeometryError(InputError):
    """所有距离均为 0"""


class NegativeBandwidthError(InputError):
    """带宽参数为负"""


class InfeasibleCardinalityError(InputError):
    """在给定约束下不存在满足 Σz = p 的子集"""


class ConfigError(InputError):
    """配置参数非法"""


class MissingColumnError(InputError):
    """CSV 中缺少指定列"""

    def __init__(self, column: str):
        super().__init__(f"缺少列: {column}")
        self.column = column


class UnparseableCellError(InputError):
    """CSV 单元格无法解析为数值"""

    def __init__(self, row: int, column: str, value: str = ''):
        super().__init__(f"无法解析的单元格: 行 {row}, 列 {column}, 值 {value!r}")
        self.row = row
        self.column = column
        self.value = value


class EmptyFileError(InputError):
    """CSV 文件为空"""


class IoFailureError(InputError):
    """读写文件失败"""


# ---------------- 数值类错误 ----------------

class SingularNormalMatrixError(NumericalError):
    """加权法方程矩阵奇异（抖动回退后仍失败）"""

    def __init__(self, message: str, focal_index: Optional[int] = None):
        super().__init__(message)
        self.focal_index = focal_index


class NonFiniteResidualError(NumericalError):
    """带宽子问题收到非有限残差"""


class NonMonotoneObjectiveError(NumericalError):
    """交替迭代中目标函数上升，说明子问题求解有误"""

    def __init__(self, iteration: int, step: str, previous: float, current: float):
        super().__init__(
            f"目标函数上升: 第{iteration}轮 {step} 步, {previous!r} -> {current!r}"
        )
        self.iteration = iteration
        self.step = step
        self.previous = previous
        self.current = current


class SearchBracketFailureError(NumericalError):
    """带宽搜索区间内准则不是单峰"""


# ---------------- 指标类错误 ----------------

class ZeroMeanError(UndefinedMetricError):
    """系数均值接近 0，极差均值比未定义"""
