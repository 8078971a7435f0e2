# loader.py
"""
数据加载模块
功能：从 CSV 读取空间数据集（可选单独的焦点坐标文件）、加载 Georgia 数据、
      把数据集写回 CSV、读取外部方法（MGWR/GWL）的系数表
日期：2026.1.5
"""

import os
from typing import Dict, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from src.core.config import OutputConfig
from src.core.dataset import validate_dataset
from src.core.exceptions import (
    ConfigError,
    EmptyFileError,
    IoFailureError,
    MissingColumnError,
    UnparseableCellError,
)
from src.core.models import SpatialDataset
from src.core.utils import get_logger, log_success

logger = get_logger(__name__)

GEORGIA_RESPONSE = 'PctBach'
GEORGIA_IVS = ('PctFB', 'TotPop90', 'PctRural', 'PctEld', 'PctBlack', 'PctPov')
GEORGIA_COORDS = ('X', 'Y')

EXTERNAL_COLUMNS = ('method', 'focal_id', 'var', 'beta')


def _read_table(path: str) -> pd.DataFrame:
    """按字符串读取 CSV，空文件或无数据行时报错"""
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True)
    except pd.errors.EmptyDataError:
        raise EmptyFileError(f"文件为空: {path}") from None
    except (OSError, UnicodeDecodeError) as exc:
        raise IoFailureError(f"读取失败: {path} ({exc})") from exc
    if frame.empty:
        raise EmptyFileError(f"文件没有数据行: {path}")
    frame.columns = [str(col).strip() for col in frame.columns]
    return frame


def _parse_float(text: str) -> float:
    """逐个单元格解析，保证 17 位有效数字读回不变；无法解析返回 NaN"""
    try:
        return float(text)
    except ValueError:
        return np.nan


def _numeric_column(frame: pd.DataFrame, column: str) -> np.ndarray:
    """
    把一列解析为浮点数

    Raises:
        MissingColumnError: 列不存在
        UnparseableCellError: 单元格无法解析（行号从 1 开始，不含表头）
    """
    if column not in frame.columns:
        raise MissingColumnError(column)
    raw = frame[column].astype(str).str.strip()
    values = raw.apply(_parse_float)
    bad = values.isna()
    if bad.any():
        position = int(np.flatnonzero(bad.to_numpy())[0])
        raise UnparseableCellError(position + 1, column, raw.iloc[position])
    return values.to_numpy(dtype=float)


def load_csv(path: str, y_col: str, x_cols: Union[str, Sequence[str]],
             coord_cols: Sequence[str], focal_path: Optional[str] = None,
             focal_coord_cols: Optional[Sequence[str]] = None) -> SpatialDataset:
    """
    从 CSV 读取空间数据集

    Args:
        path: 数据文件
        y_col: 因变量列
        x_cols: 自变量列表，或 'all' 表示除因变量和坐标外的全部列
        coord_cols: 两个平面坐标列
        focal_path: 可选的焦点坐标文件
        focal_coord_cols: 焦点文件中的坐标列，默认与 coord_cols 相同

    Returns:
        SpatialDataset: 已校验的数据集（第 0 列为截距）
    """
    if len(coord_cols) != 2:
        raise ConfigError(f"坐标列必须是两列: {list(coord_cols)}")
    frame = _read_table(path)
    if isinstance(x_cols, str):
        if x_cols == 'all':
            skip = {y_col, *coord_cols}
            x_cols = [col for col in frame.columns if col not in skip]
        else:
            x_cols = [x_cols]

    y = _numeric_column(frame, y_col)
    X = np.column_stack([_numeric_column(frame, col) for col in x_cols]) if x_cols else np.empty((len(frame), 0))
    coords = np.column_stack([_numeric_column(frame, col) for col in coord_cols])

    focal = None
    if focal_path:
        focal_frame = _read_table(focal_path)
        cols = list(focal_coord_cols or coord_cols)
        focal = np.column_stack([_numeric_column(focal_frame, col) for col in cols])

    ds = SpatialDataset.from_arrays(y, X, coords, var_names=list(x_cols), focal_coords=focal)
    ds = validate_dataset(ds)
    logger.info(f"读取 {os.path.basename(path)}: n={ds.n}, m={ds.m}, c={ds.c}")
    return ds


def load_georgia() -> SpatialDataset:
    """
    读取 libpysal 自带的 Georgia 县级数据（GData_utm.csv，159 个县）

    Returns:
        SpatialDataset: PctBach 为因变量，六个自变量，UTM 坐标 X/Y
    """
    try:
        import libpysal as ps
    except ImportError as exc:
        raise IoFailureError("需要安装 libpysal 才能加载 Georgia 数据") from exc
    try:
        path = ps.examples.get_path('GData_utm.csv')
    except Exception as exc:
        raise IoFailureError(f"找不到 Georgia 数据文件: {exc}") from exc
    return load_csv(path, GEORGIA_RESPONSE, list(GEORGIA_IVS), GEORGIA_COORDS)


def save_csv(ds: SpatialDataset, path: str, y_col: str = 'y',
             coord_cols: Tuple[str, str] = ('coord_x', 'coord_y')) -> str:
    """
    把数据集写成 load_csv 可读回的 CSV（17 位有效数字）

    Returns:
        str: 写入的路径
    """
    data = {y_col: ds.y}
    for j in ds.free_indices:
        data[ds.var_names[j]] = ds.X[:, j]
    data[coord_cols[0]] = ds.coords[:, 0]
    data[coord_cols[1]] = ds.coords[:, 1]
    try:
        pd.DataFrame(data).to_csv(path, index=False, float_format=OutputConfig.FLOAT_FORMAT)
    except OSError as exc:
        raise IoFailureError(f"写入失败: {path} ({exc})") from exc
    return path


def load_external_baselines(path: str) -> Dict[str, pd.DataFrame]:
    """
    读取外部方法的局部系数表（列: method, focal_id, var, beta）

    Returns:
        Dict[str, pd.DataFrame]: 方法名 -> 以 focal_id 为行、变量为列的系数表
    """
    frame = _read_table(path)
    for col in EXTERNAL_COLUMNS:
        if col not in frame.columns:
            raise MissingColumnError(col)
    focal_id = _numeric_column(frame, 'focal_id')
    beta = _numeric_column(frame, 'beta')
    table = pd.DataFrame({
        'method': frame['method'].str.strip(),
        'focal_id': focal_id.astype(int),
        'var': frame['var'].str.strip(),
        'beta': beta,
    })
    result = {}
    for method, group in table.groupby('method', sort=True):
        result[method] = group.pivot_table(index='focal_id', columns='var', values='beta',
                                           aggfunc="first").fillna(0.0).sort_index()
    log_success(logger, f"读取外部方法系数: {sorted(result)}")
    return result
