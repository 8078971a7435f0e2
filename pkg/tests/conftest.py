# tests/conftest.py
"""
pytest配置文件
提供测试用的fixtures和共享资源
"""

# 必须在所有其他导入之前设置路径
import sys
import os

# 确保项目根目录在 Python 路径中（必须最先执行）
_project_root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
if _project_root not in sys.path:
    sys.path.insert(0, _project_root)

import pytest
import numpy as np

from src.core.dataset import build_distance_matrix, validate_dataset
from src.core.models import SpatialDataset


def make_dataset(n=30, m_free=4, noise=0.1, seed=42, spatial=True):
    """
    生成样本空间数据集

    y = 1 + 2·x1 + β2(u)·x2 + 噪声，β2 随横坐标变化；其余变量为噪声变量。
    """
    rng = np.random.RandomState(seed)
    coords = rng.uniform(0, 10, size=(n, 2))
    X = rng.normal(size=(n, m_free))
    slope = 0.5 + 0.2 * coords[:, 0] if spatial else np.full(n, 1.5)
    y = 1.0 + 2.0 * X[:, 0] + slope * X[:, 1] + noise * rng.normal(size=n)
    names = [f"x{j + 1}" for j in range(m_free)]
    return validate_dataset(SpatialDataset.from_arrays(y, X, coords, var_names=names))


@pytest.fixture
def sample_dataset():
    """30 个观测、4 个自变量的样本数据集"""
    return make_dataset()


@pytest.fixture
def sample_distance(sample_dataset):
    """样本数据集的距离矩阵"""
    return build_distance_matrix(sample_dataset)


@pytest.fixture
def tiny_dataset():
    """12 个观测、3 个自变量（快速测试用）"""
    return make_dataset(n=12, m_free=3, seed=7)


@pytest.fixture
def perfect_dataset():
    """y 恰好是 1 + 2·x1 - x3 的无噪声数据集"""
    rng = np.random.RandomState(42)
    n = 20
    coords = rng.uniform(0, 5, size=(n, 2))
    X = rng.normal(size=(n, 3))
    y = 1.0 + 2.0 * X[:, 0] - 1.0 * X[:, 2]
    return validate_dataset(SpatialDataset.from_arrays(y, X, coords, var_names=['a', 'b', 'c']))


@pytest.fixture
def sample_csv(tmp_path, sample_dataset):
    """把样本数据集写成 CSV，返回路径"""
    from src.data.loader import save_csv
    path = tmp_path / 'sample.csv'
    save_csv(sample_dataset, str(path), y_col='y', coord_cols=('X', 'Y'))
    return str(path)
