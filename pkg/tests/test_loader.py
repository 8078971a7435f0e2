# tests/test_loader.py
"""
数据加载测试
"""

import sys
from unittest.mock import MagicMock, patch

import numpy as np
import pytest

from src.core.exceptions import ConfigError, EmptyFileError, MissingColumnError, UnparseableCellError
from src.data.loader import GEORGIA_IVS, load_csv, load_external_baselines, load_georgia


class TestLoadCSV:
    """测试 CSV 读取"""

    def test_round_trip(self, sample_csv, sample_dataset):
        """测试写出后读回数值完全一致"""
        ds = load_csv(sample_csv, 'y', 'all', ['X', 'Y'])
        assert ds.var_names == sample_dataset.var_names
        np.testing.assert_array_equal(ds.y, sample_dataset.y)
        np.testing.assert_array_equal(ds.X, sample_dataset.X)
        np.testing.assert_array_equal(ds.coords, sample_dataset.coords)

    def test_selected_columns(self, sample_csv):
        """测试只读取指定自变量"""
        ds = load_csv(sample_csv, 'y', ['x3', 'x1'], ['X', 'Y'])
        assert ds.var_names == ('Intercept', 'x3', 'x1')

    def test_missing_column(self, sample_csv):
        """测试缺少列"""
        with pytest.raises(MissingColumnError) as info:
            load_csv(sample_csv, 'y', ['x1', 'income'], ['X', 'Y'])
        assert info.value.column == 'income'

    def test_unparseable_cell(self, tmp_path):
        """测试无法解析的单元格给出行号和列名"""
        path = tmp_path / 'bad.csv'
        path.write_text('y,x1,X,Y\n1.0,2.0,0,0\n2.0,N/A,1,0\n3.5,1.0,0,1\n', encoding='utf-8')
        with pytest.raises(UnparseableCellError) as info:
            load_csv(str(path), 'y', 'all', ['X', 'Y'])
        assert info.value.row == 2
        assert info.value.column == 'x1'

    def test_empty_file(self, tmp_path):
        """测试空文件"""
        path = tmp_path / 'empty.csv'
        path.write_text('', encoding='utf-8')
        with pytest.raises(EmptyFileError):
            load_csv(str(path), 'y', 'all', ['X', 'Y'])

    def test_header_only(self, tmp_path):
        """测试只有表头"""
        path = tmp_path / 'header.csv'
        path.write_text('y,x1,X,Y\n', encoding='utf-8')
        with pytest.raises(EmptyFileError):
            load_csv(str(path), 'y', 'all', ['X', 'Y'])

    def test_coordinate_count(self, sample_csv):
        """测试坐标列不是两列"""
        with pytest.raises(ConfigError):
            load_csv(sample_csv, 'y', 'all', ['X'])

    def test_focal_file(self, tmp_path, sample_csv):
        """测试单独的焦点坐标文件"""
        focal = tmp_path / 'focal.csv'
        focal.write_text('X,Y\n1.0,1.0\n2.0,3.0\n', encoding='utf-8')
        ds = load_csv(sample_csv, 'y', 'all', ['X', 'Y'], focal_path=str(focal))
        assert ds.c == 2
        assert not ds.all_focal_matched


class TestGeorgia:
    """测试 Georgia 数据加载"""

    def test_load_georgia_with_mocked_libpysal(self, tmp_path):
        """测试通过 libpysal 路径读取"""
        rng = np.random.RandomState(42)
        columns = ['AreaKey', 'PctBach'] + list(GEORGIA_IVS) + ['X', 'Y']
        lines = [','.join(columns)]
        for i in range(6):
            values = [str(13000 + i)] + [format(float(v), '.17g') for v in rng.uniform(1, 50, size=len(columns) - 1)]
            lines.append(','.join(values))
        path = tmp_path / 'GData_utm.csv'
        path.write_text('\n'.join(lines) + '\n', encoding='utf-8')

        fake = MagicMock()
        fake.examples.get_path.return_value = str(path)
        with patch.dict(sys.modules, {'libpysal': fake}):
            ds = load_georgia()
        fake.examples.get_path.assert_called_once_with('GData_utm.csv')
        assert ds.var_names[1:] == GEORGIA_IVS
        assert ds.n == 6


class TestExternalBaselines:
    """测试外部方法系数表"""

    def test_pivot(self, tmp_path):
        """测试按方法拆分并透视，缺失系数补 0"""
        path = tmp_path / 'external.csv'
        path.write_text(
            'method,focal_id,var,beta\n'
            'MGWR,0,Intercept,1.0\nMGWR,0,x1,2.0\nMGWR,1,Intercept,1.5\n'
            'GWL,1,x1,0.5\nGWL,0,x1,0.25\n',
            encoding='utf-8')
        tables = load_external_baselines(str(path))
        assert sorted(tables) == ['GWL', 'MGWR']
        mgwr = tables['MGWR']
        assert list(mgwr.index) == [0, 1]
        assert mgwr.loc[1, 'x1'] == 0.0
        assert list(tables['GWL']['x1']) == [0.25, 0.5]

    def test_missing_column(self, tmp_path):
        """测试缺少 beta 列"""
        path = tmp_path / 'external.csv'
        path.write_text('method,focal_id,var\nMGWR,0,x1\n', encoding='utf-8')
        with pytest.raises(MissingColumnError):
            load_external_baselines(str(path))
