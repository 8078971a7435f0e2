# tests/test_cli.py
"""
命令行测试
"""

import json
import os

import pandas as pd
import pytest

from src.cli import build_parser, main
from src.core.config import OutputConfig


def _base_args(csv_path, out_dir):
    return ['--data', csv_path, '--y', 'y', '--coords', 'X,Y', '--out', out_dir, '--quiet']


class TestParser:
    """测试参数解析"""

    def test_defaults(self):
        """测试默认参数"""
        args = build_parser().parse_args(['fit', '--georgia', '--p', '4'])
        assert args.mode == 'global'
        assert args.x == 'all'
        assert args.rho == 0.9
        assert args.subset_strategy == 'auto'

    def test_p_required(self):
        """测试 fit 必须给出 --p"""
        with pytest.raises(SystemExit):
            build_parser().parse_args(['fit', '--georgia'])


class TestCommands:
    """测试子命令"""

    def test_fit(self, sample_csv, tmp_path, capsys):
        """测试 fit 写出报告"""
        out = str(tmp_path / 'fit')
        code = main(['fit', '--p', '2'] + _base_args(sample_csv, out))
        assert code == 0
        with open(os.path.join(out, OutputConfig.REPORT_FILE), encoding='utf-8') as fh:
            payload = json.load(fh)
        assert payload['selected'] == ['x1', 'x2']
        assert 'x1+x2' in capsys.readouterr().out

    def test_sweep(self, sample_csv, tmp_path):
        """测试 sweep 写出 rss_vs_p.csv 与推荐 p 的报告"""
        out = str(tmp_path / 'sweep')
        code = main(['sweep', '--p-min', '1', '--p-max', '3'] + _base_args(sample_csv, out))
        assert code == 0
        frame = pd.read_csv(os.path.join(out, OutputConfig.SWEEP_FILE))
        assert frame['p'].tolist() == [1, 2, 3]
        assert frame['recommended'].sum() == 1
        assert os.path.exists(os.path.join(out, OutputConfig.REPORT_FILE))

    @pytest.mark.slow
    def test_bench(self, sample_csv, tmp_path):
        """测试 bench 写出对比表"""
        out = str(tmp_path / 'bench')
        code = main(['bench', '--p', '2'] + _base_args(sample_csv, out))
        assert code == 0
        table = pd.read_csv(os.path.join(out, OutputConfig.COMPARISON_FILE))
        assert table['method'].tolist() == ['IGWR-G', 'IGWR-L', 'FS', 'BGWR', 'OLS']
        assert 'range_to_mean_x1' in table.columns
        assert (table.loc[table['method'] != 'BGWR', 'avg_symmetric_difference'] == 0).all()

    def test_missing_column_exit_code(self, sample_csv, tmp_path):
        """测试输入错误返回 2"""
        out = str(tmp_path / 'bad')
        args = ['fit', '--p', '1', '--x', 'x1,income'] + _base_args(sample_csv, out)
        assert main(args) == 2

    def test_gamma_init_local_exit_code(self, sample_csv, tmp_path):
        """测试 local 模式指定初始全局带宽返回 2"""
        out = str(tmp_path / 'bad')
        args = ['fit', '--p', '1', '--mode', 'local', '--gamma-init', '1.0'] + _base_args(sample_csv, out)
        assert main(args) == 2

    def test_infeasible_p_exit_code(self, sample_csv, tmp_path):
        """测试 p 超出可选变量个数返回 2"""
        out = str(tmp_path / 'bad')
        assert main(['fit', '--p', '9'] + _base_args(sample_csv, out)) == 2

    def test_missing_data_argument(self, tmp_path):
        """测试未给出数据来源"""
        assert main(['fit', '--p', '1', '--out', str(tmp_path), '--quiet']) == 2
