# report.py
"""
结果输出模块
功能：把拟合报告写成 report.json / coefficients.csv / bandwidths.csv，
      以及 p 扫描表 rss_vs_p.csv 和方法对比表 comparison.csv
"""

import json
import os
from datetime import datetime
from typing import Dict, List, Optional

import numpy as np
import pandas as pd

from src.benchmark.analyzer import FitAnalyzer
from src.core.config import OutputConfig
from src.core.exceptions import IoFailureError
from src.core.models import FitReport, SpatialDataset
from src.core.utils import get_logger, log_success, subset_label

logger = get_logger(__name__)


def _clean(value):
    """把 numpy 标量、NaN 转成 JSON 可写的值"""
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and not np.isfinite(value):
        return None
    return value


class ReportWriter:
    """拟合结果写出器"""

    def __init__(self, out_dir: str):
        """
        Args:
            out_dir: 输出目录，不存在时创建
        """
        self.out_dir = out_dir
        try:
            os.makedirs(out_dir, exist_ok=True)
        except OSError as exc:
            raise IoFailureError(f"无法创建输出目录: {out_dir} ({exc})") from exc

    def _path(self, name: str) -> str:
        return os.path.join(self.out_dir, name)

    def _write_csv(self, frame: pd.DataFrame, name: str) -> str:
        path = self._path(name)
        try:
            frame.to_csv(path, index=False, float_format=OutputConfig.FLOAT_FORMAT)
        except OSError as exc:
            raise IoFailureError(f"写入失败: {path} ({exc})") from exc
        return path

    def _write_json(self, payload: Dict, name: str) -> str:
        path = self._path(name)
        try:
            with open(path, 'w', encoding='utf-8') as fh:
                json.dump(_clean(payload), fh, sort_keys=True, indent=2, ensure_ascii=False)
                fh.write('\n')
        except OSError as exc:
            raise IoFailureError(f"写入失败: {path} ({exc})") from exc
        return path

    @staticmethod
    def report_payload(report: FitReport, ds: SpatialDataset) -> Dict:
        """
        report.json 的内容

        Returns:
            Dict: 配置回显、入选子集、带宽与系数摘要、指标及完整目标函数轨迹
        """
        return {
            'schema': OutputConfig.SCHEMA,
            'timestamp': datetime.now().isoformat(timespec='seconds'),
            'config': report.config,
            'mode': report.mode,
            'p': report.p,
            'n': ds.n,
            'c': ds.c,
            'selected': report.selected_names,
            'selected_columns': list(report.selected.free_columns),
            'gamma': report.gamma.summary(),
            'metrics': report.metrics.to_dict(),
            'coefficient_summary': FitAnalyzer().coefficient_summary(
                report.beta, ds.var_names, report.selected.columns).reset_index().to_dict(orient='records'),
            'objective': report.objective,
            'iterations': report.iterations,
            'converged': report.converged,
            'objective_trace': [
                {'iteration': entry.iteration, 'step': entry.step, 'objective': entry.objective}
                for entry in report.objective_trace
            ],
            'warnings': list(report.warnings),
        }

    @staticmethod
    def coefficient_frame(report: FitReport, ds: SpatialDataset) -> pd.DataFrame:
        """每个焦点一行：focal_id, x, y, 截距与各入选变量的系数"""
        frame = pd.DataFrame({
            'focal_id': np.arange(ds.c),
            'x': ds.focal_coords[:, 0],
            'y': ds.focal_coords[:, 1],
        })
        for j in report.selected.columns:
            frame[ds.var_names[j]] = report.beta.column(j)
        return frame

    @staticmethod
    def bandwidth_frame(report: FitReport, ds: SpatialDataset) -> pd.DataFrame:
        return pd.DataFrame({
            'focal_id': np.arange(ds.c),
            'x': ds.focal_coords[:, 0],
            'y': ds.focal_coords[:, 1],
            'gamma': report.gamma.per_focal(ds.c),
        })

    def emit_report(self, report: FitReport, ds: SpatialDataset) -> List[str]:
        """
        写出单次拟合的全部文件

        Returns:
            List[str]: 写出的文件路径
        """
        paths = [
            self._write_json(self.report_payload(report, ds), OutputConfig.REPORT_FILE),
            self._write_csv(self.coefficient_frame(report, ds), OutputConfig.COEFFICIENTS_FILE),
            self._write_csv(self.bandwidth_frame(report, ds), OutputConfig.BANDWIDTHS_FILE),
        ]
        log_success(logger, f"结果已写入 {self.out_dir}")
        return paths

    def emit_sweep(self, reports, recommended_p: int) -> str:
        """
        写出 rss_vs_p.csv

        Args:
            reports: 各 p 的 FitReport
            recommended_p: 推荐的 p
        """
        rows = []
        for r in reports:
            rows.append({
                'p': r.p,
                'rss': r.rss,
                'r2': r.r2,
                'r2_adj': r.r2_adj,
                'aicc': r.aicc,
                'objective': r.objective,
                'iterations': r.iterations,
                'converged': r.converged,
                'selected': subset_label(r.selected_names),
                'recommended': r.p == recommended_p,
            })
        return self._write_csv(pd.DataFrame(rows), OutputConfig.SWEEP_FILE)

    def emit_comparison(self, table: pd.DataFrame) -> str:
        """写出 comparison.csv"""
        return self._write_csv(table, OutputConfig.COMPARISON_FILE)

    def emit_summary(self, payload: Dict, name: Optional[str] = None) -> str:
        """写出任意 JSON 摘要（默认写 report.json）"""
        data = dict(payload)
        data.setdefault('schema', OutputConfig.SCHEMA)
        data.setdefault('timestamp', datetime.now().isoformat(timespec='seconds'))
        return self._write_json(data, name or OutputConfig.REPORT_FILE)
