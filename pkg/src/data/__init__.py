"""数据读写：CSV 数据集、Georgia 数据、外部方法系数与结果文件"""

from src.data.loader import load_csv, load_external_baselines, load_georgia, save_csv
from src.data.report import ReportWriter

__all__ = ['load_csv', 'load_external_baselines', 'load_georgia', 'save_csv', 'ReportWriter']
