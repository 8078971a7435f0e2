# utils.py
"""
工具函数模块
提供日志、数字格式化等通用辅助函数
日期：2026.1.5
"""

import logging
import math
import sys
from typing import Iterable, Optional, Sequence

import pandas as pd


class TagFormatter(logging.Formatter):
    """按 [成功]/[警告]/[错误] 风格输出日志"""

    TAGS = {
        logging.DEBUG: '调试',
        logging.INFO: '信息',
        logging.WARNING: '警告',
        logging.ERROR: '错误',
        logging.CRITICAL: '错误',
    }

    def format(self, record: logging.LogRecord) -> str:
        tag = getattr(record, 'tag', None) or self.TAGS.get(record.levelno, record.levelname)
        return f"[{tag}] {record.getMessage()}"


_ROOT_NAME = 'src'


def get_logger(name: str) -> logging.Logger:
    """
    获取模块日志器

    所有模块共享名为 src 的根日志器，首次调用时挂载控制台输出。

    Args:
        name: 模块名，一般传 __name__

    Returns:
        logging.Logger: 日志器
    """
    root = logging.getLogger(_ROOT_NAME)
    if not root.handlers:
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(TagFormatter())
        root.addHandler(handler)
        root.setLevel(logging.WARNING)
        root.propagate = False
    if name == _ROOT_NAME or name.startswith(_ROOT_NAME + '.'):
        return logging.getLogger(name)
    return logging.getLogger(f"{_ROOT_NAME}.{name}")


def set_log_level(level: int):
    """设置全局日志级别（命令行 --verbose / --quiet 使用）"""
    get_logger(_ROOT_NAME).setLevel(level)


def log_success(logger: logging.Logger, message: str):
    """输出 [成功] 标签的信息"""
    logger.info(message, extra={'tag': '成功'})


def format_number(num: Optional[float], decimals: int = 3) -> str:
    """
    格式化数字显示

    Args:
        num: 数字，None 或 NaN 显示为 N/A
        decimals: 小数位数

    Returns:
        str: 格式化后的字符串
    """
    if num is None or pd.isna(num):
        return 'N/A'
    if math.isinf(num):
        return 'inf' if num > 0 else '-inf'
    if abs(num) >= 1e5:
        return f"{num:.{decimals}e}"
    return f"{num:.{decimals}f}"


def parse_name_list(text: Optional[str]) -> Sequence[str]:
    """把逗号分隔的变量名列表拆成元组，空值返回空元组"""
    if text is None:
        return ()
    return tuple(part.strip() for part in str(text).split(',') if part.strip())


def subset_label(names: Iterable[str]) -> str:
    """把变量名列表拼成报告中使用的子集标签"""
    return '+'.join(names)
