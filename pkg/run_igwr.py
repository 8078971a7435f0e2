# run_igwr.py
"""
IGWR 命令行启动脚本
用法示例：
    python run_igwr.py fit --georgia --p 4 --mode global --out output
    python run_igwr.py sweep --data data.csv --y y --x all --coords X,Y
    python run_igwr.py bench --georgia --p 4 --criterion aicc
"""

import sys

from src.cli import main

if __name__ == '__main__':
    sys.exit(main())
