# cli.py
"""
命令行模块
功能：fit（单个 p）、sweep（p 扫描并推荐）、bench（IGWR-G/IGWR-L/FS/BGWR/OLS 对比）三个子命令
退出码：0 成功，2 输入错误，3 数值失败
"""

import argparse
import logging
import sys
from typing import Optional, Sequence

from src.benchmark.analyzer import FitAnalyzer
from src.benchmark.baselines import BaselineEstimator
from src.core.config import SolverConfig, SolverDefaults
from src.core.dataset import build_distance_matrix, standardize_dataset
from src.core.exceptions import IGWRError, InputError
from src.core.models import BandwidthField, SpatialDataset, SubsetMask
from src.core.utils import format_number, get_logger, parse_name_list, set_log_level, subset_label
from src.data.loader import load_csv, load_external_baselines, load_georgia
from src.data.report import ReportWriter
from src.estimation.igwr import IGWREstimator

logger = get_logger(__name__)


def build_parser() -> argparse.ArgumentParser:
    """构建命令行解析器"""
    parser = argparse.ArgumentParser(
        prog='igwr',
        description='同时估计变量子集与带宽的地理加权回归',
    )
    sub = parser.add_subparsers(dest='command', required=True)

    common = argparse.ArgumentParser(add_help=False)
    data = common.add_argument_group('数据')
    data.add_argument('--data', help='数据 CSV 文件')
    data.add_argument('--georgia', action='store_true', help='使用 libpysal 自带的 Georgia 数据')
    data.add_argument('--y', help='因变量列名')
    data.add_argument('--x', default='all', help='自变量列名（逗号分隔）或 all')
    data.add_argument('--coords', default='X,Y', help='两个坐标列名，逗号分隔')
    data.add_argument('--focal', help='焦点坐标 CSV 文件（列名同 --coords）')

    solver = common.add_argument_group('求解')
    solver.add_argument('--mode', choices=SolverDefaults.MODES, default='global', help='带宽模式')
    solver.add_argument('--rho', type=float, default=SolverDefaults.RHO, help='高相关阈值')
    solver.add_argument('--theta', type=float, default=SolverDefaults.THETA, help='相对间隙阈值')
    solver.add_argument('--max-iters', type=int, default=SolverDefaults.MAX_ADM_ITERS, help='交替迭代上限')
    solver.add_argument('--subset-strategy', choices=SolverDefaults.STRATEGIES,
                        default=SolverDefaults.SUBSET_STRATEGY, help='子集求解策略')
    solver.add_argument('--standardize-x', action='store_true', help='标准化自变量')
    solver.add_argument('--standardize-y', action='store_true', help='标准化因变量')
    solver.add_argument('--require', help='必须入选的变量（逗号分隔）')
    solver.add_argument('--exclude', help='排除的变量（逗号分隔）')
    solver.add_argument('--gamma-init', type=float, help='初始全局带宽（仅 global 模式）')

    output = common.add_argument_group('输出')
    output.add_argument('--out', default='output', help='输出目录')
    output.add_argument('--verbose', '-v', action='store_true', help='显示迭代信息')
    output.add_argument('--quiet', '-q', action='store_true', help='只显示错误')

    fit = sub.add_parser('fit', parents=[common], help='指定 p 拟合一次')
    fit.add_argument('--p', type=int, required=True, help='子集基数（不含截距）')

    sweep = sub.add_parser('sweep', parents=[common], help='扫描 p 并用肘部规则推荐')
    sweep.add_argument('--p-min', type=int, default=1, help='最小 p')
    sweep.add_argument('--p-max', type=int, help='最大 p，默认全部自变量')

    bench = sub.add_parser('bench', parents=[common], help='与基准方法对比')
    bench.add_argument('--p', type=int, required=True, help='IGWR 与 FS 使用的子集基数')
    bench.add_argument('--criterion', choices=('aicc', 'cv'), default='aicc', help='基准带宽准则')
    bench.add_argument('--baselines', help='外部方法系数 CSV（method, focal_id, var, beta）')
    return parser


def config_from_args(args: argparse.Namespace) -> SolverConfig:
    """命令行参数映射为 SolverConfig"""
    return SolverConfig(
        theta=args.theta,
        max_adm_iters=args.max_iters,
        rho=args.rho,
        subset_strategy=args.subset_strategy,
        standardize_x=args.standardize_x,
        standardize_y=args.standardize_y,
        required_vars=parse_name_list(args.require),
        excluded_vars=parse_name_list(args.exclude),
    )


def load_dataset(args: argparse.Namespace, config: SolverConfig) -> SpatialDataset:
    """按参数读取并（可选）标准化数据集"""
    if args.georgia:
        ds = load_georgia()
    else:
        if not args.data or not args.y:
            raise InputError("需要 --data 和 --y（或使用 --georgia）")
        x_cols = 'all' if args.x == 'all' else list(parse_name_list(args.x))
        coords = list(parse_name_list(args.coords))
        ds = load_csv(args.data, args.y, x_cols, coords, focal_path=args.focal)
    return standardize_dataset(ds, x=config.standardize_x, y=config.standardize_y)


def _gamma_init(args: argparse.Namespace) -> Optional[BandwidthField]:
    if args.gamma_init is None:
        return None
    if args.mode != 'global':
        raise InputError("--gamma-init 只能用于 global 模式")
    return BandwidthField.global_(args.gamma_init)


def _print_report(report, title: str):
    print(f"\n{title}")
    print("=" * 60)
    print(f"子集: {subset_label(report.selected_names)}")
    print(f"目标: {format_number(report.objective, 4)}  迭代: {report.iterations}  "
          f"收敛: {'是' if report.converged else '否'}")
    print(f"RSS: {format_number(report.rss)}  R²: {format_number(report.r2)}  "
          f"R²adj: {format_number(report.r2_adj)}  AICc: {format_number(report.aicc)}")


def cmd_fit(args: argparse.Namespace) -> int:
    config = config_from_args(args)
    ds = load_dataset(args, config)
    dm = build_distance_matrix(ds)
    estimator = IGWREstimator(config)
    report = estimator.igwr_fit(ds, dm, args.p, args.mode, gamma_init=_gamma_init(args))
    ReportWriter(args.out).emit_report(report, ds)
    _print_report(report, f"IGWR ({args.mode}) p={args.p}")
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    config = config_from_args(args)
    ds = load_dataset(args, config)
    dm = build_distance_matrix(ds)
    p_max = args.p_max if args.p_max is not None else ds.m_free
    estimator = IGWREstimator(config)
    result = estimator.sweep_p(ds, dm, range(args.p_min, p_max + 1), args.mode)
    writer = ReportWriter(args.out)
    writer.emit_sweep(result.reports, result.recommended_p)
    writer.emit_report(result.report_for(result.recommended_p), ds)

    print(f"\nRSS 随 p 变化 ({args.mode})")
    print("=" * 60)
    for report in result.reports:
        mark = ' *' if report.p == result.recommended_p else ''
        print(f"p={report.p}: RSS={format_number(report.rss)} R²={format_number(report.r2)} "
              f"{subset_label(report.selected_names)}{mark}")
    print(f"[成功] 推荐 p={result.recommended_p}")
    return 0


def cmd_bench(args: argparse.Namespace) -> int:
    config = config_from_args(args)
    ds = load_dataset(args, config)
    dm = build_distance_matrix(ds)
    estimator = IGWREstimator(config)
    baseline = BaselineEstimator()
    analyzer = FitAnalyzer()
    compare_vars = [ds.var_names[j] for j in ds.free_indices]

    rows = []
    for mode, label in (('global', 'IGWR-G'), ('local', 'IGWR-L')):
        report = estimator.igwr_fit(ds, dm, args.p, mode)
        rows.append(analyzer.comparison_row(label, report.p, report.metrics, report.beta,
                                            ds.var_names, compare_vars))
    fs = baseline.forward_selection(ds, dm, p_max=args.p, criterion=args.criterion, rho=config.rho)
    fs_fit = fs.fit_for(args.p)
    rows.append(analyzer.comparison_row('FS', args.p, fs_fit.metrics, fs_fit.beta,
                                        ds.var_names, compare_vars))
    full = SubsetMask.full(ds.m, intercept_locked=ds.intercept)
    bgwr = baseline.bgwr_fit(ds, dm, full, args.criterion)
    rows.append(analyzer.comparison_row('BGWR', full.p, bgwr.metrics, bgwr.beta,
                                        ds.var_names, compare_vars))
    ols = baseline.ols_fit(ds, full)
    rows.append(analyzer.comparison_row('OLS', full.p, ols.metrics, ols.beta,
                                        ds.var_names, compare_vars))
    if args.baselines:
        for method, table in load_external_baselines(args.baselines).items():
            rows.append(analyzer.external_row(method, table, ds, compare_vars))

    table = analyzer.comparison_table(rows)
    writer = ReportWriter(args.out)
    writer.emit_comparison(table)
    writer.emit_summary({
        'command': 'bench',
        'config': dict(config.to_dict(), p=args.p, criterion=args.criterion),
        'forward_selection_order': ds.names_of(fs.order),
        'forward_selection_stop_p': fs.stop_p,
        'forward_selection_elbow_p': fs.elbow_p,
        'bgwr_bandwidth': bgwr.bandwidth,
        'comparison': table.to_dict(orient='records'),
    })
    print(f"\n方法对比 (p={args.p}, 准则 {args.criterion})")
    print("=" * 60)
    for row in rows:
        print(f"{row['method']:<10} RSS={format_number(row['rss'])} R²={format_number(row['r2'])} "
              f"R²adj={format_number(row['r2_adj'])}")
    return 0


COMMANDS = {'fit': cmd_fit, 'sweep': cmd_sweep, 'bench': cmd_bench}


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    命令行入口

    Returns:
        int: 退出码
    """
    args = build_parser().parse_args(argv)
    if args.quiet:
        set_log_level(logging.ERROR)
    elif args.verbose:
        set_log_level(logging.INFO)
    else:
        set_log_level(logging.WARNING)

    try:
        return COMMANDS[args.command](args)
    except IGWRError as exc:
        code = getattr(exc, 'exit_code', 3)
        logger.error(f"{type(exc).__name__}: {exc}")
        return code


if __name__ == '__main__':
    sys.exit(main())
