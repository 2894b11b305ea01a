"""
主程序入口：命令行子命令 spectrum / verify / evolve / equivalent
"""
import argparse
import logging
import os
import sys
from typing import List, Optional

from etaspec.config import (
    EQUIVALENT_JSON,
    EQUIVALENT_MATRIX,
    EVOLVE_SUMMARY_JSON,
    LOG_FILENAME,
    REPORT_JSON,
    SPECTRUM_CSV,
    SPECTRUM_JSON,
    TOP_N_DISPLAY,
    TRAJECTORY_CSV,
    RunConfig,
    load_config,
)
from etaspec.errors import EXIT_NUMERICAL, EXIT_OK, EXIT_VERIFY_FAILED, EtaspecError
from etaspec.pipeline import compute_equivalent, compute_evolve, compute_spectrum, compute_verify, report_timestamp
from etaspec.reporter import Reporter


def setup_logging(output_dir: str):
    """配置日志系统：同时输出到 <output_dir>/etaspec.log 与控制台"""
    if not os.path.exists(output_dir):
        os.makedirs(output_dir)

    log_format = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
    date_format = '%Y-%m-%d %H:%M:%S'

    logging.basicConfig(
        level=logging.INFO,
        format=log_format,
        datefmt=date_format,
        handlers=[
            logging.FileHandler(os.path.join(output_dir, LOG_FILENAME), encoding='utf-8'),
            logging.StreamHandler(sys.stdout)
        ],
        force=True,
    )


def cmd_spectrum(config: RunConfig, reporter: Reporter, print_report: bool = True) -> int:
    """写出 spectrum.csv 与 spectrum.json"""
    setup, basis, table = compute_spectrum(config)
    reporter.save_to_csv(table, SPECTRUM_CSV)
    reporter.save_json({
        'mode': config.mode,
        'spectrum': table.astype(object).where(table.notna(), None).to_dict(orient='records'),
        'gram_residual': basis.gram_residual,
        'max_imag': basis.max_imag,
        'eta_condition': setup.metric.condition,
        'timestamp': report_timestamp(),
    }, SPECTRUM_JSON)
    if print_report:
        reporter.print_spectrum_report(table, f"能谱 ({config.mode})", top_n=TOP_N_DISPLAY)
    return EXIT_OK


def cmd_verify(config: RunConfig, reporter: Reporter, print_report: bool = True) -> int:
    """写出 report.json；任一残差超过阈值时返回 1"""
    report = compute_verify(config)
    reporter.save_json(report, REPORT_JSON)
    if print_report:
        reporter.print_residual_report(report['residuals'], report['thresholds'], f"结构校验报告 ({config.mode})")
    if report['passed']:
        return EXIT_OK
    logging.getLogger(__name__).warning(f"校验未通过: {', '.join(report['failed'])}")
    return EXIT_VERIFY_FAILED


def cmd_evolve(config: RunConfig, reporter: Reporter, print_report: bool = True) -> int:
    """写出 trajectory.csv 与 evolve_summary.json"""
    frame, summary = compute_evolve(config)
    reporter.save_to_csv(frame, TRAJECTORY_CSV)
    reporter.save_json(summary, EVOLVE_SUMMARY_JSON)
    if print_report:
        reporter.print_summary(summary, "时间演化摘要")
    return EXIT_OK


def cmd_equivalent(config: RunConfig, reporter: Reporter, print_report: bool = True) -> int:
    """写出 equivalent_h.txt 与 equivalent.json"""
    h, summary = compute_equivalent(config)
    reporter.save_matrix(h, EQUIVALENT_MATRIX)
    reporter.save_json(summary, EQUIVALENT_JSON)
    if print_report:
        reporter.print_summary(summary, "等价厄米哈密顿量")
    return EXIT_OK


COMMANDS = {
    'spectrum': cmd_spectrum,
    'verify': cmd_verify,
    'evolve': cmd_evolve,
    'equivalent': cmd_equivalent,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='etaspec', description='伪厄米哈密顿量的物理 Hilbert 空间数值工具')
    sub = parser.add_subparsers(dest='command', required=True)
    helps = {
        'spectrum': '计算能谱并与解析谱比较',
        'verify': '计算全部结构残差并按阈值判定',
        'evolve': '时间演化与幺正等价校验',
        'equivalent': '输出等价厄米哈密顿量 h = ρHρ⁻¹',
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        p.add_argument('--config', type=str, default=None, help='配置文件路径（UTF-8，key = value）')
        p.add_argument('--out', type=str, default=None, help='输出目录')
        p.add_argument(
            '--override',
            action='append',
            default=[],
            metavar='KEY=VALUE',
            help='覆盖配置项，可重复，例如 --override grid.n=401'
        )
        p.add_argument('--no-report', action='store_true', help='不打印控制台报告')
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """
    主函数

    Returns:
        退出码：0 成功，1 校验未通过，2 配置错误，3 复谱，4 条件数超限，5 其他数值错误
    """
    parser = build_parser()
    args = parser.parse_args(argv)

    try:
        config = load_config(args.config, args.override, args.out)
    except EtaspecError as e:
        logging.basicConfig(level=logging.INFO, stream=sys.stdout)
        logging.getLogger(__name__).error(f"配置错误: {e}")
        return e.exit_code

    setup_logging(config.output_dir)
    logger = logging.getLogger(__name__)
    logger.info("=" * 80)
    logger.info(f"开始执行 etaspec {args.command}（模式 {config.mode}）")
    logger.info("=" * 80)

    try:
        reporter = Reporter(config.output_dir)
        code = COMMANDS[args.command](config, reporter, print_report=not args.no_report)
    except EtaspecError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return e.exit_code
    except Exception as e:
        logger.error(f"未预期的错误: {e}", exc_info=True)
        return EXIT_NUMERICAL

    logger.info("=" * 80)
    logger.info(f"etaspec {args.command} 执行完成，退出码 {code}")
    logger.info("=" * 80)
    return code


if __name__ == "__main__":
    sys.exit(main())
