"""
报告生成模块：导出 CSV、JSON、矩阵文件并打印控制台报告
"""
import json
import logging
import math
import os
from typing import Dict, Optional

import numpy as np
import pandas as pd

from etaspec.config import EQUIVALENT_MATRIX, REPORT_JSON, SPECTRUM_CSV, TOP_N_DISPLAY

logger = logging.getLogger(__name__)


def _to_builtin(value):
    """把 numpy 标量/数组转换为可 JSON 序列化的内置类型"""
    if isinstance(value, dict):
        return {str(k): _to_builtin(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_to_builtin(v) for v in value]
    if isinstance(value, np.ndarray):
        return _to_builtin(value.tolist())
    if isinstance(value, np.generic):
        return _to_builtin(value.item())
    if isinstance(value, complex):
        return {"re": _to_builtin(value.real), "im": _to_builtin(value.imag)}
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def format_matrix(matrix: np.ndarray) -> str:
    """矩阵文本：`rows cols` 头，随后每行 `re im` 数对，17 位有效数字"""
    M = np.asarray(matrix, dtype=complex)
    lines = [f"{M.shape[0]} {M.shape[1]}"]
    for row in M:
        lines.append(" ".join(f"{z.real:.17g} {z.imag:.17g}" for z in row))
    return "\n".join(lines) + "\n"


class Reporter:
    """报告生成器"""

    def __init__(self, output_dir: str):
        """
        初始化报告生成器

        Args:
            output_dir: 输出目录
        """
        self.output_dir = output_dir
        self.ensure_output_dir()

    def ensure_output_dir(self):
        """确保输出目录存在"""
        if not os.path.exists(self.output_dir):
            os.makedirs(self.output_dir)
            logger.info(f"创建输出目录: {self.output_dir}")

    def _path(self, filename: str) -> str:
        if os.path.isabs(filename):
            return filename
        return os.path.join(self.output_dir, filename)

    def save_to_csv(self, df: pd.DataFrame, filename: str = SPECTRUM_CSV) -> str:
        """
        保存表格到 CSV（UTF-8 无 BOM，全精度浮点，缺失值为空）

        Args:
            df: 数据表
            filename: 文件名（相对路径时位于输出目录下）

        Returns:
            保存的文件路径
        """
        filepath = self._path(filename)
        try:
            df.to_csv(
                filepath,
                index=False,
                encoding='utf-8',
                float_format='%.17g',
                na_rep='',
                lineterminator='\n',
            )
            logger.info(f"表格已保存到: {filepath}")
            return filepath
        except Exception as e:
            logger.error(f"保存 CSV 失败: {str(e)}")
            raise

    def save_json(self, data: Dict, filename: str = REPORT_JSON) -> str:
        """保存 JSON（键排序，非有限浮点写为 null）"""
        filepath = self._path(filename)
        try:
            with open(filepath, "w", encoding="utf-8", newline="\n") as f:
                json.dump(_to_builtin(data), f, ensure_ascii=False, indent=2, sort_keys=True, allow_nan=False)
                f.write("\n")
            logger.info(f"JSON 已保存到: {filepath}")
            return filepath
        except Exception as e:
            logger.error(f"保存 JSON 失败: {str(e)}")
            raise

    def save_matrix(self, matrix: np.ndarray, filename: str = EQUIVALENT_MATRIX) -> str:
        """按矩阵文件格式保存"""
        filepath = self._path(filename)
        try:
            with open(filepath, "w", encoding="utf-8", newline="\n") as f:
                f.write(format_matrix(matrix))
            logger.info(f"矩阵已保存到: {filepath}")
            return filepath
        except Exception as e:
            logger.error(f"保存矩阵失败: {str(e)}")
            raise

    def print_spectrum_report(self, spectrum_df: pd.DataFrame, title: str, top_n: int = TOP_N_DISPLAY):
        """
        打印谱表

        Args:
            spectrum_df: 列为 n,E_numeric,E_analytic,abs_error 的数据表
            title: 标题
            top_n: 显示前 N 个能级
        """
        print("\n" + "=" * 80)
        print(title)
        print("=" * 80)

        if spectrum_df.empty:
            print("警告：没有可用的能级数据")
            return

        stats = self.generate_summary_stats(spectrum_df)
        print("\n统计信息:")
        print(f"  - 能级数: {stats['count']}")
        print(f"  - 能量范围: {stats['min_energy']:.10g} - {stats['max_energy']:.10g}")
        if stats.get('max_abs_error') is not None:
            print(f"  - 最大解析误差: {stats['max_abs_error']:.3e}")

        print(f"\n{'n':<6} {'E_numeric':<24} {'E_analytic':<24} {'abs_error':<14}")
        print("-" * 80)
        for _, row in spectrum_df.head(top_n).iterrows():
            analytic = "" if pd.isna(row['E_analytic']) else f"{row['E_analytic']:.15g}"
            error = "" if pd.isna(row['abs_error']) else f"{row['abs_error']:.3e}"
            print(f"{int(row['n']):<6} {row['E_numeric']:<24.15g} {analytic:<24} {error:<14}")
        print("\n" + "=" * 80)

    def print_residual_report(self, residuals: Dict[str, float], thresholds: Dict[str, float], title: str):
        """打印残差与阈值对照表"""
        print("\n" + "=" * 80)
        print(title)
        print("=" * 80)
        print(f"{'残差':<32} {'数值':<14} {'阈值':<14} {'结果':<6}")
        print("-" * 80)
        for name in sorted(residuals):
            value = residuals[name]
            limit = thresholds.get(name)
            if limit is None:
                verdict = "-"
                limit_text = "-"
            else:
                verdict = "通过" if value <= limit else "失败"
                limit_text = f"{limit:.1e}"
            print(f"{name:<32} {value:<14.3e} {limit_text:<14} {verdict:<6}")
        print("\n" + "=" * 80)

    def print_summary(self, summary: Dict, title: str):
        """打印键值摘要"""
        print("\n" + "=" * 80)
        print(title)
        print("=" * 80)
        for key in sorted(summary):
            value = summary[key]
            text = f"{value:.6e}" if isinstance(value, float) else str(value)
            print(f"  - {key}: {text}")
        print("\n" + "=" * 80)

    def generate_summary_stats(self, spectrum_df: pd.DataFrame) -> Dict:
        """
        生成谱统计摘要

        Args:
            spectrum_df: 谱数据表

        Returns:
            统计信息字典
        """
        if spectrum_df.empty:
            return {}
        errors = spectrum_df['abs_error'].dropna()
        max_error: Optional[float] = float(errors.max()) if not errors.empty else None
        return {
            'count': len(spectrum_df),
            'min_energy': float(spectrum_df['E_numeric'].min()),
            'max_energy': float(spectrum_df['E_numeric'].max()),
            'max_abs_error': max_error,
        }
