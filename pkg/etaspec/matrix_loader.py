"""
矩阵读取模块：读取 `rows cols` 头加逐行 `re im` 数对格式的复矩阵文件
"""
import logging
import os
from typing import Dict, Optional, Tuple

import numpy as np

from etaspec.errors import ConfigError

logger = logging.getLogger(__name__)


class MatrixLoader:
    """矩阵文件读取器"""

    def __init__(self):
        self.cache: Dict[str, np.ndarray] = {}

    def load_matrix(self, path: str) -> np.ndarray:
        """
        读取一个矩阵文件

        Args:
            path: 文件路径（UTF-8）

        Returns:
            rows×cols 复矩阵

        Raises:
            ConfigError: 文件不存在或格式不正确
        """
        key = os.path.abspath(path)
        if key in self.cache:
            return self.cache[key].copy()

        try:
            with open(path, "r", encoding="utf-8") as f:
                text = f.read()
        except OSError as e:
            logger.error(f"读取矩阵文件失败: {path}: {e}")
            raise ConfigError(f"无法读取矩阵文件 {path}: {e}")

        matrix = self.parse_matrix(text, source=path)
        self.cache[key] = matrix
        logger.info(f"已读取矩阵 {path}: {matrix.shape[0]}×{matrix.shape[1]}")
        return matrix.copy()

    @staticmethod
    def parse_matrix(text: str, source: str = "<text>") -> np.ndarray:
        """解析矩阵文本"""
        lines = [line for line in text.splitlines() if line.strip()]
        if not lines:
            raise ConfigError(f"矩阵文件为空: {source}")
        header = lines[0].split()
        if len(header) != 2:
            raise ConfigError(f"矩阵文件头应为 'rows cols': {source}")
        try:
            rows, cols = int(header[0]), int(header[1])
        except ValueError:
            raise ConfigError(f"矩阵文件头不是整数: {source}: {lines[0]!r}")
        if rows < 0 or cols < 0:
            raise ConfigError(f"矩阵维数不能为负: {source}")
        if len(lines) - 1 != rows:
            raise ConfigError(f"矩阵文件 {source} 声明 {rows} 行，实际 {len(lines) - 1} 行")

        matrix = np.empty((rows, cols), dtype=complex)
        for i, line in enumerate(lines[1:]):
            try:
                values = np.array(line.split(), dtype=float)
            except ValueError:
                raise ConfigError(f"矩阵文件 {source} 第 {i + 2} 行包含非数字内容")
            if values.size != 2 * cols:
                raise ConfigError(f"矩阵文件 {source} 第 {i + 2} 行应有 {2 * cols} 个数，实际 {values.size}")
            matrix[i] = values[0::2] + 1j * values[1::2]
        return matrix

    def load_pair(self, hamiltonian_path: str, metric_path: str) -> Tuple[np.ndarray, np.ndarray]:
        """读取 (H, η) 并检查两者形状一致"""
        H = self.load_matrix(hamiltonian_path)
        eta = self.load_matrix(metric_path)
        for label, matrix in (("H", H), ("η", eta)):
            if not self.validate_matrix(matrix, label):
                raise ConfigError(f"矩阵文件中的 {label} 不是有限值方阵")
        if H.shape != eta.shape:
            raise ConfigError(f"H 的形状 {H.shape} 与 η 的形状 {eta.shape} 不一致")
        return H, eta

    def validate_matrix(self, matrix: np.ndarray, name: Optional[str] = None) -> bool:
        """检查矩阵为有限值的方阵"""
        label = name or "matrix"
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            logger.warning(f"{label} 不是方阵: {matrix.shape}")
            return False
        if not np.all(np.isfinite(matrix)):
            logger.warning(f"{label} 含有非有限值")
            return False
        return True
