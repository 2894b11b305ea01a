"""
异常模块：所有数值与配置错误，以及它们对应的命令行退出码
"""
from typing import Optional, Sequence

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_CONFIG = 2
EXIT_COMPLEX_SPECTRUM = 3
EXIT_CONDITION_CAP = 4
EXIT_NUMERICAL = 5


class EtaspecError(Exception):
    """所有 etaspec 错误的基类"""

    exit_code = EXIT_NUMERICAL


class ConfigError(EtaspecError):
    """配置文件或 --override 解析失败"""

    exit_code = EXIT_CONFIG


class NonSquare(EtaspecError):
    def __init__(self, shape):
        self.shape = tuple(shape)
        super().__init__(f"矩阵不是方阵: shape={self.shape}")


class ShapeMismatch(EtaspecError):
    def __init__(self, message: str):
        super().__init__(message)


class NotHermitian(EtaspecError):
    def __init__(self, residual: float, tol: float):
        self.residual = residual
        self.tol = tol
        super().__init__(f"矩阵不是厄米的: 相对残差 {residual:.3e} > 容差 {tol:.1e}")


class NotPositive(EtaspecError):
    def __init__(self, index: int, value: float):
        self.index = index
        self.value = value
        super().__init__(f"第 {index} 个元素不是严格正数: {value!r}")


class NotPositiveDefinite(EtaspecError):
    def __init__(self, eigenvalue: float, floor: float):
        self.eigenvalue = eigenvalue
        self.floor = floor
        super().__init__(
            f"矩阵不是正定的: 最小本征值 {eigenvalue:.6e} <= 下限 {floor:.3e}"
        )


class ConvergenceFailure(EtaspecError):
    def __init__(self, message: str):
        super().__init__(f"本征求解未收敛: {message}")


class DefectiveMatrix(EtaspecError):
    def __init__(self, residual: float, conditioning: float, message: str = ""):
        self.residual = residual
        self.conditioning = conditioning
        detail = f"本征向量残差 {residual:.3e}, 本征向量矩阵 σ_min/σ_max = {conditioning:.3e}"
        super().__init__(f"矩阵数值上不可对角化（亏损）: {detail}{message}")


class ConditionCapExceeded(EtaspecError):
    exit_code = EXIT_CONDITION_CAP

    def __init__(self, condition: float, cap: float):
        self.condition = condition
        self.cap = cap
        super().__init__(f"度量算子条件数 {condition:.4e} 超过上限 {cap:.1e}")


class LinearlyDependent(EtaspecError):
    def __init__(self, index: int, remainder: float):
        self.index = index
        self.remainder = remainder
        super().__init__(
            f"第 {index} 个向量与之前的向量 η-线性相关（剩余 η-范数 {remainder:.3e}）"
        )


class ComplexSpectrum(EtaspecError):
    exit_code = EXIT_COMPLEX_SPECTRUM

    def __init__(self, offending: Sequence[complex], tol: float):
        self.offending = list(offending)
        self.tol = tol
        shown = ", ".join(f"{z.real:.6g}{z.imag:+.6g}j" for z in self.offending[:8])
        more = "" if len(self.offending) <= 8 else f" ... 共 {len(self.offending)} 个"
        super().__init__(f"谱不是实的（虚部超过 {tol:.1e}）: {shown}{more}")


class NotAdmissible(EtaspecError):
    def __init__(self, residual: float, tol: float):
        self.residual = residual
        self.tol = tol
        super().__init__(f"H 不满足 η-伪厄米条件: 残差 {residual:.3e} > 容差 {tol:.1e}")


class NotOrthonormal(EtaspecError):
    def __init__(self, residual: float, tol: float):
        self.residual = residual
        self.tol = tol
        super().__init__(f"物理基不满足 η-正交归一: Gram 残差 {residual:.3e} > 容差 {tol:.1e}")


class NotInSpan(EtaspecError):
    def __init__(self, residual: float, tol: float):
        self.residual = residual
        self.tol = tol
        super().__init__(f"初态不在本征基张成的空间内: η-投影残差 {residual:.3e} > {tol:.1e}")


class IndexOutOfRange(EtaspecError):
    def __init__(self, index: int, size: int):
        self.index = index
        self.size = size
        super().__init__(f"索引 {index} 越界（基的维数 {size}）")


class GridError(EtaspecError):
    def __init__(self, message: str, detail: Optional[str] = None):
        super().__init__(message if detail is None else f"{message}: {detail}")
