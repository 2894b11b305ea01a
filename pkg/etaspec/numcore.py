"""
数值核心模块：稠密复矩阵的本征分解、正定矩阵平方根、谱传播子与范数
"""
import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import scipy.linalg

from etaspec.config import DEFECT_TOL, HERMITICITY_TOL, RESIDUAL_TOL
from etaspec.errors import (
    ComplexSpectrum,
    ConvergenceFailure,
    DefectiveMatrix,
    NonSquare,
    NotHermitian,
    NotPositive,
    NotPositiveDefinite,
    ShapeMismatch,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class HermitianEigen:
    """厄米本征分解：values 升序，vectors 的列正交归一"""

    values: np.ndarray
    vectors: np.ndarray


@dataclass(frozen=True)
class GeneralEigen:
    """一般本征分解：values 按实部升序（实部相同按虚部），vectors 的列为单位范数右本征向量"""

    values: np.ndarray
    vectors: np.ndarray
    residual: float
    conditioning: float


def as_matrix(A) -> np.ndarray:
    """转为二维复数组"""
    M = np.asarray(A, dtype=complex)
    if M.ndim != 2:
        raise ShapeMismatch(f"需要二维矩阵，得到 ndim={M.ndim}")
    return M


def require_square(A: np.ndarray) -> None:
    if A.shape[0] != A.shape[1]:
        raise NonSquare(A.shape)


def frobenius_norm(A) -> float:
    return float(np.linalg.norm(np.asarray(A), "fro"))


def hermiticity_residual(A) -> float:
    """
    相对厄米残差 ‖A − A†‖_F / ‖A‖_F

    Args:
        A: 方阵

    Returns:
        残差；零矩阵返回 0
    """
    M = as_matrix(A)
    require_square(M)
    scale = frobenius_norm(M)
    if scale == 0.0:
        return 0.0
    return frobenius_norm(M - M.conj().T) / scale


def condition_number_diag(d: Sequence[float]) -> float:
    """
    正对角矩阵的条件数 max(d)/min(d)

    Args:
        d: 严格为正的实数序列

    Returns:
        条件数
    """
    values = np.asarray(d, dtype=float)
    bad = np.flatnonzero(~(values > 0))
    if bad.size:
        raise NotPositive(int(bad[0]), float(values[bad[0]]))
    return float(values.max() / values.min())


def fix_phases(vectors: np.ndarray) -> np.ndarray:
    """把每一列最大模元素的相位转为实正数（取第一个最大值）"""
    V = np.array(vectors, dtype=complex)
    if V.size == 0:
        return V
    idx = np.argmax(np.abs(V), axis=0)
    pivots = V[idx, np.arange(V.shape[1])]
    mags = np.abs(pivots)
    phases = np.where(mags > 0, pivots / np.where(mags > 0, mags, 1.0), 1.0)
    return V * phases.conj()[None, :]


def is_diagonal(M: np.ndarray) -> bool:
    return not np.any(M[~np.eye(M.shape[0], dtype=bool)])


def hermitian_eigen(A, hermiticity_tol: float = HERMITICITY_TOL) -> HermitianEigen:
    """
    厄米矩阵的本征分解

    Args:
        A: 方阵，需满足 ‖A − A†‖_F ≤ hermiticity_tol·‖A‖_F
        hermiticity_tol: 厄米性容差

    Returns:
        HermitianEigen（本征值升序，本征向量相位已固定）

    Raises:
        NonSquare, NotHermitian, ConvergenceFailure
    """
    M = as_matrix(A)
    require_square(M)
    residual = hermiticity_residual(M)
    if residual > hermiticity_tol:
        raise NotHermitian(residual, hermiticity_tol)

    n = M.shape[0]
    if is_diagonal(M):
        # 对角输入：本征分解就是对角元的排序
        diag = M.diagonal().real
        order = np.argsort(diag, kind="stable")
        vectors = np.eye(n, dtype=complex)[:, order]
        return HermitianEigen(values=diag[order].copy(), vectors=vectors)

    try:
        values, vectors = scipy.linalg.eigh(0.5 * (M + M.conj().T))
    except (scipy.linalg.LinAlgError, ValueError) as e:
        raise ConvergenceFailure(str(e))
    return HermitianEigen(values=np.asarray(values, dtype=float), vectors=fix_phases(vectors))


def spectral_function(eig: HermitianEigen, values: np.ndarray) -> np.ndarray:
    """V·diag(values)·V†"""
    V = eig.vectors
    return V @ (values[:, None] * V.conj().T)


def general_eigen(
    A,
    residual_tol: float = RESIDUAL_TOL,
    defect_tol: float = DEFECT_TOL,
) -> GeneralEigen:
    """
    一般（非厄米）方阵的本征分解

    亏损性通过两条判据报告：本征对残差超过 residual_tol，或归一化本征向量矩阵的
    σ_min/σ_max 低于 defect_tol（Jordan 块属于后者）。

    Args:
        A: 方阵
        residual_tol: 残差容差
        defect_tol: 本征向量矩阵条件容差

    Returns:
        GeneralEigen

    Raises:
        NonSquare, ConvergenceFailure, DefectiveMatrix
    """
    M = as_matrix(A)
    require_square(M)
    n = M.shape[0]
    if n == 0:
        return GeneralEigen(np.zeros(0, dtype=complex), np.zeros((0, 0), dtype=complex), 0.0, 1.0)

    # 实矩阵走实数求解器，共轭对保持精确
    work = M.real if not np.any(M.imag) else M
    try:
        values, vectors = scipy.linalg.eig(work)
    except (scipy.linalg.LinAlgError, ValueError) as e:
        raise ConvergenceFailure(str(e))
    values = np.asarray(values, dtype=complex)
    vectors = np.asarray(vectors, dtype=complex)

    order = np.lexsort((values.imag, values.real))
    values = values[order]
    vectors = vectors[:, order]
    norms = np.linalg.norm(vectors, axis=0)
    vectors = fix_phases(vectors / np.where(norms > 0, norms, 1.0)[None, :])

    scale = frobenius_norm(M)
    residuals = np.linalg.norm(M @ vectors - vectors * values[None, :], axis=0)
    residual = float(residuals.max() / scale) if scale > 0 else float(residuals.max())

    sigma = scipy.linalg.svdvals(vectors)
    conditioning = float(sigma[-1] / sigma[0]) if sigma[0] > 0 else 0.0

    if residual > residual_tol or conditioning < defect_tol:
        logger.warning(
            f"本征分解判定为亏损: 残差 {residual:.3e} (容差 {residual_tol:.1e}), "
            f"σ_min/σ_max {conditioning:.3e} (容差 {defect_tol:.1e})"
        )
        raise DefectiveMatrix(residual, conditioning)

    logger.debug(f"一般本征分解完成: n={n}, 残差 {residual:.3e}, σ_min/σ_max {conditioning:.3e}")
    return GeneralEigen(values=values, vectors=vectors, residual=residual, conditioning=conditioning)


def positive_sqrt(
    A,
    floor: Optional[float] = None,
    hermiticity_tol: float = HERMITICITY_TOL,
    relative_floor: float = 1e-13,
) -> np.ndarray:
    """
    厄米正定矩阵的唯一正平方根

    Args:
        A: 厄米正定矩阵
        floor: 绝对本征值下限；为 None 时取 relative_floor·max|λ|
        hermiticity_tol: 厄米性容差
        relative_floor: floor 未给出时使用的相对下限

    Returns:
        R，满足 R 厄米正定且 R·R = A

    Raises:
        NotHermitian, NotPositiveDefinite
    """
    eig = hermitian_eigen(A, hermiticity_tol)
    check_positive(eig, floor, relative_floor)
    return spectral_function(eig, np.sqrt(eig.values))


def check_positive(eig: HermitianEigen, floor: Optional[float], relative_floor: float) -> float:
    """检查最小本征值高于下限，返回实际使用的下限"""
    if eig.values.size == 0:
        return 0.0
    if floor is None:
        floor = relative_floor * float(np.max(np.abs(eig.values)))
    smallest = float(eig.values[0])
    if not smallest > floor or not smallest > 0:
        raise NotPositiveDefinite(smallest, floor)
    return floor


def spectral_phases(values, t: float) -> np.ndarray:
    """e^{−iE t}；要求能量为实数"""
    E = np.asarray(values)
    if np.iscomplexobj(E):
        if np.any(E.imag != 0):
            raise ComplexSpectrum(E[E.imag != 0], 0.0)
        E = E.real
    return np.exp(-1j * np.asarray(E, dtype=float) * t)


def spectral_propagator(
    values,
    vectors,
    t: float,
    inverse: Optional[np.ndarray] = None,
) -> np.ndarray:
    """
    谱传播子 V·diag(e^{−iE_n t})·V⁻¹

    Args:
        values: 实本征值
        vectors: 本征向量矩阵 V（列）
        t: 时间
        inverse: V⁻¹；为 None 时按 V 酉处理，取 V†

    Returns:
        传播子矩阵；t = 0 时精确返回单位阵
    """
    V = as_matrix(vectors)
    n = V.shape[0]
    if np.asarray(values).shape[0] != V.shape[1]:
        raise ShapeMismatch(f"本征值个数 {np.asarray(values).shape[0]} 与本征向量列数 {V.shape[1]} 不一致")
    phases = spectral_phases(values, t)
    if t == 0:
        return np.eye(n, dtype=complex)
    Vinv = V.conj().T if inverse is None else as_matrix(inverse)
    return V @ (phases[:, None] * Vinv)


def apply_spectral_propagator(
    values,
    vectors,
    t: float,
    vec,
    inverse: Optional[np.ndarray] = None,
) -> np.ndarray:
    """
    把谱传播子作用到一个向量上，不显式构造 n×n 传播子

    Args:
        values: 实本征值
        vectors: 本征向量矩阵 V
        t: 时间
        vec: 被作用的向量
        inverse: V⁻¹；为 None 时取 V†

    Returns:
        V·diag(e^{−iE t})·V⁻¹·vec
    """
    V = np.asarray(vectors)
    v = np.asarray(vec, dtype=complex)
    if t == 0 and V.shape[0] == V.shape[1]:
        spectral_phases(values, t)
        return v.copy()
    coeffs = (V.conj().T @ v) if inverse is None else (np.asarray(inverse) @ v)
    if t == 0:
        return V @ coeffs
    return V @ (spectral_phases(values, t) * coeffs)
