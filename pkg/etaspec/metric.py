"""
度量模块：η-几何，包括伪厄米性校验、ρ = √η₊、物理内积、η-伴随与 η-Gram–Schmidt
"""
import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from etaspec.config import DEPENDENCY_TOL, HERMITICITY_TOL, POSITIVITY_FLOOR
from etaspec.errors import LinearlyDependent, ShapeMismatch
from etaspec.numcore import (
    as_matrix,
    check_positive,
    frobenius_norm,
    hermitian_eigen,
    is_diagonal,
    require_square,
    spectral_function,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MetricOperator:
    """
    正定度量算子 η₊ 及其正平方根

    Attributes:
        eta: η₊
        rho: ρ = √η₊
        rho_inv: ρ⁻¹
        min_eigenvalue: η₊ 的最小本征值
        condition: η₊ 的条件数
        diagonal: η₊ 是否为对角矩阵
    """

    eta: np.ndarray
    rho: np.ndarray
    rho_inv: np.ndarray
    min_eigenvalue: float
    condition: float
    diagonal: bool = False

    @property
    def dim(self) -> int:
        return self.eta.shape[0]


def make_metric(
    eta,
    hermiticity_tol: float = HERMITICITY_TOL,
    floor: Optional[float] = None,
    relative_floor: float = POSITIVITY_FLOOR,
) -> MetricOperator:
    """
    由 η₊ 构造 MetricOperator，正定性由完整的厄米本征分解给出

    Args:
        eta: 厄米正定方阵
        hermiticity_tol: 厄米性容差
        floor: 本征值绝对下限，None 时取 relative_floor·max λ
        relative_floor: 相对下限

    Returns:
        MetricOperator

    Raises:
        NonSquare, NotHermitian, NotPositiveDefinite
    """
    E = as_matrix(eta)
    require_square(E)
    eig = hermitian_eigen(E, hermiticity_tol)
    used_floor = check_positive(eig, floor, relative_floor)
    diagonal = is_diagonal(E)
    if diagonal:
        d = np.sqrt(E.diagonal().real)
        rho = np.diag(d).astype(complex)
        rho_inv = np.diag(1.0 / d).astype(complex)
    else:
        root = np.sqrt(eig.values)
        rho = spectral_function(eig, root)
        rho_inv = spectral_function(eig, 1.0 / root)
    min_eig = float(eig.values[0]) if eig.values.size else 1.0
    condition = float(eig.values[-1] / eig.values[0]) if eig.values.size else 1.0
    logger.debug(
        f"度量算子: n={E.shape[0]}, λ_min={min_eig:.6e}, 条件数 {condition:.4e}, 下限 {used_floor:.3e}"
    )
    return MetricOperator(
        eta=E, rho=rho, rho_inv=rho_inv, min_eigenvalue=min_eig, condition=condition,
        diagonal=diagonal,
    )


def _check_vector(v, m: MetricOperator, name: str) -> np.ndarray:
    x = np.asarray(v, dtype=complex)
    if x.shape != (m.dim,):
        raise ShapeMismatch(f"{name} 的形状 {x.shape} 与度量维数 {m.dim} 不一致")
    return x


def _weighted(x: np.ndarray, weights) -> np.ndarray:
    if weights is None:
        return x
    w = np.asarray(weights, dtype=float)
    if w.shape != x.shape:
        raise ShapeMismatch(f"权重形状 {w.shape} 与向量形状 {x.shape} 不一致")
    return np.sqrt(w) * x


def pseudo_hermiticity_residual(H, m: MetricOperator) -> float:
    """
    ‖H†η − ηH‖_F / (‖H‖_F·‖η‖_F)

    Args:
        H: 哈密顿量
        m: 度量算子

    Returns:
        相对残差；H†η = ηH 精确成立时为 0
    """
    M = as_matrix(H)
    if M.shape != m.eta.shape:
        raise ShapeMismatch(f"H 的形状 {M.shape} 与 η 的形状 {m.eta.shape} 不一致")
    scale = frobenius_norm(M) * frobenius_norm(m.eta)
    if scale == 0.0:
        return 0.0
    if m.diagonal:
        d = m.eta.diagonal()
        defect = M.conj().T * d[None, :] - d[:, None] * M
    else:
        defect = M.conj().T @ m.eta - m.eta @ M
    return frobenius_norm(defect) / scale


def eta_inner_paths(phi, psi, m: MetricOperator, weights: Optional[Sequence[float]] = None) -> Tuple[complex, complex]:
    """
    同时用两条路径计算物理内积：⟨φ|ηψ⟩ 与 ⟨ρφ|ρψ⟩

    权重按 W^{1/2}·η·W^{1/2} 并入度量。
    """
    x = _weighted(_check_vector(phi, m, "phi"), weights)
    y = _weighted(_check_vector(psi, m, "psi"), weights)
    direct = complex(np.vdot(x, m.eta @ y))
    via_rho = complex(np.vdot(m.rho @ x, m.rho @ y))
    return direct, via_rho


def eta_inner(phi, psi, m: MetricOperator, weights: Optional[Sequence[float]] = None) -> complex:
    """
    物理内积 ⟨⟨φ, ψ⟩⟩ = ⟨φ|ηψ⟩，对第一个参数共轭线性

    Args:
        phi: 向量 φ
        psi: 向量 ψ
        m: 度量算子
        weights: 可选的求积权重

    Returns:
        复数内积
    """
    x = _weighted(_check_vector(phi, m, "phi"), weights)
    y = _weighted(_check_vector(psi, m, "psi"), weights)
    return complex(np.vdot(x, m.eta @ y))


def eta_norm(psi, m: MetricOperator, weights: Optional[Sequence[float]] = None) -> float:
    """‖ψ‖_η = √⟨⟨ψ, ψ⟩⟩"""
    y = _weighted(_check_vector(psi, m, "psi"), weights)
    return float(np.linalg.norm(m.rho @ y))


def eta_adjoint(A, m: MetricOperator) -> np.ndarray:
    """A^♯ = η⁻¹A†η（η⁻¹ 取 ρ⁻¹ρ⁻¹）"""
    M = as_matrix(A)
    if M.shape != m.eta.shape:
        raise ShapeMismatch(f"A 的形状 {M.shape} 与 η 的形状 {m.eta.shape} 不一致")
    return m.rho_inv @ (m.rho_inv @ (M.conj().T @ m.eta))


def is_eta_self_adjoint(A, m: MetricOperator, tol: float = 1e-10) -> Tuple[bool, float]:
    """
    η-自伴判定 ‖A^♯ − A‖_F ≤ tol·‖A‖_F

    Returns:
        (是否自伴, 相对残差)
    """
    M = as_matrix(A)
    scale = frobenius_norm(M)
    residual = frobenius_norm(eta_adjoint(M, m) - M)
    relative = residual / scale if scale > 0 else residual
    return relative <= tol, relative


def eta_gram_schmidt(
    vectors: Sequence,
    m: MetricOperator,
    dep_tol: float = DEPENDENCY_TOL,
) -> List[np.ndarray]:
    """
    η-内积下的经典 Gram–Schmidt（按输入顺序，不选主元，带一次再正交化）

    Args:
        vectors: 待正交化的向量序列
        m: 度量算子
        dep_tol: 线性相关判据，相对于原向量的 η-范数

    Returns:
        η-正交归一的向量列表，张成与输入相同的空间

    Raises:
        LinearlyDependent: 报告失败向量的下标
    """
    basis: List[np.ndarray] = []
    for index, v in enumerate(vectors):
        r = _check_vector(v, m, f"vectors[{index}]").copy()
        original = eta_norm(r, m)
        if original == 0.0:
            raise LinearlyDependent(index, 0.0)
        if basis:
            Q = np.column_stack(basis)
            for _ in range(2):
                coeffs = Q.conj().T @ (m.eta @ r)
                r = r - Q @ coeffs
        remainder = eta_norm(r, m)
        if remainder <= dep_tol * original:
            raise LinearlyDependent(index, remainder)
        basis.append(r / remainder)
    return basis


def physical_observable(o, m: MetricOperator) -> np.ndarray:
    """
    参考空间的厄米算子 o 对应的物理可观测量 O = ρ⁻¹oρ

    o 厄米时 O 是 η-自伴的。
    """
    M = as_matrix(o)
    if M.shape != m.eta.shape:
        raise ShapeMismatch(f"o 的形状 {M.shape} 与 η 的形状 {m.eta.shape} 不一致")
    return m.rho_inv @ M @ m.rho


def expectation_value(A, psi, m: MetricOperator, weights: Optional[Sequence[float]] = None) -> complex:
    """⟨⟨ψ, Aψ⟩⟩ / ⟨⟨ψ, ψ⟩⟩"""
    M = as_matrix(A)
    y = _check_vector(psi, m, "psi")
    norm2 = eta_inner(y, y, m, weights).real
    if norm2 == 0.0:
        raise ShapeMismatch("零向量没有期望值")
    return eta_inner(y, M @ y, m, weights) / norm2
