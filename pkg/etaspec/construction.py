"""
构造模块：由伪厄米 H 与度量 η₊ 构造 η-正交归一的物理基、投影算子、Ĥ 的谱作用、
等价映射 ρ̂ 以及等价厄米哈密顿量 h = ρHρ⁻¹
"""
import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from etaspec.config import REAL_TOL_ALGEBRAIC, Tolerances
from etaspec.errors import ComplexSpectrum, IndexOutOfRange, NotAdmissible, NotOrthonormal, ShapeMismatch
from etaspec.metric import MetricOperator, eta_gram_schmidt, pseudo_hermiticity_residual
from etaspec.numcore import as_matrix, fix_phases, frobenius_norm, general_eigen, hermitian_eigen, hermiticity_residual

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PhysicalBasis:
    """
    物理基：升序实能量、η-正交归一的本征向量（states 的列）与简并分组

    Attributes:
        energies: E_n（升序）
        states: n×k 矩阵，第 n 列为 ψ_n
        groups: 简并簇，每个元素是一组下标
        metric: 构造时使用的度量算子
        gram_residual: max|Ψ†ηΨ − I|
        eigen_residual: 本征对的相对残差
        max_imag: 丢弃前本征值虚部的最大绝对值
    """

    energies: np.ndarray
    states: np.ndarray
    groups: Tuple[Tuple[int, ...], ...]
    metric: MetricOperator
    gram_residual: float
    eigen_residual: float = 0.0
    max_imag: float = 0.0

    @property
    def size(self) -> int:
        return self.states.shape[1]

    def coefficients(self, chi) -> np.ndarray:
        """展开系数 a_n = ⟨⟨ψ_n, χ⟩⟩"""
        x = np.asarray(chi, dtype=complex)
        if x.shape != (self.states.shape[0],):
            raise ShapeMismatch(f"向量形状 {x.shape} 与基的环境维数 {self.states.shape[0]} 不一致")
        return self.states.conj().T @ (self.metric.eta @ x)

    def synthesize(self, a) -> np.ndarray:
        """Σ a_n ψ_n"""
        return self.states @ _check_coefficients(self, a)


@dataclass(frozen=True)
class EquivalenceMap:
    """
    等价映射 ρ̂：物理基系数到参考空间，列为 ρψ_n

    Attributes:
        matrix: 映射矩阵
        range_dim: 列空间维数
        orthonormality_residual: max|M†M − I|
        isometry_residual: 随机系数下 ‖M·a‖ 与 ‖Σaψ‖_η 的最大相对差
    """

    matrix: np.ndarray
    range_dim: int
    orthonormality_residual: float
    isometry_residual: float


def _check_coefficients(basis: PhysicalBasis, a) -> np.ndarray:
    coeffs = np.asarray(a, dtype=complex)
    if coeffs.shape != (basis.size,):
        raise ShapeMismatch(f"系数长度 {coeffs.shape} 与基的维数 {basis.size} 不一致")
    return coeffs


def cluster_energies(energies: np.ndarray, cluster_tol: float) -> List[Tuple[int, ...]]:
    """
    对升序能量做单链聚类：相邻差值不超过 cluster_tol·scale 的归为同一簇

    scale 取谱直径与 max|E| 中的较大者，完全简并的谱也能归为一簇。

    Args:
        energies: 升序实能量
        cluster_tol: 相对容差

    Returns:
        下标分组列表
    """
    if energies.size == 0:
        return []
    diameter = float(energies[-1] - energies[0])
    scale = max(diameter, float(np.max(np.abs(energies))))
    threshold = cluster_tol * scale
    groups = [[0]]
    for k in range(1, energies.size):
        if energies[k] - energies[k - 1] <= threshold:
            groups[-1].append(k)
        else:
            groups.append([k])
    return [tuple(g) for g in groups]


def diagonalize_pseudo(H, m: MetricOperator, tols: Optional[Tolerances] = None) -> PhysicalBasis:
    """
    对角化伪厄米 H 并构造 η-正交归一的物理基

    先用一般本征分解检查实谱与亏损性，再检查伪厄米残差；通过后对
    ρHρ⁻¹ 的厄米部分做厄米本征分解 φ_n，取 ψ_n = ρ⁻¹φ_n，
    最后在每个简并簇内做 η-Gram–Schmidt。

    Args:
        H: 哈密顿量
        m: 度量算子
        tols: 容差（real 为 None 时取代数模式默认值）

    Returns:
        PhysicalBasis

    Raises:
        ComplexSpectrum: 某些本征值虚部超过 real·max|λ|
        NotAdmissible: 伪厄米残差超过 admissibility 容差
        NotOrthonormal: Gram 残差超过 gram 容差
        DefectiveMatrix: 由本征分解传出
    """
    tols = tols or Tolerances()
    real_tol = tols.real if tols.real is not None else REAL_TOL_ALGEBRAIC
    gram_tol = tols.gram
    M = as_matrix(H)
    if M.shape != m.eta.shape:
        raise ShapeMismatch(f"H 的形状 {M.shape} 与 η 的形状 {m.eta.shape} 不一致")

    eig = general_eigen(M, tols.residual, tols.defect)
    values = eig.values
    scale = float(np.max(np.abs(values))) if values.size else 0.0
    imag = np.abs(values.imag)
    offending = values[imag > real_tol * scale]
    if offending.size:
        logger.error(f"发现 {offending.size} 个复本征值，最大虚部 {imag.max():.3e}")
        raise ComplexSpectrum(offending, real_tol)
    max_imag = float(imag.max()) if imag.size else 0.0

    admissibility = pseudo_hermiticity_residual(M, m)
    if admissibility > tols.admissibility:
        logger.error(f"伪厄米残差 {admissibility:.3e} 超过容差 {tols.admissibility:.1e}")
        raise NotAdmissible(admissibility, tols.admissibility)

    h = m.rho @ M @ m.rho_inv
    reduced = hermitian_eigen(0.5 * (h + h.conj().T))
    energies = reduced.values
    vectors = m.rho_inv @ reduced.vectors

    groups = cluster_energies(energies, tols.cluster)
    states = np.empty_like(vectors)
    for group in groups:
        idx = list(group)
        block = vectors[:, idx]
        if len(idx) > 1:
            block = np.column_stack(eta_gram_schmidt(list(block.T), m, tols.dependency))
        states[:, idx] = fix_phases(block)

    gram = states.conj().T @ (m.eta @ states)
    gram_residual = float(np.max(np.abs(gram - np.eye(states.shape[1])))) if states.size else 0.0
    if gram_residual > gram_tol:
        logger.error(f"物理基 Gram 残差 {gram_residual:.3e} 超过容差 {gram_tol:.1e}")
        raise NotOrthonormal(gram_residual, gram_tol)

    eigen_residual = _eigen_residual(M, states, energies)
    if eigen_residual > tols.residual:
        logger.warning(
            f"物理基本征对残差 {eigen_residual:.3e} 超过容差 {tols.residual:.1e}"
            f"（H 对当前 η 只近似伪厄米，伪厄米残差 {admissibility:.3e}）"
        )

    degenerate = sum(1 for g in groups if len(g) > 1)
    logger.info(
        f"物理基构造完成: 维数 {energies.size}, 简并簇 {degenerate} 个, "
        f"Gram 残差 {gram_residual:.3e}, 本征对残差 {eigen_residual:.3e}, 最大虚部 {max_imag:.3e}"
    )
    return PhysicalBasis(
        energies=energies,
        states=states,
        groups=tuple(groups),
        metric=m,
        gram_residual=gram_residual,
        eigen_residual=eigen_residual,
        max_imag=max_imag,
    )


def _eigen_residual(M: np.ndarray, states: np.ndarray, energies: np.ndarray) -> float:
    """max_n ‖Hψ_n − E_nψ_n‖ / (‖H‖_F·‖ψ_n‖)"""
    if states.size == 0:
        return 0.0
    scale = frobenius_norm(M)
    residuals = np.linalg.norm(M @ states - states * energies[None, :], axis=0)
    norms = np.linalg.norm(states, axis=0)
    return float(np.max(residuals / (norms * scale))) if scale > 0 else float(residuals.max())


def gram_matrix(basis: PhysicalBasis) -> np.ndarray:
    """Ψ†ηΨ"""
    return basis.states.conj().T @ (basis.metric.eta @ basis.states)


def projector(basis: PhysicalBasis, i: int) -> np.ndarray:
    """
    投影算子 Λᵢ 的矩阵 ψᵢψᵢ†η，作用为 Λᵢχ = ⟨⟨ψᵢ, χ⟩⟩ψᵢ

    Raises:
        IndexOutOfRange
    """
    if not 0 <= i < basis.size:
        raise IndexOutOfRange(i, basis.size)
    psi = basis.states[:, i]
    return np.outer(psi, psi.conj() @ basis.metric.eta)


def apply_projector(basis: PhysicalBasis, i: int, chi) -> np.ndarray:
    """Λᵢχ，不构造 n×n 矩阵"""
    if not 0 <= i < basis.size:
        raise IndexOutOfRange(i, basis.size)
    psi = basis.states[:, i]
    x = np.asarray(chi, dtype=complex)
    return np.vdot(psi, basis.metric.eta @ x) * psi


def completeness_residual(basis: PhysicalBasis) -> float:
    """‖Σ Λᵢ − I‖_F / √n"""
    n = basis.states.shape[0]
    total = basis.states @ (basis.states.conj().T @ basis.metric.eta)
    return frobenius_norm(total - np.eye(n)) / np.sqrt(n)


def apply_hat_hamiltonian(basis: PhysicalBasis, a) -> np.ndarray:
    """Ĥ 在系数表示下的作用 (E_n·a_n)"""
    return basis.energies * _check_coefficients(basis, a)


def build_equivalence_map(
    basis: PhysicalBasis,
    m: Optional[MetricOperator] = None,
    samples: int = 16,
    seed: int = 0,
) -> EquivalenceMap:
    """
    构造等价映射 ρ̂（列为 ρψ_n）并校验列正交归一与等距性

    Args:
        basis: 物理基
        m: 度量算子，None 时使用 basis.metric
        samples: 等距性检验的随机系数向量个数
        seed: 随机数种子

    Returns:
        EquivalenceMap
    """
    m = m or basis.metric
    if m.dim != basis.states.shape[0]:
        raise ShapeMismatch(f"度量维数 {m.dim} 与基的环境维数 {basis.states.shape[0]} 不一致")
    matrix = m.rho @ basis.states
    k = matrix.shape[1]
    orthonormality = float(np.max(np.abs(matrix.conj().T @ matrix - np.eye(k)))) if k else 0.0

    rng = np.random.default_rng(seed)
    isometry = 0.0
    for _ in range(samples):
        a = rng.standard_normal(k) + 1j * rng.standard_normal(k)
        chi = basis.states @ a
        eta_norm = np.sqrt(max(np.vdot(chi, m.eta @ chi).real, 0.0))
        if eta_norm > 0:
            isometry = max(isometry, abs(np.linalg.norm(matrix @ a) - eta_norm) / eta_norm)

    range_dim = int(np.linalg.matrix_rank(matrix)) if k else 0
    if range_dim < matrix.shape[0]:
        logger.warning(f"ρ̂ 的值域维数 {range_dim} 小于参考空间维数 {matrix.shape[0]}")
    logger.info(f"等价映射: 列正交残差 {orthonormality:.3e}, 等距残差 {isometry:.3e}, 值域维数 {range_dim}")
    return EquivalenceMap(
        matrix=matrix,
        range_dim=range_dim,
        orthonormality_residual=orthonormality,
        isometry_residual=float(isometry),
    )


def unitarity_residual(emap: EquivalenceMap) -> float:
    """max|M†M − I|，值域满维时再计入 max|MM† − I|"""
    M = emap.matrix
    residual = emap.orthonormality_residual
    if emap.range_dim == M.shape[0] == M.shape[1]:
        residual = max(residual, float(np.max(np.abs(M @ M.conj().T - np.eye(M.shape[0])))))
    return residual


def equivalent_hermitian(H, m: MetricOperator) -> np.ndarray:
    """
    等价厄米哈密顿量 h = ρHρ⁻¹

    Args:
        H: 哈密顿量
        m: 度量算子

    Returns:
        h（厄米性残差记录在日志中）
    """
    M = as_matrix(H)
    if M.shape != m.eta.shape:
        raise ShapeMismatch(f"H 的形状 {M.shape} 与 η 的形状 {m.eta.shape} 不一致")
    h = m.rho @ M @ m.rho_inv
    logger.info(f"等价厄米哈密顿量: 厄米性残差 {hermiticity_residual(h):.3e}")
    return h


def spectrum_distance(a, b) -> float:
    """两个实谱按升序配对后的最大差"""
    x = np.sort(np.real(np.asarray(a)))
    y = np.sort(np.real(np.asarray(b)))
    if x.shape != y.shape:
        raise ShapeMismatch(f"谱长度不一致: {x.shape} vs {y.shape}")
    return float(np.max(np.abs(x - y))) if x.size else 0.0
