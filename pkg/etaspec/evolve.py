"""
时间演化模块：η-几何下 Ĥ 的谱传播、参考空间中 h 的谱传播，以及两者的幺正等价校验
"""
import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from etaspec.config import HERMITICITY_TOL, PROJECTION_TOL, thread_cap
from etaspec.construction import PhysicalBasis
from etaspec.errors import NotInSpan, ShapeMismatch
from etaspec.metric import MetricOperator, eta_norm
from etaspec.numcore import apply_spectral_propagator, hermitian_eigen, spectral_phases

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrajectoryRecord:
    """
    轨迹记录

    Attributes:
        times: 时间点
        eta_norms: 各时刻的 η-范数
        ref_norms: 各时刻的参考空间范数
        states: 可选的态快照（列对应时间点）
    """

    times: np.ndarray
    eta_norms: np.ndarray
    ref_norms: np.ndarray
    states: Optional[np.ndarray] = None

    def __post_init__(self):
        if not (len(self.times) == len(self.eta_norms) == len(self.ref_norms)):
            raise ShapeMismatch("轨迹记录中各序列长度不一致")


def _n_jobs(count: int) -> int:
    return max(1, min(thread_cap(), count))


def _map_times(func, times: np.ndarray) -> List:
    """按时间点并行求值，结果按输入顺序返回"""
    if times.size == 0:
        return []
    return Parallel(n_jobs=_n_jobs(times.size), prefer="threads")(delayed(func)(float(t)) for t in times)


def relative_drift(values) -> float:
    """max|v − v₀| / v₀"""
    v = np.asarray(values, dtype=float)
    if v.size == 0 or v[0] == 0:
        return 0.0
    return float(np.max(np.abs(v - v[0])) / v[0])


def project_initial(basis: PhysicalBasis, psi0, projection_tol: float = PROJECTION_TOL) -> np.ndarray:
    """
    初态的展开系数 a = Ψ†ηψ₀，并检查 ψ₀ 位于基张成的空间内

    Raises:
        NotInSpan: η-投影残差超过 projection_tol
    """
    x = np.asarray(psi0, dtype=complex)
    a = basis.coefficients(x)
    m = basis.metric
    total = eta_norm(x, m)
    if total == 0.0:
        raise NotInSpan(0.0, projection_tol)
    residual = eta_norm(x - basis.states @ a, m) / total
    if residual > projection_tol:
        logger.error(f"初态 η-投影残差 {residual:.3e} 超过容差 {projection_tol:.1e}")
        raise NotInSpan(residual, projection_tol)
    logger.debug(f"初态 η-投影残差 {residual:.3e}")
    return a


def propagate_pseudo(
    basis: PhysicalBasis,
    psi0,
    times: Sequence[float],
    projection_tol: float = PROJECTION_TOL,
    keep_states: bool = False,
) -> TrajectoryRecord:
    """
    η-几何下的谱传播 ψ(t) = Σ e^{−iE_n t}⟨⟨ψ_n, ψ₀⟩⟩ψ_n

    Args:
        basis: 物理基
        psi0: 初态
        times: 时间点
        projection_tol: 张成空间检查的容差
        keep_states: 是否保存各时刻的态

    Returns:
        TrajectoryRecord
    """
    a = project_initial(basis, psi0, projection_tol)
    t_arr = np.asarray(times, dtype=float)
    m = basis.metric

    def step(t):
        state = basis.states @ (spectral_phases(basis.energies, t) * a)
        return state, eta_norm(state, m), float(np.linalg.norm(state))

    results = _map_times(step, t_arr)
    record = TrajectoryRecord(
        times=t_arr,
        eta_norms=np.array([r[1] for r in results]),
        ref_norms=np.array([r[2] for r in results]),
        states=np.column_stack([r[0] for r in results]) if keep_states and results else None,
    )
    logger.info(
        f"η-传播完成: {t_arr.size} 个时间点, η-范数漂移 {relative_drift(record.eta_norms):.3e}, "
        f"参考范数变化 {relative_drift(record.ref_norms):.3e}"
    )
    return record


def propagate_hermitian(
    h,
    phi0,
    times: Sequence[float],
    hermiticity_tol: float = HERMITICITY_TOL,
    keep_states: bool = False,
) -> TrajectoryRecord:
    """
    参考空间中的谱传播 φ(t) = e^{−iht}φ₀

    Raises:
        NotHermitian
    """
    eig = hermitian_eigen(h, hermiticity_tol)
    phi = np.asarray(phi0, dtype=complex)
    t_arr = np.asarray(times, dtype=float)

    def step(t):
        state = apply_spectral_propagator(eig.values, eig.vectors, t, phi)
        return state, float(np.linalg.norm(state))

    results = _map_times(step, t_arr)
    norms = np.array([r[1] for r in results])
    return TrajectoryRecord(
        times=t_arr,
        eta_norms=norms,
        ref_norms=norms.copy(),
        states=np.column_stack([r[0] for r in results]) if keep_states and results else None,
    )


def equivalence_deviations(
    basis: PhysicalBasis,
    m: MetricOperator,
    h,
    psi0,
    times: Sequence[float],
    projection_tol: float = PROJECTION_TOL,
    hermiticity_tol: float = HERMITICITY_TOL,
) -> np.ndarray:
    """各时刻的 ‖ρψ(t) − e^{−iht}ρψ₀‖ / ‖ρψ₀‖"""
    a = project_initial(basis, psi0, projection_tol)
    eig = hermitian_eigen(h, hermiticity_tol)
    phi0 = m.rho @ (basis.states @ a)
    scale = float(np.linalg.norm(phi0))
    t_arr = np.asarray(times, dtype=float)

    def step(t):
        pseudo = m.rho @ (basis.states @ (spectral_phases(basis.energies, t) * a))
        hermitian = apply_spectral_propagator(eig.values, eig.vectors, t, phi0)
        diff = float(np.linalg.norm(pseudo - hermitian))
        return diff / scale if scale > 0 else diff

    return np.array(_map_times(step, t_arr), dtype=float)


def equivalence_check(
    basis: PhysicalBasis,
    m: MetricOperator,
    h,
    psi0,
    times: Sequence[float],
    projection_tol: float = PROJECTION_TOL,
    hermiticity_tol: float = HERMITICITY_TOL,
) -> float:
    """
    幺正等价校验：max_t ‖ρψ(t) − e^{−iht}ρψ₀‖ / ‖ρψ₀‖

    Args:
        basis: 物理基
        m: 度量算子
        h: 等价厄米哈密顿量
        psi0: 初态
        times: 时间点

    Returns:
        最大偏差
    """
    devs = equivalence_deviations(basis, m, h, psi0, times, projection_tol, hermiticity_tol)
    worst = float(devs.max()) if devs.size else 0.0
    logger.info(f"幺正等价校验: 最大偏差 {worst:.3e}")
    return worst


def trajectory_frame(record: TrajectoryRecord, equiv_devs: Optional[Sequence[float]] = None) -> pd.DataFrame:
    """轨迹表，列为 t,eta_norm,ref_norm,equiv_dev"""
    devs = np.full(len(record.times), np.nan) if equiv_devs is None else np.asarray(equiv_devs, dtype=float)
    return pd.DataFrame({
        't': record.times,
        'eta_norm': record.eta_norms,
        'ref_norm': record.ref_norms,
        'equiv_dev': devs,
    })
