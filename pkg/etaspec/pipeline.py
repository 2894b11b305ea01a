"""
流程模块：按运行配置构造 (H, η)，执行 spectrum / verify / evolve / equivalent 的计算步骤
"""
import logging
import math
import os
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Dict, List, Optional, Tuple

import joblib
import numpy as np
import pandas as pd
import scipy

from etaspec import __version__
from etaspec.config import MIN_GRID_N, RunConfig, threshold_map, thread_cap
from etaspec.construction import (
    PhysicalBasis,
    build_equivalence_map,
    completeness_residual,
    diagonalize_pseudo,
    equivalent_hermitian,
    spectrum_distance,
    unitarity_residual,
)
from etaspec.discretize import (
    Grid,
    ModelParams,
    algebraic_model,
    build_discrete_metric,
    build_hamiltonian,
    build_metric,
    build_momentum,
    discrete_metric_exponent,
    interior_mask,
    make_grid,
    reference_oscillator,
    similarity_model,
)
from etaspec.evolve import equivalence_check, equivalence_deviations, propagate_pseudo, relative_drift, trajectory_frame
from etaspec.matrix_loader import MatrixLoader
from etaspec.metric import MetricOperator, is_eta_self_adjoint, make_metric, physical_observable, pseudo_hermiticity_residual
from etaspec.models import OscillatorModel, analytic_energy
from etaspec.numcore import frobenius_norm, hermiticity_residual

logger = logging.getLogger(__name__)


@dataclass
class SystemSetup:
    """
    一次运行所用的系统

    Attributes:
        mode: 运行模式
        H: 哈密顿量
        metric: 构造所用的度量算子
        grid: 有限差分网格（仅 fd-oscillator）
        model: 解析谐振子模型（仅 harmonic 势）
        continuum_metric: 连续度量 e^{2αx}（仅 fd-oscillator）
        h_ref: 代数模式的厄米种子
    """

    mode: str
    H: np.ndarray
    metric: MetricOperator
    grid: Optional[Grid] = None
    model: Optional[OscillatorModel] = None
    continuum_metric: Optional[MetricOperator] = None
    h_ref: Optional[np.ndarray] = None


def _model_params(config: RunConfig) -> ModelParams:
    return ModelParams(
        alpha=config.alpha,
        omega=config.omega,
        potential=config.potential.kind,
        quartic_g=config.potential.g,
    )


def _make_metric(eta: np.ndarray, config: RunConfig) -> MetricOperator:
    tol = config.tolerances
    return make_metric(eta, hermiticity_tol=tol.hermiticity, relative_floor=tol.positivity_floor)


def _fd_system(config: RunConfig) -> SystemSetup:
    grid = make_grid(config.grid.xmin, config.grid.xmax, config.grid.n, MIN_GRID_N)
    params = _model_params(config)
    H = build_hamiltonian(grid, params)
    cap = config.tolerances.cond_cap
    continuum = _make_metric(build_metric(grid, config.alpha, cap), config)
    if config.fd.metric == "continuum":
        metric = continuum
    else:
        metric = _make_metric(build_discrete_metric(grid, config.alpha, cap), config)
    model = OscillatorModel(config.alpha, config.omega) if config.potential.kind == "harmonic" else None
    return SystemSetup(
        mode=config.mode,
        H=H,
        metric=metric,
        grid=grid,
        model=model,
        continuum_metric=continuum,
    )


def _conjugate_pair_seed(rng: np.random.Generator, h_ref: np.ndarray) -> np.ndarray:
    """
    实非厄米种子 Q·B·Qᵀ：B 在 h_ref 的谱上把最低两个能级换成共轭对 c ± is

    Q 为随机实正交矩阵，s 在 [0.5, 1.5] 内均匀取值。
    """
    n = h_ref.shape[0]
    values = np.linalg.eigvalsh(h_ref)
    B = np.diag(values)
    c = 0.5 * (values[0] + values[1])
    s = rng.uniform(0.5, 1.5)
    B[:2, :2] = [[c, s], [-s, c]]
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    return Q @ B @ Q.T


def algebraic_instances(config: RunConfig) -> List[Tuple[np.ndarray, np.ndarray, np.ndarray]]:
    """
    按种子依次生成代数模式的 (h_ref, ρ, seed) 实例

    seed_kind = non_hermitian 时 seed 是带一对共轭复本征值的实矩阵。

    Returns:
        列表，元素为 (厄米种子 h_ref, ρ 对角元, 实际用于相似变换的矩阵)
    """
    alg = config.algebraic
    rng = np.random.default_rng(config.seed)
    out = []
    for _ in range(alg.instances):
        A = rng.standard_normal((alg.dim, alg.dim)) + 1j * rng.standard_normal((alg.dim, alg.dim))
        h_ref = 0.5 * (A + A.conj().T)
        rho = np.exp(rng.uniform(math.log(alg.rho_min), math.log(alg.rho_max), alg.dim))
        seed = _conjugate_pair_seed(rng, h_ref) if alg.seed_kind == "non_hermitian" else h_ref
        out.append((h_ref, rho, seed))
    return out


def _algebraic_setup(config: RunConfig, h_ref: np.ndarray, rho: np.ndarray, seed: np.ndarray) -> SystemSetup:
    if config.algebraic.seed_kind == "non_hermitian":
        H, eta = similarity_model(seed, rho)
        return SystemSetup(mode=config.mode, H=H, metric=_make_metric(eta, config))
    H, eta = algebraic_model(h_ref, rho, config.tolerances.hermiticity)
    return SystemSetup(mode=config.mode, H=H, metric=_make_metric(eta, config), h_ref=h_ref)


def build_system(config: RunConfig, loader: Optional[MatrixLoader] = None) -> SystemSetup:
    """
    按运行模式构造 (H, η)

    Args:
        config: 已校验的运行配置
        loader: matrix-files 模式使用的读取器

    Returns:
        SystemSetup
    """
    if config.mode == "fd-oscillator":
        setup = _fd_system(config)
    elif config.mode == "algebraic":
        h_ref, rho, seed = algebraic_instances(config)[0]
        setup = _algebraic_setup(config, h_ref, rho, seed)
    else:
        loader = loader or MatrixLoader()
        H, eta = loader.load_pair(config.matrix.hamiltonian, config.matrix.metric)
        setup = SystemSetup(mode=config.mode, H=H, metric=_make_metric(eta, config))
    logger.info(
        f"系统构造完成: 模式 {config.mode}, 维数 {setup.H.shape[0]}, η 条件数 {setup.metric.condition:.4e}"
    )
    return setup


def convergence_grid(grid: Grid) -> Grid:
    """步长加倍的网格（n 为奇数时）；否则改用步长减半的网格"""
    if grid.n % 2 == 1 and (grid.n + 1) // 2 - 1 >= MIN_GRID_N:
        return Grid(grid.xmin, grid.xmax, (grid.n + 1) // 2 - 1)
    return grid.halved()


def _continuum_residual(grid: Grid, config: RunConfig) -> float:
    H = build_hamiltonian(grid, _model_params(config))
    eta = build_metric(grid, config.alpha, config.tolerances.cond_cap)
    return pseudo_hermiticity_residual(H, _make_metric(eta, config))


def convergence_study(config: RunConfig, grid: Optional[Grid] = None) -> Dict:
    """
    连续度量下伪厄米残差的收敛阶：配置网格与步长加倍网格上各算一次

    Returns:
        {spacings, residuals, ratio, order, exponent_gaps, exponent_ratio}
    """
    grid = grid or make_grid(config.grid.xmin, config.grid.xmax, config.grid.n, MIN_GRID_N)
    other = convergence_grid(grid)
    coarse, fine = (other, grid) if other.n < grid.n else (grid, other)

    residuals = [_continuum_residual(g, config) for g in (coarse, fine)]
    gaps = [abs(discrete_metric_exponent(g, config.alpha) - config.alpha) for g in (coarse, fine)]
    ratio = residuals[1] / residuals[0] if residuals[0] > 0 else 0.0
    order = math.log(1.0 / ratio, coarse.spacing / fine.spacing) if ratio > 0 else math.inf
    exponent_ratio = gaps[1] / gaps[0] if gaps[0] > 0 else 0.0
    logger.info(
        f"收敛研究: Δ = {coarse.spacing:.5g} → {fine.spacing:.5g}, 残差 {residuals[0]:.3e} → {residuals[1]:.3e}, "
        f"观测阶 {order:.3f}"
    )
    return {
        'spacings': [coarse.spacing, fine.spacing],
        'grid_points': [coarse.n, fine.n],
        'residuals': residuals,
        'ratio': ratio,
        'order': order,
        'exponent_gaps': gaps,
        'exponent_ratio': exponent_ratio,
    }


def spectrum_table(setup: SystemSetup, basis: PhysicalBasis, n_states: int) -> pd.DataFrame:
    """前 n_states 个能级，列为 n,E_numeric,E_analytic,abs_error"""
    count = min(n_states, basis.energies.size)
    energies = basis.energies[:count]
    if setup.model is not None:
        analytic = np.array([analytic_energy(k, setup.model) for k in range(count)])
        errors = np.abs(energies - analytic)
    else:
        analytic = np.full(count, np.nan)
        errors = np.full(count, np.nan)
    return pd.DataFrame({
        'n': np.arange(count),
        'E_numeric': energies,
        'E_analytic': analytic,
        'abs_error': errors,
    })


def evolution_times(config: RunConfig) -> np.ndarray:
    return np.linspace(0.0, config.times.t_max, config.times.steps)


def initial_state(config: RunConfig, basis: PhysicalBasis) -> np.ndarray:
    """
    初态：superposition = (ψ₀+ψ₁)/√2，ground = ψ₀，random = 按种子生成的随机展开

    基的维数为 1 时 superposition 退化为 ψ₀。
    """
    kind = config.evolve.initial
    if kind == "ground" or basis.size == 1:
        return basis.states[:, 0].copy()
    if kind == "superposition":
        return (basis.states[:, 0] + basis.states[:, 1]) / np.sqrt(2.0)
    rng = np.random.default_rng(config.seed)
    a = rng.standard_normal(basis.size) + 1j * rng.standard_normal(basis.size)
    return basis.states @ (a / np.linalg.norm(a))


def _hermitian_tol(config: RunConfig) -> float:
    thresholds = threshold_map(config)
    return max(config.tolerances.hermiticity, thresholds['hermiticity_h'])


def _observable(setup: SystemSetup, config: RunConfig) -> np.ndarray:
    """校验 η-自伴性所用的参考空间厄米算子：fd 模式取动量，其余取按种子生成的随机厄米矩阵"""
    if setup.grid is not None:
        return build_momentum(setup.grid)
    n = setup.H.shape[0]
    rng = np.random.default_rng(config.seed + 1)
    A = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return 0.5 * (A + A.conj().T)


def interior_error(setup: SystemSetup, h: np.ndarray) -> Optional[float]:
    """h 与同一格式下厄米谐振子在中心区域的相对 Frobenius 误差"""
    if setup.grid is None or setup.model is None:
        return None
    mask = interior_mask(setup.grid, 0.5)
    reference = reference_oscillator(setup.grid, setup.model.omega)
    block = np.ix_(mask, mask)
    return frobenius_norm(h[block] - reference[block]) / frobenius_norm(reference[block])


def compute_spectrum(config: RunConfig) -> Tuple[SystemSetup, PhysicalBasis, pd.DataFrame]:
    """
    spectrum 计算流程

    Returns:
        (系统, 物理基, 谱表)
    """
    logger.info("步骤 1/3: 构造哈密顿量与度量算子...")
    setup = build_system(config)
    logger.info("步骤 2/3: 对角化并构造物理基...")
    basis = diagonalize_pseudo(setup.H, setup.metric, config.tolerances)
    logger.info("步骤 3/3: 生成谱表...")
    return setup, basis, spectrum_table(setup, basis, config.n_states)


def _structural_residuals(setup: SystemSetup, config: RunConfig) -> Tuple[Dict[str, float], PhysicalBasis, Dict]:
    """单个系统的全部结构残差"""
    tol = config.tolerances
    basis = diagonalize_pseudo(setup.H, setup.metric, tol)
    emap = build_equivalence_map(basis, setup.metric, samples=config.verify.isometry_samples, seed=config.seed)
    h = equivalent_hermitian(setup.H, setup.metric)
    psi0 = initial_state(config, basis)
    times = evolution_times(config)
    record = propagate_pseudo(basis, psi0, times, tol.projection)
    observable = physical_observable(_observable(setup, config), setup.metric)

    residuals = {
        'pseudo_hermiticity': pseudo_hermiticity_residual(setup.H, setup.metric),
        'gram': basis.gram_residual,
        'hermiticity_h': hermiticity_residual(h),
        'isometry': emap.isometry_residual,
        'unitarity': unitarity_residual(emap),
        'equivalence': equivalence_check(basis, setup.metric, h, psi0, times, tol.projection, _hermitian_tol(config)),
        'norm_drift': relative_drift(record.eta_norms),
        'completeness': completeness_residual(basis),
        'observable': is_eta_self_adjoint(observable, setup.metric)[1],
    }
    if setup.continuum_metric is not None:
        residuals['pseudo_hermiticity_continuum'] = pseudo_hermiticity_residual(setup.H, setup.continuum_metric)
    extras = {
        'range_dim': emap.range_dim,
        'eigen_residual': basis.eigen_residual,
        'spectrum_invariance': spectrum_distance(np.linalg.eigvalsh(0.5 * (h + h.conj().T)), basis.energies),
        'ref_norm_variation': relative_drift(record.ref_norms),
    }
    if setup.h_ref is not None:
        extras['h_ref_recovery'] = frobenius_norm(h - setup.h_ref) / frobenius_norm(setup.h_ref)
    interior = interior_error(setup, h)
    if interior is not None:
        extras['h_reference_interior'] = interior
    return residuals, basis, extras


def report_timestamp() -> Optional[str]:
    """SOURCE_DATE_EPOCH 对应的 UTC 时间；未设置时为 None"""
    raw = os.getenv("SOURCE_DATE_EPOCH")
    if not raw:
        return None
    try:
        return datetime.fromtimestamp(int(raw), tz=timezone.utc).strftime('%Y-%m-%dT%H:%M:%SZ')
    except ValueError:
        logger.warning(f"SOURCE_DATE_EPOCH={raw!r} 无法解析")
        return None


def versions() -> Dict[str, str]:
    return {
        'etaspec': __version__,
        'numpy': np.__version__,
        'scipy': scipy.__version__,
        'pandas': pd.__version__,
        'joblib': joblib.__version__,
    }


def compute_verify(config: RunConfig) -> Dict:
    """
    verify 计算流程：所有结构残差、阈值判定、谱与元数据

    Returns:
        报告字典（residuals, thresholds, failed, passed, spectrum, metadata 以及 fd 模式的 convergence）
    """
    logger.info("步骤 1/4: 构造哈密顿量与度量算子...")
    setup = build_system(config)

    logger.info("步骤 2/4: 计算结构残差...")
    residuals, basis, extras = _structural_residuals(setup, config)
    if config.mode == "algebraic" and config.algebraic.instances > 1:
        rest = algebraic_instances(config)[1:]
        n_jobs = max(1, min(thread_cap(), len(rest)))
        batch = joblib.Parallel(n_jobs=n_jobs, prefer="threads")(
            joblib.delayed(lambda item: _structural_residuals(_algebraic_setup(config, *item), config))(item)
            for item in rest
        )
        for other, _, other_extras in batch:
            for key, value in other.items():
                residuals[key] = max(residuals[key], value)
            extras['h_ref_recovery'] = max(extras['h_ref_recovery'], other_extras['h_ref_recovery'])
            extras['eigen_residual'] = max(extras['eigen_residual'], other_extras['eigen_residual'])
        logger.info(f"代数模式批量校验: 共 {config.algebraic.instances} 个实例，残差取最大值")

    convergence = None
    if config.mode == "fd-oscillator":
        logger.info("步骤 3/4: 收敛研究...")
        convergence = convergence_study(config, setup.grid)
    else:
        logger.info("步骤 3/4: 非有限差分模式，跳过收敛研究")

    logger.info("步骤 4/4: 阈值判定...")
    thresholds = threshold_map(config)
    failed = sorted(k for k, v in residuals.items() if not v <= thresholds[k])
    for name in failed:
        logger.warning(f"残差 {name} = {residuals[name]:.3e} 超过阈值 {thresholds[name]:.1e}")

    spectrum = spectrum_table(setup, basis, config.n_states)
    report = {
        'residuals': residuals,
        'thresholds': {k: thresholds[k] for k in residuals},
        'failed': failed,
        'passed': not failed,
        'diagnostics': extras,
        'spectrum': spectrum.astype(object).where(spectrum.notna(), None).to_dict(orient='records'),
        'metadata': {
            'config': config.echo(),
            'eta_condition': setup.metric.condition,
            'range_dim': extras['range_dim'],
            'versions': versions(),
            'timestamp': report_timestamp(),
        },
    }
    if convergence is not None:
        report['convergence'] = convergence
    return report


def compute_evolve(config: RunConfig) -> Tuple[pd.DataFrame, Dict]:
    """
    evolve 计算流程

    Returns:
        (轨迹表, 漂移摘要)
    """
    tol = config.tolerances
    logger.info("步骤 1/4: 构造哈密顿量与度量算子...")
    setup = build_system(config)
    logger.info("步骤 2/4: 对角化并构造物理基...")
    basis = diagonalize_pseudo(setup.H, setup.metric, tol)
    logger.info("步骤 3/4: η-几何中的谱传播...")
    psi0 = initial_state(config, basis)
    times = evolution_times(config)
    record = propagate_pseudo(basis, psi0, times, tol.projection)
    logger.info("步骤 4/4: 与 e^{−iht} 的等价校验...")
    h = equivalent_hermitian(setup.H, setup.metric)
    devs = equivalence_deviations(basis, setup.metric, h, psi0, times, tol.projection, _hermitian_tol(config))

    summary = {
        'initial': config.evolve.initial,
        't_max': config.times.t_max,
        'steps': int(times.size),
        'max_eta_norm_drift': relative_drift(record.eta_norms),
        'max_ref_norm_variation': relative_drift(record.ref_norms),
        'max_equiv_dev': float(devs.max()) if devs.size else 0.0,
        'timestamp': report_timestamp(),
    }
    return trajectory_frame(record, devs), summary


def compute_equivalent(config: RunConfig) -> Tuple[np.ndarray, Dict]:
    """
    equivalent 计算流程

    Returns:
        (h, 摘要)
    """
    logger.info("步骤 1/3: 构造哈密顿量与度量算子...")
    setup = build_system(config)
    logger.info("步骤 2/3: 计算 h = ρHρ⁻¹...")
    h = equivalent_hermitian(setup.H, setup.metric)
    logger.info("步骤 3/3: 汇总残差...")
    summary: Dict = {
        'hermiticity_residual': hermiticity_residual(h),
        'pseudo_hermiticity': pseudo_hermiticity_residual(setup.H, setup.metric),
        'dim': int(h.shape[0]),
        'eta_condition': setup.metric.condition,
        'timestamp': report_timestamp(),
    }
    if setup.h_ref is not None:
        summary['h_ref_recovery'] = frobenius_norm(h - setup.h_ref) / frobenius_norm(setup.h_ref)
    interior = interior_error(setup, h)
    if interior is not None:
        summary['h_reference_interior'] = interior
    return h, summary
