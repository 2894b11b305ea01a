"""
离散化模块：均匀网格上的 x、p、V、H 与度量算子 η₊ 的矩阵表示，以及代数模式
"""
import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional, Tuple, Union

import numpy as np

from etaspec.config import CONDITION_CAP, HERMITICITY_TOL
from etaspec.errors import ConditionCapExceeded, GridError, NotHermitian, NotPositive, ShapeMismatch
from etaspec.numcore import as_matrix, condition_number_diag, hermiticity_residual, require_square

logger = logging.getLogger(__name__)

PotentialSpec = Union[str, Callable[[np.ndarray], np.ndarray]]


@dataclass(frozen=True)
class Grid:
    """
    均匀网格（仅内点，xmin 与 xmax 处为 Dirichlet 壁）

    Δ = (xmax − xmin)/(n+1)，x_j = xmin + (j+1)Δ，j = 0..n−1
    """

    xmin: float
    xmax: float
    n: int

    def __post_init__(self):
        if not self.xmax > self.xmin:
            raise GridError("网格需要 xmax > xmin", f"xmin={self.xmin}, xmax={self.xmax}")
        if self.n < 1:
            raise GridError("网格至少需要 1 个内点", f"n={self.n}")

    @property
    def spacing(self) -> float:
        return (self.xmax - self.xmin) / (self.n + 1)

    @property
    def points(self) -> np.ndarray:
        return self.xmin + (np.arange(self.n) + 1) * self.spacing

    def halved(self) -> "Grid":
        """同一区间上步长减半的网格"""
        return Grid(self.xmin, self.xmax, 2 * self.n + 1)


@dataclass(frozen=True)
class ModelParams:
    """
    模型参数

    Args:
        alpha: 漂移参数 α
        omega: 振子频率 ω（> 0）
        potential: 'harmonic'、'quartic' 或位置的采样函数
        quartic_g: quartic 势 ω²x²/2 + g·x⁴ 中的 g
    """

    alpha: float
    omega: float = 1.0
    potential: PotentialSpec = "harmonic"
    quartic_g: float = 0.0

    def __post_init__(self):
        if self.potential in ("harmonic", "quartic") and not self.omega > 0:
            raise GridError("谐振子频率 omega 必须为正", f"omega={self.omega}")

    def sample_potential(self, x: np.ndarray) -> np.ndarray:
        if callable(self.potential):
            return np.asarray(self.potential(x), dtype=float)
        V = 0.5 * self.omega ** 2 * x ** 2
        if self.potential == "quartic":
            V = V + self.quartic_g * x ** 4
        elif self.potential != "harmonic":
            raise GridError(f"未知势能类型 {self.potential!r}")
        return V


def build_position(grid: Grid) -> np.ndarray:
    return np.diag(grid.points).astype(complex)


def _central_difference(grid: Grid) -> np.ndarray:
    """D_{j,j±1} = ±1/(2Δ)，实反对称"""
    off = np.full(grid.n - 1, 1.0 / (2.0 * grid.spacing))
    return np.diag(off, 1) - np.diag(off, -1)


def build_momentum(grid: Grid) -> np.ndarray:
    """
    动量算子 p = −i·D（中心差分，Dirichlet）

    Returns:
        精确厄米的 n×n 复矩阵
    """
    return -1j * _central_difference(grid)


def build_momentum_squared(grid: Grid) -> np.ndarray:
    """
    动能部分使用的 p²：三点格式 (−1, 2, −1)/Δ²

    中心差分矩阵的平方只耦合同奇偶的格点，每个能级都会出现两次，
    所以 p² 不取 build_momentum 的平方。
    """
    inv = 1.0 / grid.spacing ** 2
    main = np.full(grid.n, 2.0 * inv)
    off = np.full(grid.n - 1, -inv)
    return (np.diag(main) + np.diag(off, 1) + np.diag(off, -1)).astype(complex)


def build_potential(grid: Grid, params: ModelParams) -> np.ndarray:
    return np.diag(params.sample_potential(grid.points)).astype(complex)


def build_hamiltonian(grid: Grid, params: ModelParams) -> np.ndarray:
    """
    H = ½(p − iα)² + V(x)，按展开式 ½p² − iαp − ½α² + V 组装

    Args:
        grid: 网格
        params: 模型参数

    Returns:
        n×n 复矩阵；α ≠ 0 时非厄米
    """
    p = build_momentum(grid)
    p2 = build_momentum_squared(grid)
    identity = np.eye(grid.n, dtype=complex)
    alpha = params.alpha
    H = 0.5 * p2 - 1j * alpha * p - 0.5 * alpha ** 2 * identity + build_potential(grid, params)
    logger.debug(f"已构建 H: n={grid.n}, Δ={grid.spacing:.6g}, α={alpha}, ω={params.omega}")
    return H


def reference_oscillator(grid: Grid, omega: float) -> np.ndarray:
    """同一动能格式下的厄米谐振子 ½(p² + ω²x²)"""
    return 0.5 * build_momentum_squared(grid) + build_potential(grid, ModelParams(alpha=0.0, omega=omega))


def _check_condition(grid: Grid, exponent: float, cond_cap: float) -> float:
    """检查 diag(e^{2·exponent·x_j}) 的条件数不超过上限，返回条件数"""
    x = grid.points
    log_cond = 2.0 * abs(exponent) * float(x[-1] - x[0])
    if log_cond > math.log(cond_cap):
        try:
            reported = math.exp(2.0 * abs(exponent) * (grid.xmax - grid.xmin))
        except OverflowError:
            reported = math.inf
        logger.error(f"度量算子条件数超限: e^{{{log_cond:.4g}}} > {cond_cap:.1e}")
        raise ConditionCapExceeded(reported, cond_cap)
    return condition_number_diag(np.exp(2.0 * exponent * x))


def build_metric(grid: Grid, alpha: float, cond_cap: float = CONDITION_CAP) -> np.ndarray:
    """
    连续度量 η₊ = e^{2αx} 在网格上的对角表示

    Args:
        grid: 网格
        alpha: α
        cond_cap: 条件数上限

    Returns:
        diag(e^{2α x_j})

    Raises:
        ConditionCapExceeded: 条件数超过 cond_cap
    """
    cond = _check_condition(grid, alpha, cond_cap)
    logger.info(f"连续度量 e^{{2αx}}: 条件数 {cond:.4e}")
    return np.diag(np.exp(2.0 * alpha * grid.points)).astype(complex)


def discrete_metric_exponent(grid: Grid, alpha: float) -> float:
    """
    三点格式 H 的精确度量指数 α_Δ = atanh(αΔ)/Δ

    α_Δ − α = α³Δ²/3 + O(Δ⁴)
    """
    a = alpha * grid.spacing
    if abs(a) >= 1.0:
        raise GridError("离散度量要求 |αΔ| < 1", f"αΔ={a:.4g}")
    if alpha == 0.0:
        return 0.0
    return math.atanh(a) / grid.spacing


def build_discrete_metric(grid: Grid, alpha: float, cond_cap: float = CONDITION_CAP) -> np.ndarray:
    """
    离散度量 diag(e^{2α_Δ x_j})：对 build_hamiltonian 的三点格式精确满足 H†η = ηH

    相邻格点的比值为 η_{j+1}/η_j = (1+αΔ)/(1−αΔ)。
    """
    exponent = discrete_metric_exponent(grid, alpha)
    cond = _check_condition(grid, exponent, cond_cap)
    logger.info(f"离散度量指数 α_Δ = {exponent:.12g}（α = {alpha}），条件数 {cond:.4e}")
    return np.diag(np.exp(2.0 * exponent * grid.points)).astype(complex)


def quadrature_weights(grid: Grid) -> np.ndarray:
    """内点上的矩形求积权重 w_j = Δ"""
    return np.full(grid.n, grid.spacing)


def interior_mask(grid: Grid, fraction: float = 0.5) -> np.ndarray:
    """|x − 中心| ≤ fraction·半宽 的格点"""
    centre = 0.5 * (grid.xmin + grid.xmax)
    half = 0.5 * (grid.xmax - grid.xmin)
    return np.abs(grid.points - centre) <= fraction * half


def similarity_model(seed, rho_diag) -> Tuple[np.ndarray, np.ndarray]:
    """H := ρ⁻¹·seed·ρ，η := ρ²（不检查 seed 的厄米性）"""
    seed = as_matrix(seed)
    require_square(seed)
    rho = np.asarray(rho_diag, dtype=float)
    if rho.shape != (seed.shape[0],):
        raise ShapeMismatch(f"ρ 对角元个数 {rho.shape} 与矩阵维数 {seed.shape} 不一致")
    bad = np.flatnonzero(~(rho > 0))
    if bad.size:
        raise NotPositive(int(bad[0]), float(rho[bad[0]]))
    H = (seed * rho[None, :]) / rho[:, None]
    eta = np.diag(rho ** 2).astype(complex)
    return H, eta


def algebraic_model(
    h_ref,
    rho_diag,
    hermiticity_tol: float = HERMITICITY_TOL,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    代数模式：由厄米 h 与正对角 ρ 构造精确伪厄米的 (H, η)

    Args:
        h_ref: 厄米矩阵
        rho_diag: ρ 的对角元（严格为正）
        hermiticity_tol: h_ref 的厄米性容差

    Returns:
        (H, η)，H = ρ⁻¹hρ，η = ρ²

    Raises:
        NotHermitian, NotPositive
    """
    h = as_matrix(h_ref)
    require_square(h)
    residual = hermiticity_residual(h)
    if residual > hermiticity_tol:
        raise NotHermitian(residual, hermiticity_tol)
    return similarity_model(h, rho_diag)


def make_grid(xmin: float, xmax: float, n: int, min_points: Optional[int] = None) -> Grid:
    """构造网格；给出 min_points 时检查分辨率"""
    if min_points is not None and n < min_points:
        raise GridError(f"网格点数至少为 {min_points}", f"n={n}")
    return Grid(float(xmin), float(xmax), int(n))
