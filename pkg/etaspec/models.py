"""
解析模型模块：平移谐振子的 Hermite 多项式、归一化常数、本征函数及其在 η₊、ρ 下的像
"""
import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import gammaln

from etaspec.discretize import Grid
from etaspec.errors import GridError

logger = logging.getLogger(__name__)

Evaluator = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class OscillatorModel:
    alpha: float
    omega: float = 1.0

    def __post_init__(self):
        if not self.omega > 0:
            raise GridError("谐振子频率 omega 必须为正", f"omega={self.omega}")


@dataclass(frozen=True)
class AnalyticEigenstate:
    """解析本征态：量子数 n、能量 ω(n+½) 与位置表象下的求值函数"""

    n: int
    energy: float
    evaluator: Evaluator

    def __call__(self, x) -> np.ndarray:
        return self.evaluator(x)


def _check_n(n: int) -> int:
    if n < 0:
        raise ValueError(f"量子数必须非负: {n}")
    return int(n)


def hermite(n: int, y):
    """
    物理学约定的 Hermite 多项式 H_n(y)，三项递推

    H_{k+1} = 2y·H_k − 2k·H_{k−1}，H₀ = 1，H₁ = 2y

    Args:
        n: 阶数（≥ 0）
        y: 标量或数组

    Returns:
        与 y 同形状的 H_n(y)
    """
    n = _check_n(n)
    y = np.asarray(y, dtype=float)
    prev = np.ones_like(y)
    if n == 0:
        return prev if prev.ndim else float(prev)
    curr = 2.0 * y
    for k in range(1, n):
        prev, curr = curr, 2.0 * y * curr - 2.0 * k * prev
    return curr if curr.ndim else float(curr)


def normalization(n: int, model: OscillatorModel) -> float:
    """
    N_n = (ω/π)^{1/4} / √(2ⁿ n!)，在对数空间计算

    使 ∫e^{2αx}|ψ_n(x)|²dx = 1。
    """
    n = _check_n(n)
    log_n = 0.25 * np.log(model.omega / np.pi) - 0.5 * (n * np.log(2.0) + gammaln(n + 1))
    return float(np.exp(log_n))


def _hermite_function(n: int, model: OscillatorModel, shift: float) -> Evaluator:
    """x ↦ N_n·H_n(√ω x)·e^{−ωx²/2 + shift·x}"""
    norm = normalization(n, model)
    root = np.sqrt(model.omega)

    def evaluate(x):
        x = np.asarray(x, dtype=float)
        return norm * hermite(n, root * x) * np.exp(-0.5 * model.omega * x ** 2 + shift * x)

    return evaluate


def analytic_energy(n: int, model: OscillatorModel) -> float:
    return model.omega * (_check_n(n) + 0.5)


def psi(n: int, model: OscillatorModel) -> AnalyticEigenstate:
    """ψ_n(x) = N_n·H_n(√ω x)·e^{−ωx²/2 − αx}"""
    return AnalyticEigenstate(
        n=_check_n(n),
        energy=analytic_energy(n, model),
        evaluator=_hermite_function(n, model, -model.alpha),
    )


def eta_psi(n: int, model: OscillatorModel) -> Evaluator:
    """η₊ψ_n = e^{2αx}·ψ_n(x)"""
    return _hermite_function(n, model, model.alpha)


def rho_psi(n: int, model: OscillatorModel) -> Evaluator:
    """ρψ_n = e^{αx}·ψ_n(x)：标准 Hermite 函数，与 α 无关"""
    return _hermite_function(n, model, 0.0)


def sample_on_grid(evaluator: Evaluator, grid: Grid) -> np.ndarray:
    """在网格点上求值，返回复向量"""
    values = np.asarray(evaluator(grid.points), dtype=complex)
    return np.broadcast_to(values, (grid.n,)).copy()


def analytic_spectrum(count: int, model: OscillatorModel) -> np.ndarray:
    """前 count 个解析能级"""
    return model.omega * (np.arange(count) + 0.5)
