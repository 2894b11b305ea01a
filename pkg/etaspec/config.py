"""
配置文件：数值容差、网格默认值、运行配置的加载与校验
"""
import dataclasses
import logging
import os
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, get_args, get_type_hints

from etaspec.errors import ConfigError

logger = logging.getLogger(__name__)

# ==================== 数值容差 ====================
HERMITICITY_TOL = 1e-10     # ‖A − A†‖_F ≤ tol·‖A‖_F
RESIDUAL_TOL = 1e-8         # 本征对残差 ‖Av − λv‖ ≤ tol·‖A‖·‖v‖
DEFECT_TOL = 1e-10          # 归一化本征向量矩阵 σ_min/σ_max 的下限
POSITIVITY_FLOOR = 1e-13    # 相对于最大本征值的正定性下限
DEPENDENCY_TOL = 1e-10      # Gram–Schmidt 线性相关判据（相对）
CLUSTER_TOL = 1e-8          # 简并聚类容差（相对于谱直径）
REAL_TOL_ALGEBRAIC = 1e-8
REAL_TOL_FD = 1e-6
ADMISSIBILITY_TOL = 1e-6
GRAM_TOL = 1e-8
PROJECTION_TOL = 1e-6
CONDITION_CAP = 1e12

# ==================== 网格与模型默认值 ====================
DEFAULT_XMIN = -10.0
DEFAULT_XMAX = 10.0
DEFAULT_GRID_N = 801
MIN_GRID_N = 8
DEFAULT_ALPHA = 0.3
DEFAULT_OMEGA = 1.0
DEFAULT_N_STATES = 10

# 代数模式：ρ 对角元在 [RHO_MIN, RHO_MAX] 内对数均匀分布
ALGEBRAIC_DIM = 20
ALGEBRAIC_RHO_MIN = 0.1
ALGEBRAIC_RHO_MAX = 10.0
DEFAULT_SEED = 20240601

# ==================== 时间演化 ====================
DEFAULT_T_MAX = 10.0
DEFAULT_TIME_STEPS = 101
ISOMETRY_SAMPLES = 100

# ==================== 输出配置 ====================
OUTPUT_DIR = "output"
LOG_FILENAME = "etaspec.log"
SPECTRUM_CSV = "spectrum.csv"
SPECTRUM_JSON = "spectrum.json"
REPORT_JSON = "report.json"
TRAJECTORY_CSV = "trajectory.csv"
EVOLVE_SUMMARY_JSON = "evolve_summary.json"
EQUIVALENT_MATRIX = "equivalent_h.txt"
EQUIVALENT_JSON = "equivalent.json"

# 控制台输出的能级行数
TOP_N_DISPLAY = 20

# ==================== 并行 ====================
# 内部并行线程上限（环境变量，可选）
THREADS_ENV = "ETASPEC_THREADS"

MODES = ("fd-oscillator", "algebraic", "matrix-files")
FD_METRICS = ("discrete", "continuum")
POTENTIALS = ("harmonic", "quartic")
SEED_KINDS = ("hermitian", "non_hermitian")
INITIAL_STATES = ("superposition", "ground", "random")


def thread_cap() -> int:
    """
    读取 ETASPEC_THREADS，返回内部并行的线程上限

    Returns:
        线程数（至少为 1）；未设置或无法解析时为 1
    """
    raw = os.getenv(THREADS_ENV)
    if not raw:
        return 1
    try:
        return max(1, int(raw))
    except ValueError:
        logger.warning(f"{THREADS_ENV}={raw!r} 无法解析为整数，使用单线程")
        return 1


@dataclass
class GridConfig:
    xmin: float = DEFAULT_XMIN
    xmax: float = DEFAULT_XMAX
    n: int = DEFAULT_GRID_N


@dataclass
class TimesConfig:
    t_max: float = DEFAULT_T_MAX
    steps: int = DEFAULT_TIME_STEPS


@dataclass
class Tolerances:
    hermiticity: float = HERMITICITY_TOL
    residual: float = RESIDUAL_TOL
    defect: float = DEFECT_TOL
    positivity_floor: float = POSITIVITY_FLOOR
    dependency: float = DEPENDENCY_TOL
    cluster: float = CLUSTER_TOL
    real: Optional[float] = None
    admissibility: float = ADMISSIBILITY_TOL
    gram: float = GRAM_TOL
    projection: float = PROJECTION_TOL
    cond_cap: float = CONDITION_CAP


@dataclass
class Thresholds:
    """verify 命令中各残差的通过阈值（None 表示按模式取默认值）"""

    pseudo_hermiticity: Optional[float] = None
    pseudo_hermiticity_continuum: Optional[float] = None
    gram: float = GRAM_TOL
    hermiticity_h: Optional[float] = None
    isometry: Optional[float] = None
    unitarity: Optional[float] = None
    equivalence: Optional[float] = None
    norm_drift: Optional[float] = None
    completeness: Optional[float] = None
    observable: Optional[float] = None


@dataclass
class FdConfig:
    metric: str = "discrete"


@dataclass
class PotentialConfig:
    kind: str = "harmonic"
    g: float = 0.0


@dataclass
class AlgebraicConfig:
    dim: int = ALGEBRAIC_DIM
    rho_min: float = ALGEBRAIC_RHO_MIN
    rho_max: float = ALGEBRAIC_RHO_MAX
    seed_kind: str = "hermitian"
    instances: int = 1


@dataclass
class MatrixFilesConfig:
    hamiltonian: str = ""
    metric: str = ""


@dataclass
class EvolveConfig:
    initial: str = "superposition"


@dataclass
class VerifyConfig:
    isometry_samples: int = ISOMETRY_SAMPLES


@dataclass
class RunConfig:
    mode: str = "fd-oscillator"
    alpha: float = DEFAULT_ALPHA
    omega: float = DEFAULT_OMEGA
    grid: GridConfig = field(default_factory=GridConfig)
    n_states: int = DEFAULT_N_STATES
    tolerances: Tolerances = field(default_factory=Tolerances)
    thresholds: Thresholds = field(default_factory=Thresholds)
    times: TimesConfig = field(default_factory=TimesConfig)
    seed: int = DEFAULT_SEED
    output_dir: str = OUTPUT_DIR
    fd: FdConfig = field(default_factory=FdConfig)
    potential: PotentialConfig = field(default_factory=PotentialConfig)
    algebraic: AlgebraicConfig = field(default_factory=AlgebraicConfig)
    matrix: MatrixFilesConfig = field(default_factory=MatrixFilesConfig)
    evolve: EvolveConfig = field(default_factory=EvolveConfig)
    verify: VerifyConfig = field(default_factory=VerifyConfig)

    def echo(self) -> dict:
        """配置回显（写入报告元数据）"""
        return dataclasses.asdict(self)


# fd-oscillator 模式的阈值；continuum 度量时部分阈值放宽
_FD_THRESHOLDS = {
    "pseudo_hermiticity": 1e-10,
    "pseudo_hermiticity_continuum": 1e-2,
    "gram": 1e-8,
    "hermiticity_h": 1e-8,
    "isometry": 1e-10,
    "unitarity": 1e-8,
    "equivalence": 1e-3,
    "norm_drift": 1e-10,
    "completeness": 1e-8,
    "observable": 1e-8,
}
_FD_CONTINUUM_OVERRIDES = {
    "pseudo_hermiticity": 1e-2,
    "hermiticity_h": 1e-6,
    "observable": 1e-6,
}
_ALGEBRAIC_THRESHOLD = 1e-10


def resolve_defaults(config: RunConfig) -> RunConfig:
    """
    按运行模式填充未显式设置（None）的容差与阈值

    Args:
        config: 运行配置（原地修改）

    Returns:
        同一个配置对象
    """
    fd_mode = config.mode == "fd-oscillator"
    continuum = fd_mode and config.fd.metric == "continuum"
    tol = config.tolerances
    if tol.real is None:
        tol.real = REAL_TOL_FD if fd_mode else REAL_TOL_ALGEBRAIC

    for f in dataclasses.fields(Thresholds):
        if getattr(config.thresholds, f.name) is not None:
            continue
        if fd_mode:
            value = _FD_THRESHOLDS[f.name]
            if continuum:
                value = _FD_CONTINUUM_OVERRIDES.get(f.name, value)
        else:
            value = _ALGEBRAIC_THRESHOLD
        setattr(config.thresholds, f.name, value)
    return config


def _parse_value(raw: str, target_type, key: str):
    """按字段声明的类型解析字符串值"""
    args = [a for a in get_args(target_type) if a is not type(None)]
    if args:
        target_type = args[0]
    text = raw.strip()
    if len(text) >= 2 and text[0] == text[-1] and text[0] in "\"'":
        text = text[1:-1]
    try:
        if target_type is int:
            return int(text)
        if target_type is float:
            return float(text)
        if target_type is str:
            return text
    except ValueError:
        raise ConfigError(f"配置项 {key} 的值无法解析: {raw!r}")
    raise ConfigError(f"配置项 {key} 不是标量")


def set_option(config: RunConfig, key: str, raw: str) -> None:
    """
    设置一个点分键（如 grid.n、tolerances.real）

    Args:
        config: 运行配置
        key: 点分键
        raw: 原始字符串值

    Raises:
        ConfigError: 未知键或值无法解析
    """
    parts = key.strip().split(".")
    target = config
    for part in parts[:-1]:
        if not dataclasses.is_dataclass(target) or part not in {f.name for f in dataclasses.fields(target)}:
            raise ConfigError(f"未知配置项: {key}")
        target = getattr(target, part)
        if not dataclasses.is_dataclass(target):
            raise ConfigError(f"未知配置项: {key}")
    name = parts[-1]
    if not dataclasses.is_dataclass(target) or name not in {f.name for f in dataclasses.fields(target)}:
        raise ConfigError(f"未知配置项: {key}")
    hints = get_type_hints(type(target))
    if dataclasses.is_dataclass(hints[name]):
        raise ConfigError(f"配置项 {key} 是一个分组，需要使用 {key}.<字段>")
    setattr(target, name, _parse_value(raw, hints[name], key))


def _strip_comment(line: str) -> str:
    """去掉引号外 # 之后的注释"""
    quote = None
    for i, ch in enumerate(line):
        if quote:
            if ch == quote:
                quote = None
        elif ch in "\"'":
            quote = ch
        elif ch == "#":
            return line[:i]
    return line


def parse_config_text(text: str, config: Optional[RunConfig] = None) -> RunConfig:
    """
    解析 key = value 格式的配置文本，支持 [section] 与点分键

    Args:
        text: 配置文本
        config: 在此配置上叠加；为 None 时从默认值开始

    Returns:
        运行配置（尚未填充模式默认值）
    """
    config = config if config is not None else RunConfig()
    section = ""
    for lineno, line in enumerate(text.splitlines(), 1):
        stripped = _strip_comment(line).strip()
        if not stripped:
            continue
        if stripped.startswith("[") and stripped.endswith("]"):
            section = stripped[1:-1].strip()
            continue
        if "=" not in stripped:
            raise ConfigError(f"第 {lineno} 行缺少 '=': {line!r}")
        key, raw = stripped.split("=", 1)
        key = key.strip()
        if section:
            key = f"{section}.{key}"
        set_option(config, key, raw)
    return config


def validate_config(config: RunConfig) -> None:
    """校验运行配置的不变量，违反时抛出 ConfigError"""
    if config.mode not in MODES:
        raise ConfigError(f"未知模式 {config.mode!r}，可选: {', '.join(MODES)}")
    if config.fd.metric not in FD_METRICS:
        raise ConfigError(f"fd.metric 必须是 {FD_METRICS} 之一")
    if config.potential.kind not in POTENTIALS:
        raise ConfigError(f"potential.kind 必须是 {POTENTIALS} 之一")
    if config.algebraic.seed_kind not in SEED_KINDS:
        raise ConfigError(f"algebraic.seed_kind 必须是 {SEED_KINDS} 之一")
    if config.evolve.initial not in INITIAL_STATES:
        raise ConfigError(f"evolve.initial 必须是 {INITIAL_STATES} 之一")
    if config.omega <= 0:
        raise ConfigError(f"omega 必须为正数: {config.omega}")
    if config.grid.n < MIN_GRID_N:
        raise ConfigError(f"grid.n 至少为 {MIN_GRID_N}: {config.grid.n}")
    if not config.grid.xmax > config.grid.xmin:
        raise ConfigError("grid.xmax 必须大于 grid.xmin")
    if config.n_states < 1:
        raise ConfigError("n_states 至少为 1")
    if config.mode == "fd-oscillator" and config.n_states > config.grid.n:
        raise ConfigError(f"n_states ({config.n_states}) 不能超过 grid.n ({config.grid.n})")
    if config.times.t_max < 0:
        raise ConfigError("times.t_max 不能为负")
    if config.times.steps < 1:
        raise ConfigError("times.steps 至少为 1")
    if config.algebraic.dim < 1 or config.algebraic.instances < 1:
        raise ConfigError("algebraic.dim 与 algebraic.instances 至少为 1")
    if config.algebraic.seed_kind == "non_hermitian" and config.algebraic.dim < 2:
        raise ConfigError("algebraic.seed_kind = non_hermitian 需要 algebraic.dim >= 2")
    if not 0 < config.algebraic.rho_min <= config.algebraic.rho_max:
        raise ConfigError("需要 0 < algebraic.rho_min <= algebraic.rho_max")
    if config.verify.isometry_samples < 1:
        raise ConfigError("verify.isometry_samples 至少为 1")
    if config.mode == "matrix-files" and not (config.matrix.hamiltonian and config.matrix.metric):
        raise ConfigError("matrix-files 模式需要 matrix.hamiltonian 与 matrix.metric")
    for group in (config.tolerances, config.thresholds):
        for f in dataclasses.fields(group):
            value = getattr(group, f.name)
            if value is not None and not value > 0:
                raise ConfigError(f"{f.name} 必须为正数: {value}")


def load_config(
    path: Optional[str] = None,
    overrides: Sequence[str] = (),
    output_dir: Optional[str] = None,
) -> RunConfig:
    """
    加载运行配置：默认值 <- 配置文件 <- --override <- --out

    Args:
        path: 配置文件路径（UTF-8），可选
        overrides: 形如 key=value 的覆盖项
        output_dir: 输出目录覆盖

    Returns:
        校验后、已按模式填充默认值的 RunConfig
    """
    config = RunConfig()
    if path:
        try:
            with open(path, "r", encoding="utf-8") as f:
                text = f.read()
        except OSError as e:
            raise ConfigError(f"无法读取配置文件 {path}: {e}")
        parse_config_text(text, config)
        logger.info(f"已加载配置文件: {path}")
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"--override 需要 key=value 形式: {item!r}")
        key, raw = item.split("=", 1)
        set_option(config, key, raw)
    if output_dir:
        config.output_dir = output_dir
    validate_config(config)
    return resolve_defaults(config)


def threshold_map(config: RunConfig) -> Dict[str, float]:
    """阈值字典（仅在 resolve_defaults 之后调用）"""
    return {f.name: float(getattr(config.thresholds, f.name)) for f in dataclasses.fields(Thresholds)}
