"""算法参数模型"""
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, Optional

from src.core.exceptions import ParameterError

GLA_METHODS = ("exact", "greedy", "anneal")
NUMERATORS = ("all_colors", "per_color")
GROUND_STATE_METHODS = ("exhaustive", "anneal", "icm")
THERMAL_METHODS = ("heat_bath", "exact")


@dataclass(frozen=True)
class AnnealSchedule:
    """几何降温：T 从 T0 降到 Tend，共 sweeps 轮"""
    T0: float = 2.0
    Tend: float = 0.01
    sweeps: int = 200
    moves_per_sweep: int = 64

    def __post_init__(self):
        if not (self.T0 > self.Tend > 0):
            raise ParameterError(f"退火温度需满足 T0 > Tend > 0: T0={self.T0}, Tend={self.Tend}")
        if self.sweeps < 1 or self.moves_per_sweep < 1:
            raise ParameterError("退火轮数和每轮步数必须为正")

    def temperature(self, sweep: int) -> float:
        if self.sweeps == 1:
            return self.Tend
        return self.T0 * (self.Tend / self.T0) ** (sweep / (self.sweeps - 1))


@dataclass(frozen=True)
class OptimizerSpec:
    """GLA 优化器配置"""
    method: str = "exact"
    max_size: Optional[int] = 8
    steps: int = 10_000
    schedule: AnnealSchedule = field(default_factory=AnnealSchedule)
    numerator: str = "all_colors"

    def __post_init__(self):
        if self.method not in GLA_METHODS:
            raise ParameterError(f"未知的优化方法: {self.method}")
        if self.numerator not in NUMERATORS:
            raise ParameterError(f"未知的分子类型: {self.numerator}")
        if self.method == "exact" and not self.max_size:
            raise ParameterError("精确方法需要 max_size")

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class MonteCarloParams:
    """磁化强度估计的采样参数

    β 有限时用 thermal_method（热浴或精确 Gibbs 表），β = ∞ 时用基态方法。
    """
    thermal_method: str = "heat_bath"
    ground_state_method: str = "anneal"
    burn_in: int = 200
    sweeps: int = 2000
    anneal_sweeps: int = 300
    anneal_beta0: float = 0.2
    anneal_beta1: float = 8.0

    def __post_init__(self):
        if self.thermal_method not in THERMAL_METHODS:
            raise ParameterError(f"未知的热力学方法: {self.thermal_method}")
        if self.ground_state_method not in GROUND_STATE_METHODS:
            raise ParameterError(f"未知的基态方法: {self.ground_state_method}")
        if self.sweeps < 1 or self.burn_in < 0 or self.anneal_sweeps < 1:
            raise ParameterError("扫描次数必须为正")
        if not (0 < self.anneal_beta0 < self.anneal_beta1):
            raise ParameterError("退火 β 需满足 0 < beta0 < beta1")

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class SearchParams:
    """关联长度搜索区间：从 N_start 开始按 factor 倍增到 N_max"""
    N_start: int = 1
    N_max: int = 32
    factor: int = 2

    def __post_init__(self):
        if self.N_start < 1 or self.N_max < self.N_start or self.factor < 2:
            raise ParameterError(
                f"搜索参数不合法: N_start={self.N_start}, N_max={self.N_max}, factor={self.factor}"
            )


@dataclass(frozen=True)
class StatsParams:
    """无序平均的样本数与起始种子"""
    disorder_samples: int = 100
    base_seed: int = 1

    def __post_init__(self):
        if self.disorder_samples < 2:
            raise ParameterError(f"无序样本数至少为 2: {self.disorder_samples}")


def is_infinite(beta: float) -> bool:
    return math.isinf(beta)
