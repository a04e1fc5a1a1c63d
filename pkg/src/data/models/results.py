"""计算结果数据模型"""
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

from src.core.exceptions import ParameterError
from src.data.models.lattice import LatticeAnimal


@dataclass(frozen=True)
class GlaResult:
    """贪婪格点动物：最优动物、得分 w(A)/|∂A|、方法与权重求值次数"""
    animal: LatticeAnimal
    score: float
    method: str
    evaluations: int


@dataclass(frozen=True)
class GlaSample:
    """一个无序样本上的 GLA 结果"""
    seed: int
    result: GlaResult


@dataclass(frozen=True)
class TailEstimate:
    """P[score > Ĉ + u] 的经验估计，bound = exp(-u²/2)"""
    threshold: float
    exceed_count: int
    samples: int
    bound: float
    center: float

    @property
    def fraction(self) -> float:
        return self.exceed_count / self.samples

    @property
    def binomial_sigma(self) -> float:
        """以 bound 为成功概率的二项标准差（按比例）"""
        p = min(self.bound, 1.0)
        return math.sqrt(p * (1.0 - p) / self.samples)


@dataclass(frozen=True)
class SeriesPoint:
    x: float
    y: float
    yerr: float = 0.0


@dataclass(frozen=True)
class ScalingSeries:
    """(控制参数, 估计值, 标准误) 序列；x 严格递增"""
    points: Tuple[SeriesPoint, ...]
    transform: str = "identity"

    def __post_init__(self):
        points = tuple(sorted(self.points, key=lambda p: p.x))
        for a, b in zip(points, points[1:]):
            if not a.x < b.x:
                raise ParameterError(f"x 必须严格递增，重复值: {b.x}")
        if any(p.yerr < 0 for p in points):
            raise ParameterError("标准误不能为负")
        object.__setattr__(self, "points", points)

    @classmethod
    def from_arrays(cls, xs, ys, yerrs=None, transform: str = "identity") -> "ScalingSeries":
        yerrs = yerrs if yerrs is not None else [0.0] * len(xs)
        return cls(tuple(SeriesPoint(float(x), float(y), float(e))
                         for x, y, e in zip(xs, ys, yerrs)), transform)

    def __len__(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class FitResult:
    """变换坐标下的加权最小二乘直线"""
    slope: float
    intercept: float
    stderr_slope: float
    residuals: Tuple[float, ...]
    x_map: str
    y_map: str
    weighted: bool


@dataclass
class CorrelationLengthResult:
    """关联长度搜索结果；found=False 时 L 为 None，bracket 给出搜索到的区间"""
    epsilon: float
    threshold: float
    L: Optional[int]
    bracket: Tuple[int, int]
    m_at_L: Optional[float]
    found: bool
    evaluations: List[Tuple[int, float, float]] = field(default_factory=list)


@dataclass
class ExperimentResult:
    """标度实验输出：序列、拟合（可能失败）与溯源信息"""
    series: ScalingSeries
    fit: Optional[FitResult]
    fit_error: Optional[str]
    provenance: Dict[str, Any]
    excluded: List[Any] = field(default_factory=list)


@dataclass(frozen=True)
class MagnetizationRecord:
    """单个无序样本：wired 与 free 下原点取 wired 颜色的概率，以及对应能量

    β 有限时能量为热平均 ⟨H⟩，β = ∞ 时为基态能量。
    gla_score / gla_indicator 只在要求对照 GLA 时填写。
    """
    seed: int
    N: int
    q: int
    epsilon: float
    beta: float
    bc: str
    p0_wired: float
    p0_free: float
    energy_w: float
    energy_f: float
    gla_score: Optional[float] = None
    gla_indicator: Optional[bool] = None

    @property
    def value(self) -> float:
        """(q/(q-1))·(p_w - p_f)"""
        return self.q / (self.q - 1) * (self.p0_wired - self.p0_free)
