"""自旋构型与边界条件数据模型"""
import math
import re
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from src.core.exceptions import DomainError, ParameterError
from src.data.models.lattice import BoxSpec


class BoundaryKind(str, Enum):
    WIRED = "wired"
    FREE = "free"


_WIRED_PATTERN = re.compile(r"^wired\((\d+)\)$")


@dataclass(frozen=True)
class BoundaryCondition:
    """边界条件：wired(c) 把 |v|_∞ = N 的格点固定为颜色 c；free 不加约束"""
    kind: BoundaryKind
    color: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "kind", BoundaryKind(self.kind))
        if self.kind is BoundaryKind.WIRED:
            if self.color is None or self.color < 0:
                raise ParameterError(f"wired 边界需要非负颜色: {self.color}")
        elif self.color is not None:
            raise ParameterError("free 边界不带颜色")

    @classmethod
    def wired(cls, color: int = 0) -> "BoundaryCondition":
        return cls(BoundaryKind.WIRED, int(color))

    @classmethod
    def free(cls) -> "BoundaryCondition":
        return cls(BoundaryKind.FREE)

    @classmethod
    def parse(cls, text: str) -> "BoundaryCondition":
        """解析 `free`、`wired` 或 `wired(c)`"""
        text = text.strip().lower()
        if text == "free":
            return cls.free()
        if text == "wired":
            return cls.wired(0)
        match = _WIRED_PATTERN.match(text)
        if match is None:
            raise ParameterError(f"无法解析边界条件: {text!r}")
        return cls.wired(int(match.group(1)))

    @property
    def is_wired(self) -> bool:
        return self.kind is BoundaryKind.WIRED

    def check(self, q: int) -> None:
        if self.is_wired and self.color >= q:
            raise DomainError(f"wired 颜色 {self.color} 超出了 0..{q - 1}")

    def __str__(self) -> str:
        return f"wired({self.color})" if self.is_wired else "free"


@dataclass(frozen=True)
class GibbsParams:
    """逆温度 β（可以为 +∞）和场耦合 ε"""
    beta: float
    epsilon: float

    def __post_init__(self):
        if math.isnan(self.beta) or not self.beta > 0:
            raise ParameterError(f"逆温度必须为正: beta={self.beta}")
        if not self.epsilon > 0 or not math.isfinite(self.epsilon):
            raise ParameterError(f"场耦合必须为正: eps={self.epsilon}")

    @property
    def is_ground_state(self) -> bool:
        return math.isinf(self.beta)


@dataclass(frozen=True, eq=False)
class SpinConfig:
    """Λ_N 上的自旋构型，spins 为行优先的颜色标号"""
    spec: BoxSpec
    q: int
    spins: np.ndarray
    bc: BoundaryCondition

    def __post_init__(self):
        spins = np.array(self.spins, dtype=np.int64).ravel()
        if spins.shape[0] != self.spec.site_count:
            raise DomainError(f"自旋数 {spins.shape[0]} 与 Λ_{self.spec.N} 不匹配")
        if spins.size and (spins.min() < 0 or spins.max() >= self.q):
            raise DomainError(f"自旋标号必须在 0..{self.q - 1} 之间")
        self.bc.check(self.q)
        if self.bc.is_wired:
            mask = boundary_mask(self.spec)
            if np.any(spins[mask] != self.bc.color):
                raise DomainError(f"wired 边界上的自旋必须全为 {self.bc.color}")
        spins.setflags(write=False)
        object.__setattr__(self, "spins", spins)

    @classmethod
    def constant(cls, spec: BoxSpec, q: int, color: int,
                 bc: Optional[BoundaryCondition] = None) -> "SpinConfig":
        bc = bc or BoundaryCondition.free()
        spins = np.full(spec.site_count, color, dtype=np.int64)
        if bc.is_wired:
            spins[boundary_mask(spec)] = bc.color
        return cls(spec, q, spins, bc)

    def with_spins(self, spins: np.ndarray) -> "SpinConfig":
        return SpinConfig(self.spec, self.q, spins, self.bc)

    @property
    def origin_spin(self) -> int:
        return int(self.spins[self.spec.site_count // 2])

    def digits(self) -> str:
        """行优先的颜色数字串，q ≤ 10 时每格一位"""
        if self.q > 10:
            return " ".join(str(int(s)) for s in self.spins)
        return "".join(str(int(s)) for s in self.spins)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SpinConfig):
            return NotImplemented
        return (self.spec == other.spec and self.q == other.q and self.bc == other.bc
                and np.array_equal(self.spins, other.spins))

    __hash__ = None


def boundary_mask(spec: BoxSpec) -> np.ndarray:
    """行优先的布尔数组，标出 |v|_∞ = N 的格点"""
    side = spec.side
    grid = np.zeros((side, side), dtype=bool)
    grid[0, :] = grid[-1, :] = True
    grid[:, 0] = grid[:, -1] = True
    return grid.ravel()


@dataclass(frozen=True, eq=False)
class GibbsTable:
    """全部构型的 Gibbs 概率表；configs 按自由格点的字典序排列"""
    q: int
    beta: float
    configs: np.ndarray
    energies: np.ndarray
    probabilities: np.ndarray

    def __len__(self) -> int:
        return self.configs.shape[0]

    def marginal(self, site_index: int) -> np.ndarray:
        """单个格点颜色的边缘分布"""
        return np.bincount(self.configs[:, site_index], weights=self.probabilities,
                           minlength=self.q)

    @property
    def expected_energy(self) -> float:
        return float(np.dot(self.probabilities, self.energies))

    def most_probable(self) -> np.ndarray:
        """概率最大的构型，并列时取字典序最小者"""
        return self.configs[int(np.argmax(self.probabilities))].astype(np.int64)

    def probability_of(self, spins) -> float:
        matches = np.all(self.configs == np.asarray(spins), axis=1)
        return float(self.probabilities[matches].sum())
