"""淬火随机场数据模型"""
from dataclasses import dataclass
from enum import Enum

import numpy as np

from src.data.models.lattice import BoxSpec


class FieldConvention(str, Enum):
    """场的方差约定

    UNIT: h ~ N(0, 1)，哈密顿量里乘 ε
    LITERAL: h ~ N(0, ε^{-2})，按原始定义
    """
    UNIT = "unit"
    LITERAL = "literal"


@dataclass(frozen=True, eq=False)
class FieldRealization:
    """一个盒子上的随机场实现，values 形状为 ((2N+1)², q)，行优先"""
    spec: BoxSpec
    q: int
    epsilon: float
    seed: int
    convention: FieldConvention
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def site_weights(self) -> np.ndarray:
        """每个格点上 q 个分量之和"""
        return self.values.sum(axis=1)

    def scaled(self, factor: float) -> "FieldRealization":
        """所有分量乘同一个常数"""
        return FieldRealization(self.spec, self.q, self.epsilon, self.seed,
                                self.convention, self.values * factor)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FieldRealization):
            return NotImplemented
        return (self.spec == other.spec and self.q == other.q
                and self.epsilon == other.epsilon and self.seed == other.seed
                and self.convention == other.convention
                and np.array_equal(self.values, other.values))

    __hash__ = None
