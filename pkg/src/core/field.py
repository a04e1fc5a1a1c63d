"""
淬火高斯随机场 h_i^α 的生成与求值，以及格点动物的权重 w(A)

随机数按 (seed, 格点坐标) 取自计数器型 Philox 流，同一格点的 q 个分量是
该流的前 q 个输出。因此同一 seed 下小盒子的场就是大盒子场的限制，
按格点分块并行生成时结果与调度无关。
"""
import logging
import math
from typing import Iterable, List, Tuple

import numpy as np

from src.core.exceptions import DomainError, ParameterError
from src.core.lattice import sites_of_box
from src.data.models.field import FieldConvention, FieldRealization
from src.data.models.lattice import BoxSpec, LatticeAnimal
from src.utils.rng import MASK64, site_gaussians

logger = logging.getLogger(__name__)


def _check_parameters(q: int, epsilon: float) -> None:
    if q < 2:
        raise ParameterError(f"颜色数 q 至少为 2: q={q}")
    if not epsilon > 0 or not math.isfinite(epsilon):
        raise ParameterError(f"场强 ε 必须为正: eps={epsilon}")


def sample_field(spec: BoxSpec, q: int, epsilon: float, seed: int,
                 convention: FieldConvention = FieldConvention.UNIT) -> FieldRealization:
    """生成一个场实现；参数相同则逐位相同"""
    _check_parameters(q, epsilon)
    convention = FieldConvention(convention)
    seed = int(seed) & MASK64

    values = np.empty((spec.site_count, q), dtype=np.float64)
    for index, site in enumerate(sites_of_box(spec)):
        values[index] = site_gaussians(seed, site, q)

    # 文字约定 = 单位方差场逐项除以 ε
    if convention is FieldConvention.LITERAL:
        values = values / epsilon

    logger.debug(f"生成随机场 N={spec.N} q={q} eps={epsilon} seed={seed} conv={convention.value}")
    return FieldRealization(spec, q, float(epsilon), seed, convention, values)


def field_from_values(spec: BoxSpec, values, epsilon: float = 1.0, seed: int = 0,
                      convention: FieldConvention = FieldConvention.UNIT) -> FieldRealization:
    """用给定数组构造场，供注入特定场（全零、单峰等）使用"""
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 2 or values.shape[0] != spec.site_count:
        raise DomainError(f"场数组形状 {values.shape} 与 Λ_{spec.N} 不匹配")
    _check_parameters(values.shape[1], epsilon)
    if not np.all(np.isfinite(values)):
        raise ParameterError("场数组含有非有限值")
    return FieldRealization(spec, values.shape[1], float(epsilon), int(seed),
                            FieldConvention(convention), values)


def constant_field(spec: BoxSpec, q: int, value: float = 0.0,
                   epsilon: float = 1.0) -> FieldRealization:
    """每个分量都等于 value 的场"""
    return field_from_values(spec, np.full((spec.site_count, q), float(value)), epsilon)


def _site_indices(field: FieldRealization, sites: Iterable[Tuple[int, int]]) -> List[int]:
    spec = field.spec
    indices = []
    for site in sites:
        if not spec.contains(site):
            raise DomainError(f"格点 {tuple(site)} 不在盒子 Λ_{spec.N} 内")
        indices.append(spec.index(site))
    return indices


def site_set_weight(field: FieldRealization, sites: Iterable[Tuple[int, int]]) -> float:
    """Σ_{i∈S} Σ_α h_i^α；用 fsum 精确舍入，结果与求和顺序无关"""
    indices = _site_indices(field, sites)
    return math.fsum(field.values[indices].ravel().tolist())


def color_weights(field: FieldRealization, sites: Iterable[Tuple[int, int]]) -> List[float]:
    """按颜色分开的权重 Σ_{i∈S} h_i^α，α = 0..q-1"""
    indices = _site_indices(field, sites)
    block = field.values[indices]
    return [math.fsum(block[:, alpha].tolist()) for alpha in range(field.q)]


def animal_weight(field: FieldRealization, animal: LatticeAnimal) -> float:
    """w(A) = Σ_{i∈A} Σ_{α=0}^{q-1} h_i^α"""
    return site_set_weight(field, animal.sites)
