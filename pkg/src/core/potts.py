"""
随机场 Potts 模型

H(s) = -[Σ_{i∼j} δ(s_i, s_j) + Σ_i Σ_α ε·h_i^α·δ(s_i, α)]，β 只出现在 Gibbs 权重
exp(-βH) 中。wired 边界把 |v|_∞ = N 的格点固定为同一颜色，场作用在所有格点上。

- exact_gibbs: 小盒子上的精确概率表
- HeatBathSampler / heat_bath_sweep: 单点热浴采样，固定的棋盘扫描顺序
- ground_state: β = ∞ 时的基态（穷举 / 退火 / ICM）
- magnetization: 自发磁化强度的无序平均
"""
import logging
import math
from dataclasses import dataclass, field as dataclass_field
from functools import lru_cache
from typing import Iterator, List, Optional, Tuple, Union

import numpy as np

from src.core.exceptions import DomainError, ParameterError, StateSpaceTooLargeError
from src.core.field import sample_field
from src.core.gla import greedy_gla
from src.data.models.field import FieldConvention, FieldRealization
from src.data.models.lattice import BoxSpec
from src.data.models.params import MonteCarloParams
from src.data.models.results import MagnetizationRecord
from src.data.models.spin import (
    BoundaryCondition, GibbsParams, GibbsTable, SpinConfig, boundary_mask
)
from src.utils.config import get_settings
from src.utils.parallel import ordered_map
from src.utils.rng import STREAM_GROUND_STATE, STREAM_HEAT_BATH, counter_stream

logger = logging.getLogger(__name__)

ENUMERATION_CHUNK = 1 << 16
ICM_MAX_PASSES = 1000

Seed = Union[int, np.random.Generator]


# ---------------------------------------------------------------------------
# 网格与系统
# ---------------------------------------------------------------------------

@lru_cache(maxsize=32)
def grid_tables(width: int, height: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """行优先矩形网格的 (邻居表, 键表, 棋盘奇偶)

    邻居表形状 (S, 4)，缺失的邻居用哨兵 S 补齐；键只列出向右和向上的两种。
    """
    size = width * height
    neighbor_table = np.full((size, 4), size, dtype=np.int64)
    bond_list = []
    parity = np.empty(size, dtype=np.int64)
    for row in range(height):
        for col in range(width):
            index = row * width + col
            parity[index] = (row + col) % 2
            for slot, (dx, dy) in enumerate(((1, 0), (-1, 0), (0, 1), (0, -1))):
                c, r = col + dx, row + dy
                if 0 <= c < width and 0 <= r < height:
                    neighbor_table[index, slot] = r * width + c
            if col + 1 < width:
                bond_list.append((index, index + 1))
            if row + 1 < height:
                bond_list.append((index, index + width))
    bonds = np.array(bond_list, dtype=np.int64).reshape(-1, 2)
    for array in (neighbor_table, bonds, parity):
        array.setflags(write=False)
    return neighbor_table, bonds, parity


@dataclass(frozen=True, eq=False)
class PottsSystem:
    """一个具体的有限系统：网格、场 h、耦合 ε 和被固定的格点（-1 表示自由）"""
    q: int
    neighbor_table: np.ndarray
    bonds: np.ndarray
    parity: np.ndarray
    field_values: np.ndarray
    epsilon: float
    clamped: np.ndarray
    local: np.ndarray = dataclass_field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "local", self.epsilon * np.asarray(self.field_values))

    @property
    def site_count(self) -> int:
        return self.clamped.shape[0]

    @property
    def free_sites(self) -> np.ndarray:
        return np.flatnonzero(self.clamped < 0)

    @property
    def state_count(self) -> int:
        return self.q ** int(self.free_sites.size)

    def clamp(self, spins: np.ndarray) -> np.ndarray:
        spins = np.array(spins, dtype=np.int64)
        fixed = self.clamped >= 0
        spins[fixed] = self.clamped[fixed]
        return spins


def grid_system(width: int, height: int, field_values: np.ndarray, epsilon: float,
                clamped: Optional[np.ndarray] = None) -> PottsSystem:
    """任意矩形网格上的系统，用于盒子以外的小网格（例如 2×2）"""
    values = np.asarray(field_values, dtype=np.float64)
    if values.ndim != 2 or values.shape[0] != width * height or values.shape[1] < 2:
        raise DomainError(f"场数组形状 {values.shape} 与 {width}×{height} 网格不匹配")
    if clamped is None:
        clamped = np.full(width * height, -1, dtype=np.int64)
    neighbor_table, bonds, parity = grid_tables(width, height)
    return PottsSystem(values.shape[1], neighbor_table, bonds, parity, values,
                       float(epsilon), np.asarray(clamped, dtype=np.int64))


def box_system(field: FieldRealization, epsilon: float, bc: BoundaryCondition) -> PottsSystem:
    bc.check(field.q)
    spec = field.spec
    clamped = np.full(spec.site_count, -1, dtype=np.int64)
    if bc.is_wired:
        clamped[boundary_mask(spec)] = bc.color
    return grid_system(spec.side, spec.side, field.values, epsilon, clamped)


def _check_compatible(spec: BoxSpec, q: int, field: FieldRealization) -> None:
    if field.spec != spec or field.q != q:
        raise DomainError(
            f"构型 (N={spec.N}, q={q}) 与场 (N={field.spec.N}, q={field.q}) 不匹配"
        )


# ---------------------------------------------------------------------------
# 能量
# ---------------------------------------------------------------------------

def energies(system: PottsSystem, configs: np.ndarray) -> np.ndarray:
    """一批构型 (M, S) 的能量"""
    configs = np.atleast_2d(configs)
    same = (configs[:, system.bonds[:, 0]] == configs[:, system.bonds[:, 1]]).sum(axis=1)
    field_terms = system.field_values[np.arange(system.site_count), configs].sum(axis=1)
    return -(same + system.epsilon * field_terms)


def energy(config: SpinConfig, field: FieldRealization, epsilon: float) -> float:
    """单个构型的 H(s)；场项用 fsum 精确舍入"""
    _check_compatible(config.spec, config.q, field)
    system = box_system(field, epsilon, config.bc)
    spins = system.clamp(config.spins)
    same = int(np.count_nonzero(spins[system.bonds[:, 0]] == spins[system.bonds[:, 1]]))
    field_term = math.fsum(field.values[np.arange(system.site_count), spins].tolist())
    return -(same + epsilon * field_term)


# ---------------------------------------------------------------------------
# 精确枚举
# ---------------------------------------------------------------------------

def _check_state_space(system: PottsSystem, limit: Optional[int]) -> None:
    limit = limit or get_settings().exhaustive_limit
    count = system.state_count
    if count > limit:
        raise StateSpaceTooLargeError(
            f"状态空间 {system.q}^{system.free_sites.size} = {count} 超过上限 {limit}")


def iter_configurations(system: PottsSystem,
                        chunk: int = ENUMERATION_CHUNK) -> Iterator[np.ndarray]:
    """按自由格点的字典序分块产出全部构型，固定格点取其颜色"""
    free = system.free_sites
    q = system.q
    total = system.state_count
    base = np.where(system.clamped >= 0, system.clamped, 0).astype(np.int16)
    powers = q ** np.arange(free.size - 1, -1, -1, dtype=np.int64)
    for start in range(0, total, chunk):
        codes = np.arange(start, min(start + chunk, total), dtype=np.int64)
        block = np.tile(base, (codes.size, 1))
        block[:, free] = (codes[:, None] // powers[None, :]) % q
        yield block


def exact_gibbs_system(system: PottsSystem, beta: float, limit: Optional[int] = None) -> GibbsTable:
    """枚举全部构型得到 exp(-βH)/Z；β = ∞ 时在所有基态上均匀分布"""
    if math.isnan(beta) or not beta > 0:
        raise ParameterError(f"逆温度必须为正: beta={beta}")
    _check_state_space(system, limit)

    configs = np.concatenate(list(iter_configurations(system)))
    values = energies(system, configs)
    lowest = values.min()
    if math.isinf(beta):
        weights = (values <= lowest + 1e-12 * max(1.0, abs(lowest))).astype(np.float64)
    else:
        weights = np.exp(-beta * (values - lowest))
    probabilities = weights / weights.sum()
    return GibbsTable(system.q, float(beta), configs, values, probabilities)


def exact_gibbs(spec: BoxSpec, q: int, field: FieldRealization, params: GibbsParams,
                bc: BoundaryCondition, limit: Optional[int] = None) -> GibbsTable:
    """Λ_N 上的精确 Gibbs 概率表"""
    _check_compatible(spec, q, field)
    system = box_system(field, params.epsilon, bc)
    logger.debug(f"精确 Gibbs 表: N={spec.N} q={q} bc={bc} 状态数={system.state_count}")
    return exact_gibbs_system(system, params.beta, limit)


# ---------------------------------------------------------------------------
# 热浴采样
# ---------------------------------------------------------------------------

def conditional_probabilities(system: PottsSystem, spins: np.ndarray, index: int,
                              beta: float) -> np.ndarray:
    """给定其余格点时 index 处颜色的条件分布"""
    neighbor_spins = [int(spins[n]) for n in system.neighbor_table[index] if n < system.site_count]
    counts = np.bincount(np.array(neighbor_spins, dtype=np.int64), minlength=system.q)
    counts = counts.astype(np.float64)
    logits = beta * (counts + system.local[index])
    weights = np.exp(logits - logits.max())
    return weights / weights.sum()


class HeatBathSampler:
    """单点热浴

    一次扫描先更新奇偶为 0 的自由格点，再更新奇偶为 1 的；同一类格点互不相邻，
    所以可以整体向量化抽样。固定格点从不更新。
    """

    def __init__(self, system: PottsSystem, beta: float, rng: np.random.Generator):
        if math.isinf(beta):
            raise ParameterError("β = ∞ 时不能做热浴采样，请使用 ground_state")
        if math.isnan(beta) or not beta > 0:
            raise ParameterError(f"逆温度必须为正: beta={beta}")
        self.system = system
        self.beta = float(beta)
        self.rng = rng
        free = system.clamped < 0
        self.classes = [np.flatnonzero(free & (system.parity == p)) for p in (0, 1)]
        self.colors = np.arange(system.q)

    def sweep(self, spins: np.ndarray, beta: Optional[float] = None) -> np.ndarray:
        """返回扫描一遍后的新构型"""
        beta = self.beta if beta is None else beta
        system = self.system
        extended = np.append(system.clamp(spins), -1)
        for sites in self.classes:
            if sites.size == 0:
                continue
            around = extended[system.neighbor_table[sites]]
            counts = (around[:, :, None] == self.colors).sum(axis=1)
            logits = beta * (counts + system.local[sites])
            weights = np.exp(logits - logits.max(axis=1, keepdims=True))
            cumulative = np.cumsum(weights, axis=1)
            draws = self.rng.random(sites.size) * cumulative[:, -1]
            extended[sites] = np.minimum((cumulative < draws[:, None]).sum(axis=1), system.q - 1)
        return extended[:-1]

    def run(self, spins: np.ndarray, sweeps: int) -> np.ndarray:
        for _ in range(sweeps):
            spins = self.sweep(spins)
        return spins


def _as_generator(seed: Seed, *keys: int) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return counter_stream(int(seed), *keys)


def heat_bath_sweep(config: SpinConfig, field: FieldRealization, params: GibbsParams,
                    seed_stream: Seed) -> SpinConfig:
    """一次完整的热浴扫描；seed_stream 可以是整数种子或已有的生成器"""
    _check_compatible(config.spec, config.q, field)
    system = box_system(field, params.epsilon, config.bc)
    sampler = HeatBathSampler(system, params.beta, _as_generator(seed_stream, STREAM_HEAT_BATH))
    return config.with_spins(sampler.sweep(config.spins))


# ---------------------------------------------------------------------------
# 基态
# ---------------------------------------------------------------------------

def exhaustive_minimum(system: PottsSystem, limit: Optional[int] = None) -> np.ndarray:
    """穷举的最低能构型，并列取字典序最小者"""
    _check_state_space(system, limit)
    best, best_energy = None, math.inf
    for block in iter_configurations(system):
        values = energies(system, block)
        row = int(np.argmin(values))
        if values[row] < best_energy:
            best, best_energy = block[row].astype(np.int64), float(values[row])
    return best


def field_argmax_start(system: PottsSystem) -> np.ndarray:
    """每个格点取局部场最大的颜色"""
    return system.clamp(np.argmax(system.local, axis=1))


def icm(system: PottsSystem, spins: np.ndarray) -> np.ndarray:
    """迭代条件众数：逐类把格点改成局部能量最低的颜色，直到不再变化"""
    colors = np.arange(system.q)
    extended = np.append(system.clamp(spins), -1)
    classes = [np.flatnonzero((system.clamped < 0) & (system.parity == p)) for p in (0, 1)]
    for _ in range(ICM_MAX_PASSES):
        changed = False
        for sites in classes:
            if sites.size == 0:
                continue
            around = extended[system.neighbor_table[sites]]
            scores = (around[:, :, None] == colors).sum(axis=1) + system.local[sites]
            best = np.argmax(scores, axis=1)
            rows = np.arange(sites.size)
            improve = scores[rows, best] > scores[rows, extended[sites]] + 1e-12
            if improve.any():
                extended[sites[improve]] = best[improve]
                changed = True
        if not changed:
            break
    return extended[:-1]


def anneal_ground_state(system: PottsSystem, params: MonteCarloParams,
                        rng: np.random.Generator) -> np.ndarray:
    """β 几何升高的热浴退火，记录见过的最低能构型，最后用 ICM 收尾"""
    sampler = HeatBathSampler(system, params.anneal_beta0, rng)
    spins = field_argmax_start(system)
    best, best_energy = spins, float(energies(system, spins)[0])
    ratio = params.anneal_beta1 / params.anneal_beta0
    for sweep in range(params.anneal_sweeps):
        fraction = sweep / max(params.anneal_sweeps - 1, 1)
        spins = sampler.sweep(spins, params.anneal_beta0 * ratio ** fraction)
        current = float(energies(system, spins)[0])
        if current < best_energy:
            best, best_energy = spins.copy(), current
    return icm(system, best)


def ground_state(spec: BoxSpec, q: int, field: FieldRealization, epsilon: float,
                 bc: BoundaryCondition, method: str = "exhaustive", seed: int = 0,
                 params: Optional[MonteCarloParams] = None,
                 limit: Optional[int] = None) -> Tuple[SpinConfig, float]:
    """β = ∞ 的基态及其能量（重新计算）"""
    _check_compatible(spec, q, field)
    system = box_system(field, epsilon, bc)
    params = params or MonteCarloParams(ground_state_method=method)

    if method == "exhaustive":
        spins = exhaustive_minimum(system, limit)
    elif method == "icm":
        spins = icm(system, field_argmax_start(system))
    elif method == "anneal":
        rng = counter_stream(int(seed), STREAM_GROUND_STATE, 0 if bc.is_wired else 1)
        spins = anneal_ground_state(system, params, rng)
    else:
        raise ParameterError(f"未知的基态方法: {method}")

    config = SpinConfig(spec, q, spins, bc)
    return config, energy(config, field, epsilon)


# ---------------------------------------------------------------------------
# 磁化强度
# ---------------------------------------------------------------------------

def _origin_expectation(spec: BoxSpec, field: FieldRealization, epsilon: float, beta: float,
                        bc: BoundaryCondition, color: int, params: MonteCarloParams,
                        seed: int) -> Tuple[float, float]:
    """(⟨δ(s_0, color)⟩, 对应能量)"""
    origin = spec.site_count // 2
    if math.isinf(beta):
        config, value = ground_state(spec, field.q, field, epsilon, bc,
                                     params.ground_state_method, seed, params)
        return (1.0 if config.origin_spin == color else 0.0), value

    system = box_system(field, epsilon, bc)
    if params.thermal_method == "exact":
        table = exact_gibbs_system(system, beta)
        return float(table.marginal(origin)[color]), table.expected_energy

    rng = counter_stream(int(seed), STREAM_HEAT_BATH, 0 if bc.is_wired else 1)
    sampler = HeatBathSampler(system, beta, rng)
    spins = sampler.run(system.clamp(np.full(system.site_count, color)), params.burn_in)
    hits, energy_sum = 0, 0.0
    for _ in range(params.sweeps):
        spins = sampler.sweep(spins)
        hits += int(spins[origin] == color)
        energy_sum += float(energies(system, spins)[0])
    return hits / params.sweeps, energy_sum / params.sweeps


def realization_record(spec: BoxSpec, field: FieldRealization, epsilon: float, beta: float,
                       params: MonteCarloParams, seed: int, wired_color: int = 0,
                       with_gla: bool = False) -> MagnetizationRecord:
    """单个场实现上的 wired / free 期望"""
    wired = BoundaryCondition.wired(wired_color)
    p_w, e_w = _origin_expectation(spec, field, epsilon, beta, wired, wired_color, params, seed)
    p_f, e_f = _origin_expectation(spec, field, epsilon, beta, BoundaryCondition.free(),
                                   wired_color, params, seed)

    gla_score = gla_indicator = None
    if with_gla:
        gla_score = greedy_gla(field).score
        gla_indicator = gla_score >= 1.0

    return MagnetizationRecord(int(seed), spec.N, field.q, float(epsilon), float(beta),
                               f"{wired}|free", p_w, p_f, e_w, e_f, gla_score, gla_indicator)


def magnetization_records(spec: BoxSpec, q: int, epsilon: float, beta: float,
                          disorder_samples: int, mc_params: MonteCarloParams, base_seed: int,
                          convention: FieldConvention = FieldConvention.UNIT,
                          threads: Optional[int] = None, field_factory=None,
                          with_gla: bool = False,
                          wired_color: int = 0) -> List[MagnetizationRecord]:
    """逐个无序样本的记录，按种子顺序返回"""
    if disorder_samples < 2:
        raise ParameterError(f"无序样本数至少为 2: {disorder_samples}")
    if math.isnan(beta) or not beta > 0:
        raise ParameterError(f"逆温度必须为正: beta={beta}")
    BoundaryCondition.wired(wired_color).check(q)

    def measure(seed: int) -> MagnetizationRecord:
        if field_factory is not None:
            field = field_factory(seed)
        else:
            field = sample_field(spec, q, epsilon, seed, convention)
        record = realization_record(spec, field, epsilon, beta, mc_params, seed,
                                    wired_color, with_gla)
        logger.debug(f"seed={seed} N={spec.N} p_w={record.p0_wired} p_f={record.p0_free}")
        return record

    logger.info(f"磁化强度: N={spec.N} q={q} eps={epsilon} beta={beta} 样本数={disorder_samples}")
    return ordered_map(measure, range(base_seed, base_seed + disorder_samples), threads)


def summarize_magnetization(records: List[MagnetizationRecord]) -> Tuple[float, float]:
    values = np.array([r.value for r in records], dtype=np.float64)
    if values.size < 2:
        raise ParameterError("至少需要两个样本才能估计标准误")
    return float(values.mean()), float(values.std(ddof=1) / math.sqrt(values.size))


def magnetization(spec: BoxSpec, q: int, epsilon: float, beta: float, disorder_samples: int,
                  mc_params: MonteCarloParams, base_seed: int,
                  convention: FieldConvention = FieldConvention.UNIT,
                  threads: Optional[int] = None, field_factory=None) -> Tuple[float, float]:
    """无序平均的 (q/(q-1))·(p_w - p_f) 及其标准误"""
    records = magnetization_records(spec, q, epsilon, beta, disorder_samples, mc_params,
                                    base_seed, convention, threads, field_factory)
    return summarize_magnetization(records)
