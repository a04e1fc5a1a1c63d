"""
贪婪格点动物 (GLA)：在格点动物族上最大化 w(A)/|∂A|

- exact_gla: 穷举族内全部动物，给出有证书的最大值
- greedy_gla / anneal_gla: 可用于更大盒子的启发式
- estimate_mean_gla / estimate_tail: 无序平均与尾概率的经验估计
"""
import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, List, Optional, Sequence, Set, Tuple

import numpy as np

from src.core.exceptions import EmptyFamilyError, ParameterError
from src.core.field import color_weights, sample_field, site_set_weight
from src.core.lattice import (
    BOUNDARY_MODE, MIN_HOLE_SIZE, AnimalPredicate, edge_boundary, enumerate_animals,
    is_simply_connected, make_animal
)
from src.data.models.field import FieldConvention, FieldRealization
from src.data.models.lattice import (
    ORIGIN, BoxSpec, LatticeAnimal, Site, neighbors, row_major_key
)
from src.data.models.params import AnnealSchedule, OptimizerSpec
from src.data.models.results import GlaResult, GlaSample, TailEstimate
from src.utils.parallel import ordered_map
from src.utils.rng import STREAM_ANNEAL_GLA, counter_stream

logger = logging.getLogger(__name__)

FieldFactory = Callable[[int], FieldRealization]

MIN_TAIL_SAMPLES = 100


# ---------------------------------------------------------------------------
# 动物族
# ---------------------------------------------------------------------------

def sub_box_family(n: int) -> AnimalPredicate:
    """完全落在子盒子 Λ_n 内的动物"""
    def predicate(animal: LatticeAnimal) -> bool:
        return all(abs(s.x) <= n and abs(s.y) <= n for s in animal.sites)
    return predicate


def size_family(k: int) -> AnimalPredicate:
    """至多 k 个格点的动物"""
    def predicate(animal: LatticeAnimal) -> bool:
        return animal.size <= k
    return predicate


# ---------------------------------------------------------------------------
# 打分
# ---------------------------------------------------------------------------

def score_animal(field: FieldRealization, animal: LatticeAnimal,
                 numerator: str = "all_colors") -> float:
    """w(A)/|∂A|；per_color 时分子取 max_α Σ_{i∈A} h_i^α"""
    if numerator == "all_colors":
        weight = site_set_weight(field, animal.sites)
    elif numerator == "per_color":
        weight = max(color_weights(field, animal.sites))
    else:
        raise ParameterError(f"未知的分子类型: {numerator}")
    return weight / animal.boundary_size


def _certified(field: FieldRealization, animal: LatticeAnimal, numerator: str,
               method: str, evaluations: int) -> GlaResult:
    return GlaResult(animal, score_animal(field, animal, numerator), method, evaluations)


# ---------------------------------------------------------------------------
# 精确解
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AnimalTable:
    """一次枚举的缓存：动物列表 + 补齐的格点下标矩阵"""
    animals: Tuple[LatticeAnimal, ...]
    index: np.ndarray       # (K, max_size)，不足处填哨兵下标 site_count
    boundaries: np.ndarray  # (K,)


@lru_cache(maxsize=16)
def animal_table(N: int, max_size: int, mode: str = BOUNDARY_MODE) -> AnimalTable:
    spec = BoxSpec(N)
    animals = tuple(enumerate_animals(spec, max_size, mode=mode))
    index = np.full((len(animals), max_size), spec.site_count, dtype=np.int64)
    for row, animal in enumerate(animals):
        index[row, :animal.size] = [spec.index(s) for s in animal.sites]
    boundaries = np.array([a.boundary_size for a in animals], dtype=np.float64)
    logger.info(f"枚举 Λ_{N} 内至多 {max_size} 个格点的动物: {len(animals)} 个")
    return AnimalTable(animals, index, boundaries)


def exact_gla(field: FieldRealization, max_size: int,
              family_predicate: Optional[AnimalPredicate] = None,
              numerator: str = "all_colors", mode: Optional[str] = None) -> GlaResult:
    """族内全局最大值；并列时取短字典序最小的规范形式

    先用向量化的近似得分筛出候选，再用精确舍入的 fsum 重算候选，
    因此结果与逐个打分的朴素实现完全一致。
    """
    if max_size < 1:
        raise ParameterError(f"max_size 至少为 1: {max_size}")
    table = animal_table(field.spec.N, max_size, mode or BOUNDARY_MODE)

    if family_predicate is None:
        mask = np.ones(len(table.animals), dtype=bool)
    else:
        mask = np.array([bool(family_predicate(a)) for a in table.animals], dtype=bool)
    if not mask.any():
        raise EmptyFamilyError("给定的动物族为空")

    padded = np.vstack([field.values, np.zeros((1, field.q))])
    if numerator == "all_colors":
        numerators = padded.sum(axis=1)[table.index].sum(axis=1)
    elif numerator == "per_color":
        numerators = padded[table.index].sum(axis=1).max(axis=1)
    else:
        raise ParameterError(f"未知的分子类型: {numerator}")

    approx = numerators / table.boundaries
    approx[~mask] = -np.inf
    best = approx.max()
    tolerance = 1e-9 * (1.0 + float(np.abs(padded).max()) * max_size)
    candidates = np.flatnonzero(approx >= best - tolerance)

    winner = None
    winner_score = -math.inf
    for row in candidates:
        animal = table.animals[row]
        score = score_animal(field, animal, numerator)
        tied = score == winner_score and animal.sort_key() < winner.sort_key()
        if score > winner_score or tied:
            winner, winner_score = animal, score

    return GlaResult(winner, winner_score, "exact", int(mask.sum()))


# ---------------------------------------------------------------------------
# 启发式
# ---------------------------------------------------------------------------

class _GrowingAnimal:
    """增量维护权重与边界的格点集合"""

    def __init__(self, field: FieldRealization, start: Site, numerator: str, mode: str):
        self.field = field
        self.spec = field.spec
        self.numerator = numerator
        self.mode = mode
        self.cells: Set[Site] = {start}
        self.colors = field.values[self.spec.index(start)].copy()
        self.boundary = 4

    def score_with(self, colors: np.ndarray, boundary: int) -> float:
        if self.numerator == "all_colors":
            return float(colors.sum()) / boundary
        return float(colors.max()) / boundary

    @property
    def score(self) -> float:
        return self.score_with(self.colors, self.boundary)

    def frontier(self) -> List[Site]:
        found = {n for c in self.cells for n in neighbors(c)
                 if self.spec.contains(n) and n not in self.cells}
        return sorted(found, key=row_major_key)

    def _boundary_after(self, site: Site, adding: bool) -> int:
        if self.mode != "edge":
            cells = self.cells | {site} if adding else self.cells - {site}
            return edge_boundary(cells, self.mode)
        shared = sum(1 for n in neighbors(site) if n in self.cells and n != site)
        delta = 4 - 2 * shared
        return self.boundary + delta if adding else self.boundary - delta

    def propose_add(self, site: Site) -> Optional[Tuple[np.ndarray, int]]:
        if len(self.cells) + 1 >= MIN_HOLE_SIZE and not is_simply_connected(self.cells | {site}):
            return None
        colors = self.colors + self.field.values[self.spec.index(site)]
        return colors, self._boundary_after(site, adding=True)

    def propose_remove(self, site: Site) -> Optional[Tuple[np.ndarray, int]]:
        remaining = self.cells - {site}
        if not remaining or not is_simply_connected(remaining):
            return None
        colors = self.colors - self.field.values[self.spec.index(site)]
        return colors, self._boundary_after(site, adding=False)

    def apply(self, site: Site, adding: bool, colors: np.ndarray, boundary: int) -> None:
        if adding:
            self.cells.add(site)
        else:
            self.cells.discard(site)
        self.colors = colors
        self.boundary = boundary


def greedy_gla(field: FieldRealization, start: Site = ORIGIN, steps: int = 10_000,
               max_size: Optional[int] = None, numerator: str = "all_colors",
               mode: Optional[str] = None) -> GlaResult:
    """每步加入使得分最大的相邻格点，没有改进时停止"""
    start = Site(*start)
    if not field.spec.contains(start):
        raise ParameterError(f"起点 {tuple(start)} 不在盒子内")
    cap = max_size or field.spec.site_count
    state = _GrowingAnimal(field, start, numerator, mode or BOUNDARY_MODE)
    evaluations = 1

    for _ in range(steps):
        if len(state.cells) >= cap:
            break
        best = None
        for site in state.frontier():
            proposal = state.propose_add(site)
            if proposal is None:
                continue
            evaluations += 1
            candidate = state.score_with(*proposal)
            if best is None or candidate > best[0]:
                best = (candidate, site, proposal)
        if best is None or best[0] <= state.score:
            break
        state.apply(best[1], True, *best[2])

    animal = make_animal(state.cells, field.spec, require_origin=ORIGIN in state.cells, mode=mode)
    return _certified(field, animal, numerator, "greedy", evaluations)


def anneal_gla(field: FieldRealization, schedule: AnnealSchedule, seed: int,
               max_size: Optional[int] = None, numerator: str = "all_colors",
               mode: Optional[str] = None) -> GlaResult:
    """模拟退火：增删格点的移动始终保持原点在内且单连通，返回见过的最好动物"""
    if not isinstance(schedule, AnnealSchedule):
        schedule = AnnealSchedule(*schedule)
    rng = counter_stream(seed, STREAM_ANNEAL_GLA)
    cap = max_size or field.spec.site_count
    state = _GrowingAnimal(field, ORIGIN, numerator, mode or BOUNDARY_MODE)
    current = state.score
    best_cells, best_score = frozenset(state.cells), current
    evaluations = 1

    for sweep in range(schedule.sweeps):
        temperature = schedule.temperature(sweep)
        for _ in range(schedule.moves_per_sweep):
            adding = rng.random() < 0.5
            if adding and len(state.cells) < cap:
                pool = state.frontier()
            else:
                adding = False
                pool = sorted((c for c in state.cells if c != ORIGIN), key=row_major_key)
            if not pool:
                continue
            site = pool[int(rng.integers(len(pool)))]
            proposal = state.propose_add(site) if adding else state.propose_remove(site)
            if proposal is None:
                continue
            evaluations += 1
            candidate = state.score_with(*proposal)
            delta = candidate - current
            if delta >= 0 or rng.random() < math.exp(delta / temperature):
                state.apply(site, adding, *proposal)
                current = candidate
                if current > best_score:
                    best_cells, best_score = frozenset(state.cells), current

    animal = make_animal(best_cells, field.spec, mode=mode)
    return _certified(field, animal, numerator, "anneal", evaluations)


# ---------------------------------------------------------------------------
# 无序平均
# ---------------------------------------------------------------------------

def run_optimizer(field: FieldRealization, optimizer: OptimizerSpec, seed: int) -> GlaResult:
    if optimizer.method == "exact":
        return exact_gla(field, optimizer.max_size, numerator=optimizer.numerator)
    if optimizer.method == "greedy":
        return greedy_gla(field, ORIGIN, optimizer.steps, optimizer.max_size, optimizer.numerator)
    return anneal_gla(field, optimizer.schedule, seed, optimizer.max_size, optimizer.numerator)


def sample_gla_scores(spec: BoxSpec, q: int, epsilon: float, convention: FieldConvention,
                      disorder_samples: int, optimizer: OptimizerSpec, base_seed: int,
                      threads: Optional[int] = None,
                      field_factory: Optional[FieldFactory] = None) -> List[GlaSample]:
    """种子 base_seed .. base_seed+samples-1 上逐个求解，结果按种子顺序返回"""
    if disorder_samples < 1:
        raise ParameterError(f"无序样本数必须为正: {disorder_samples}")

    def solve(seed: int) -> GlaSample:
        if field_factory is not None:
            field = field_factory(seed)
        else:
            field = sample_field(spec, q, epsilon, seed, convention)
        result = run_optimizer(field, optimizer, seed)
        logger.debug(f"seed={seed} N={spec.N} score={result.score}")
        return GlaSample(seed, result)

    logger.info(f"GLA 无序采样: N={spec.N} q={q} eps={epsilon} 方法={optimizer.method} "
                f"样本数={disorder_samples}")
    seeds = range(base_seed, base_seed + disorder_samples)
    return ordered_map(solve, seeds, threads)


def mean_and_stderr(values: Sequence[float]) -> Tuple[float, float]:
    """样本均值与标准误（ddof=1）"""
    data = np.asarray(values, dtype=np.float64)
    if data.size < 2:
        raise ParameterError("至少需要两个样本才能估计标准误")
    return float(data.mean()), float(data.std(ddof=1) / math.sqrt(data.size))


def estimate_mean_gla(spec: BoxSpec, q: int, epsilon: float, convention: FieldConvention,
                      disorder_samples: int, optimizer: OptimizerSpec, base_seed: int,
                      threads: Optional[int] = None,
                      field_factory: Optional[FieldFactory] = None) -> Tuple[float, float]:
    """E[G_N] 的经验均值与标准误"""
    if disorder_samples < 2:
        raise ParameterError(f"无序样本数至少为 2: {disorder_samples}")
    samples = sample_gla_scores(spec, q, epsilon, convention, disorder_samples,
                                optimizer, base_seed, threads, field_factory)
    return mean_and_stderr([s.result.score for s in samples])


def tail_from_scores(scores: Sequence[float], u_list: Sequence[float]) -> List[TailEstimate]:
    """以经验中位数 Ĉ 为中心统计超过 Ĉ + u 的比例"""
    data = np.asarray(scores, dtype=np.float64)
    if data.size < MIN_TAIL_SAMPLES:
        raise ParameterError(f"尾概率至少需要 {MIN_TAIL_SAMPLES} 个样本，当前 {data.size}")
    if any(u < 0 for u in u_list):
        raise ParameterError("阈值 u 不能为负")
    center = float(np.median(data))
    return [TailEstimate(float(u), int(np.count_nonzero(data > center + u)), int(data.size),
                         math.exp(-u * u / 2.0), center)
            for u in u_list]


def estimate_tail(spec: BoxSpec, q: int, epsilon: float, convention: FieldConvention,
                  u_list: Sequence[float], disorder_samples: int, optimizer: OptimizerSpec,
                  base_seed: int, threads: Optional[int] = None,
                  field_factory: Optional[FieldFactory] = None) -> List[TailEstimate]:
    """尾概率的经验估计，与 exp(-u²/2) 对照"""
    if disorder_samples < MIN_TAIL_SAMPLES:
        raise ParameterError(f"尾概率至少需要 {MIN_TAIL_SAMPLES} 个样本，当前 {disorder_samples}")
    if any(u < 0 for u in u_list):
        raise ParameterError("阈值 u 不能为负")
    samples = sample_gla_scores(spec, q, epsilon, convention, disorder_samples,
                                optimizer, base_seed, threads, field_factory)
    return tail_from_scores([s.result.score for s in samples], u_list)
