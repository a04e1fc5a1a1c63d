"""
关联长度搜索与标度指数拟合

- correlation_length: 倍增找到第一个 m + 2·stderr ≤ 阈值的 N，再在区间内二分
- fit_power_exponent: 变换坐标下的加权最小二乘，误差用一阶 delta 方法传播
- theorem2_experiment / theorem1_experiment: E[G_N] 与 L(ε) 的标度实验
"""
import logging
import math
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.core.exceptions import FitError, ParameterError
from src.core.gla import estimate_mean_gla
from src.core.potts import magnetization
from src.data.models.field import FieldConvention
from src.data.models.lattice import BoxSpec
from src.data.models.params import MonteCarloParams, OptimizerSpec, SearchParams, StatsParams
from src.data.models.results import (
    CorrelationLengthResult, ExperimentResult, FitResult, ScalingSeries, SeriesPoint
)

logger = logging.getLogger(__name__)

# 返回 (m, stderr)
MagnetizationFn = Callable[[int], Tuple[float, float]]

SMOOTHING_SIGMAS = 2.0


# ---------------------------------------------------------------------------
# 坐标变换
# ---------------------------------------------------------------------------

def _identity(v: float) -> float:
    return v


def _log(v: float) -> float:
    return math.log(v)


def _loglog(v: float) -> float:
    return math.log(math.log(v))


def _inv_log(v: float) -> float:
    return math.log(1.0 / v)


# 名称 -> (变换, 导数, 定义域检查)
TRANSFORMS: Dict[str, Tuple[Callable[[float], float], Callable[[float], float],
                            Callable[[float], bool]]] = {
    "identity": (_identity, lambda v: 1.0, lambda v: True),
    "log": (_log, lambda v: 1.0 / v, lambda v: v > 0),
    "loglog": (_loglog, lambda v: 1.0 / (v * math.log(v)), lambda v: v > 1),
    "inv_log": (_inv_log, lambda v: -1.0 / v, lambda v: v > 0),
}


def transform_point(point: SeriesPoint, x_map: str, y_map: str) -> Tuple[float, float, float]:
    """变换后的 (x, y, σ_y)"""
    for name in (x_map, y_map):
        if name not in TRANSFORMS:
            raise ParameterError(f"未知的坐标变换: {name}")
    fx, _, x_ok = TRANSFORMS[x_map]
    fy, dfy, y_ok = TRANSFORMS[y_map]
    if not x_ok(point.x):
        raise FitError(f"点 (x={point.x}, y={point.y}) 的 x 不在变换 {x_map} 的定义域内", point)
    if not y_ok(point.y):
        raise FitError(f"点 (x={point.x}, y={point.y}) 的 y 不在变换 {y_map} 的定义域内", point)
    return fx(point.x), fy(point.y), abs(dfy(point.y)) * point.yerr


def fit_power_exponent(series: ScalingSeries, x_map: str = "log",
                       y_map: str = "log") -> FitResult:
    """y_map(y) = slope·x_map(x) + intercept

    所有点都有正的标准误时按 1/σ² 加权，否则退回普通最小二乘，
    斜率标准误改用残差方差估计。
    """
    if len(series) < 3:
        raise FitError(f"拟合至少需要 3 个点，当前 {len(series)} 个")
    mapped = np.array([transform_point(p, x_map, y_map) for p in series.points])
    xs, ys, sigmas = mapped[:, 0], mapped[:, 1], mapped[:, 2]

    weighted = bool(np.all(sigmas > 0))
    weights = 1.0 / sigmas if weighted else np.ones_like(xs)
    design = np.column_stack([xs, np.ones_like(xs)])
    coefficients, _, rank, _ = np.linalg.lstsq(design * weights[:, None], ys * weights, rcond=None)
    if rank < 2:
        raise FitError("变换后的 x 全部相同，无法拟合")
    slope, intercept = float(coefficients[0]), float(coefficients[1])
    residuals = ys - (slope * xs + intercept)

    normal = (design * (weights ** 2)[:, None]).T @ design
    covariance = np.linalg.inv(normal)
    if not weighted:
        dof = max(len(xs) - 2, 1)
        covariance = covariance * float(residuals @ residuals) / dof
    stderr = float(math.sqrt(max(covariance[0, 0], 0.0)))

    return FitResult(slope, intercept, stderr, tuple(float(r) for r in residuals),
                     x_map, y_map, weighted)


# ---------------------------------------------------------------------------
# 关联长度
# ---------------------------------------------------------------------------

def correlation_length(epsilon: float, q: int, threshold: float, beta: float,
                       search: SearchParams, stats: StatsParams,
                       mc_params: Optional[MonteCarloParams] = None,
                       convention: FieldConvention = FieldConvention.UNIT,
                       threads: Optional[int] = None,
                       magnetization_fn: Optional[MagnetizationFn] = None
                       ) -> CorrelationLengthResult:
    """最小的 N 使 m(N) + 2·stderr ≤ threshold；超过 N_max 仍未穿越时 found=False"""
    if not 0 < threshold < 1:
        raise ParameterError(f"阈值必须在 (0, 1) 内: {threshold}")
    mc_params = mc_params or MonteCarloParams()

    if magnetization_fn is None:
        def magnetization_fn(N: int) -> Tuple[float, float]:
            return magnetization(BoxSpec(N), q, epsilon, beta, stats.disorder_samples,
                                 mc_params, stats.base_seed, convention, threads)

    evaluated: Dict[int, Tuple[float, float]] = {}

    def evaluate(N: int) -> bool:
        if N not in evaluated:
            evaluated[N] = magnetization_fn(N)
            logger.debug(f"eps={epsilon} N={N} m={evaluated[N][0]} stderr={evaluated[N][1]}")
        m, err = evaluated[N]
        return m + SMOOTHING_SIGMAS * err <= threshold

    def finish(L: Optional[int], bracket: Tuple[int, int]) -> CorrelationLengthResult:
        history = [(n, m, e) for n, (m, e) in sorted(evaluated.items())]
        m_at_L = evaluated[L][0] if L is not None else None
        return CorrelationLengthResult(epsilon, threshold, L, bracket, m_at_L, L is not None,
                                       history)

    low, high = search.N_start - 1, search.N_start
    while not evaluate(high):
        if high >= search.N_max:
            logger.warning(f"eps={epsilon}: N ≤ {search.N_max} 内磁化强度没有降到 {threshold} 以下")
            return finish(None, (max(low, search.N_start), search.N_max))
        low, high = high, min(high * search.factor, search.N_max)

    # 不变量：high 已穿越，low 未穿越（或低于 N_start）
    while high - low > 1:
        middle = (low + high) // 2
        if evaluate(middle):
            high = middle
        else:
            low = middle

    return finish(high, (max(low, search.N_start), high))


def imry_ma_length(epsilon: float, C: float = 1.0) -> float:
    """Imry–Ma 尺度 exp(C·ε^{-4/3})"""
    if not epsilon > 0:
        raise ParameterError(f"场强 ε 必须为正: eps={epsilon}")
    return math.exp(C * epsilon ** (-4.0 / 3.0))


# ---------------------------------------------------------------------------
# 标度实验
# ---------------------------------------------------------------------------

def _try_fit(series: ScalingSeries, x_map: str,
             y_map: str) -> Tuple[Optional[FitResult], Optional[str]]:
    try:
        return fit_power_exponent(series, x_map, y_map), None
    except FitError as e:
        logger.warning(f"拟合失败: {e}")
        return None, str(e)


def theorem2_experiment(N_list: Sequence[int], q: int, epsilon: float,
                        convention: FieldConvention, optimizer: OptimizerSpec,
                        disorder_samples: int, base_seed: int,
                        threads: Optional[int] = None, field_factory=None) -> ExperimentResult:
    """E[G_N] 随 N 的增长：拟合 log E[G_N] 对 log log N"""
    if any(N < 3 for N in N_list):
        raise ParameterError(f"N 必须都不小于 3: {list(N_list)}")
    if len(set(N_list)) != len(N_list):
        raise ParameterError(f"N 列表含有重复值: {list(N_list)}")

    points = []
    for N in sorted(N_list):
        factory = (lambda seed, N=N: field_factory(BoxSpec(N), seed)) if field_factory else None
        mean, stderr = estimate_mean_gla(BoxSpec(N), q, epsilon, convention, disorder_samples,
                                         optimizer, base_seed, threads, factory)
        logger.info(f"N={N}: E[G_N] = {mean} ± {stderr}")
        points.append(SeriesPoint(float(N), mean, stderr))

    series = ScalingSeries(tuple(points), "loglog_x:log_y")
    fit, error = _try_fit(series, "loglog", "log")
    provenance = {
        "experiment": "thm2",
        "N_list": sorted(int(N) for N in N_list),
        "q": q,
        "epsilon": epsilon,
        "convention": FieldConvention(convention).value,
        "optimizer": optimizer.to_dict(),
        "disorder_samples": disorder_samples,
        "base_seed": base_seed,
        "seeds": [base_seed, base_seed + disorder_samples - 1],
    }
    return ExperimentResult(series, fit, error, provenance)


def theorem1_experiment(epsilon_list: Sequence[float], q: int, threshold: float, beta: float,
                        search: SearchParams, stats: StatsParams,
                        mc_params: Optional[MonteCarloParams] = None,
                        convention: FieldConvention = FieldConvention.UNIT,
                        threads: Optional[int] = None,
                        length_fn: Optional[Callable[[float], CorrelationLengthResult]] = None
                        ) -> Tuple[ExperimentResult, List[CorrelationLengthResult]]:
    """L(ε) 随 ε 的变化：拟合 log log L 对 log(1/ε)，未找到的 L 不参与拟合"""
    if any(not e > 0 for e in epsilon_list):
        raise ParameterError(f"ε 必须都为正: {list(epsilon_list)}")
    if len(set(epsilon_list)) != len(epsilon_list):
        raise ParameterError(f"ε 列表含有重复值: {list(epsilon_list)}")
    mc_params = mc_params or MonteCarloParams()

    if length_fn is None:
        def length_fn(eps: float) -> CorrelationLengthResult:
            return correlation_length(eps, q, threshold, beta, search, stats, mc_params,
                                      convention, threads)

    results, points, excluded = [], [], []
    for eps in sorted(epsilon_list, reverse=True):
        result = length_fn(eps)
        results.append(result)
        if result.found:
            # x = 1/ε，与 log(1/ε) 的拟合坐标一致
            points.append(SeriesPoint(1.0 / eps, float(result.L), 0.0))
            logger.info(f"eps={eps}: L = {result.L}")
        else:
            excluded.append({"epsilon": eps, "bracket": list(result.bracket)})

    series = ScalingSeries(tuple(points), "log_x:loglog_y")
    fit, error = _try_fit(series, "log", "loglog")
    provenance = {
        "experiment": "thm1",
        "epsilon_list": sorted(float(e) for e in epsilon_list),
        "q": q,
        "threshold": threshold,
        "beta": beta,
        "search": {"N_start": search.N_start, "N_max": search.N_max, "factor": search.factor},
        "disorder_samples": stats.disorder_samples,
        "base_seed": stats.base_seed,
        "convention": FieldConvention(convention).value,
        "mc_params": mc_params.to_dict(),
        "imry_ma_length": {str(e): imry_ma_length(e) for e in sorted(epsilon_list)},
    }
    return ExperimentResult(series, fit, error, provenance, excluded), results
