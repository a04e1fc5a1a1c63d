"""
多边形生长构造

P_1 = [-N/2, N/2]²。每一层对每条边 S 在其中间一半上立一个向外的等腰三角形 T_S
（底边 l(S)/2，高 ε^{2/3}·l(S)/8）。w(T_S) > 0 时接上三角形，否则把 S 四等分。
权重一律通过栅格化到格点上再求和。
"""
import logging
import math
from typing import List, Optional, Sequence, Set, Tuple

import numpy as np
from shapely.geometry import LinearRing, box
from shapely.geometry import Polygon as ShapelyPolygon

from src.core.exceptions import DomainError, ParameterError
from src.core.field import site_set_weight
from src.data.models.field import FieldRealization
from src.data.models.lattice import BoxSpec, Site
from src.data.models.polygon import Point, Polygon, PolygonLevel, Side
from src.utils.rng import STREAM_POLYGON_COIN, counter_stream

logger = logging.getLogger(__name__)

VARIANTS = ("deterministic", "stochastic")

# 边长小于这个值时已经低于格点分辨率
MIN_SIDE_LENGTH = 2.0

LENGTH_TOLERANCE = 1e-9


def init_polygon(spec: BoxSpec) -> Polygon:
    """P_1：边长为 N 的正方形，逆时针"""
    if spec.N < 2:
        raise ParameterError(f"N={spec.N} 太小，无法细分，至少需要 2")
    half = spec.N / 2.0
    vertices = ((-half, -half), (half, -half), (half, half), (-half, half))
    return Polygon(vertices, 1, spec.N)


def triangle_for_side(side: Side, epsilon: float) -> Tuple[Point, Point, Point]:
    """(底边左端, 顶点, 底边右端)"""
    if not epsilon > 0:
        raise ParameterError(f"场强 ε 必须为正: eps={epsilon}")
    length = side.length
    if not length > 0 or not math.isfinite(length):
        raise DomainError(f"退化的边: {side.start} -> {side.end}")
    height = epsilon ** (2.0 / 3.0) * length / 8.0
    normal = side.outward_normal
    middle = side.point_at(0.5)
    apex = (middle[0] + height * normal[0], middle[1] + height * normal[1])
    return side.point_at(0.25), apex, side.point_at(0.75)


def rasterize(shape: Sequence[Point], spec: Optional[BoxSpec] = None) -> Set[Site]:
    """格点中心落在图形内的格点

    半开规则：左边和下边上的中心算在内，右边和上边上的不算。给出 spec 时截断到盒子内。
    """
    vertices = np.asarray(shape, dtype=np.float64)
    if vertices.ndim != 2 or vertices.shape[0] < 3:
        return set()
    x0, y0 = np.floor(vertices.min(axis=0)).astype(int)
    x1, y1 = np.ceil(vertices.max(axis=0)).astype(int)
    if spec is not None:
        x0, y0 = max(x0, -spec.N), max(y0, -spec.N)
        x1, y1 = min(x1, spec.N), min(y1, spec.N)
    if x0 > x1 or y0 > y1:
        return set()

    xs, ys = np.meshgrid(np.arange(x0, x1 + 1), np.arange(y0, y1 + 1))
    px, py = xs.ravel().astype(np.float64), ys.ravel().astype(np.float64)
    start = vertices
    end = np.roll(vertices, -1, axis=0)

    inside = np.zeros(px.size, dtype=bool)
    for (ax, ay), (bx, by) in zip(start, end):
        straddles = (ay > py) != (by > py)
        if not straddles.any():
            continue
        with np.errstate(divide="ignore", invalid="ignore"):
            crossing = ax + (py - ay) * (bx - ax) / (by - ay)
        inside ^= straddles & (px < crossing)

    return {Site(int(x), int(y)) for x, y in zip(px[inside], py[inside])}


def reachable_lengths(N: int, epsilon: float, steps: int) -> List[float]:
    """细分 steps 次后可能出现的边长 N·4^{-b}·ρ^m，ρ = sqrt(1 + ε^{4/3}/4)"""
    rho = math.sqrt(1.0 + epsilon ** (4.0 / 3.0) / 4.0)
    return sorted({N * 4.0 ** -b * rho ** m for b in range(steps + 1) for m in range(b + 1)})


def check_polygon(polygon: Polygon, epsilon: Optional[float] = None) -> None:
    """简单、逆时针、包含在 [-N, N]² 内；给出 ε 时还检查边长是否可达"""
    shape = polygon.to_shapely()
    if not shape.is_valid:
        raise DomainError(f"第 {polygon.level} 层多边形自相交")
    if not LinearRing(polygon.vertices).is_ccw:
        raise DomainError(f"第 {polygon.level} 层多边形不是逆时针")
    if not box(-polygon.N, -polygon.N, polygon.N, polygon.N).covers(shape):
        raise DomainError(f"第 {polygon.level} 层多边形超出了 [-N, N]²")
    lengths = [side.length for side in polygon.active_sides]
    if min(lengths) <= 0:
        raise DomainError(f"第 {polygon.level} 层多边形含有零长度的边")
    if epsilon is not None:
        allowed = np.array(reachable_lengths(polygon.N, epsilon, polygon.level - 1))
        for length in lengths:
            if np.min(np.abs(allowed - length)) > LENGTH_TOLERANCE * polygon.N:
                raise DomainError(f"边长 {length} 不在可达集合内")


def _inside_box(point: Point, N: int) -> bool:
    return abs(point[0]) <= N and abs(point[1]) <= N


def refine_step(polygon: Polygon, field: FieldRealization, epsilon: float,
                variant: str = "deterministic", seed: int = 0) -> Tuple[Polygon, int]:
    """对每条边接三角形或四等分，返回 (下一层多边形, 接受的三角形数)

    随机版本对每条边都抽一枚硬币，与是否用到无关，保证流的位置只依赖边的序号。
    """
    if variant not in VARIANTS:
        raise ParameterError(f"未知的构造方式: {variant}")
    if field.spec.N != polygon.N:
        raise DomainError(f"场的盒子 Λ_{field.spec.N} 与多边形的 N={polygon.N} 不一致")

    sides = polygon.active_sides
    coins = counter_stream(int(seed), STREAM_POLYGON_COIN, polygon.level).random(len(sides))
    produced: List[Point] = []
    accepted = 0

    for index, side in enumerate(sides):
        left, apex, right = triangle_for_side(side, epsilon)
        grow = False
        if variant == "deterministic" or coins[index] < 0.5:
            weight = site_set_weight(field, rasterize((left, apex, right), field.spec))
            grow = weight > 0 and _inside_box(apex, polygon.N)
        if grow:
            remaining = [s.start for s in sides[index + 1:]]
            tentative = produced + [side.start, left, apex, right] + remaining
            grow = ShapelyPolygon(tentative).is_valid
        if grow:
            produced.extend([side.start, left, apex, right])
            accepted += 1
        else:
            produced.extend([side.start, left, side.point_at(0.5), right])

    return Polygon(tuple(produced), polygon.level + 1, polygon.N), accepted


def polygon_weight(polygon: Polygon, field: FieldRealization) -> float:
    return site_set_weight(field, rasterize(polygon.vertices, field.spec))


def run_construction(field: FieldRealization, epsilon: float, max_level: int,
                     variant: str = "deterministic", seed: int = 0) -> List[PolygonLevel]:
    """P_1 .. P_{max_level}；所有边都短于格点分辨率时提前结束"""
    if max_level < 1:
        raise ParameterError(f"max_level 至少为 1: {max_level}")
    polygon = init_polygon(field.spec)
    check_polygon(polygon, epsilon)
    levels = [PolygonLevel(polygon, polygon_weight(polygon, field))]

    while polygon.level < max_level:
        if all(side.length < MIN_SIDE_LENGTH for side in polygon.active_sides):
            logger.info(f"第 {polygon.level} 层所有边都短于 {MIN_SIDE_LENGTH}，提前结束")
            break
        polygon, accepted = refine_step(polygon, field, epsilon, variant, seed)
        check_polygon(polygon, epsilon)
        levels.append(PolygonLevel(polygon, polygon_weight(polygon, field), accepted))
        logger.debug(f"第 {polygon.level} 层: 边数={polygon.side_count} 接受={accepted}")

    return levels
