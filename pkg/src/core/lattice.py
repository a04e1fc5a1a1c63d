"""
盒子 Λ_N 的几何、格点动物的表示、连通性与边界计算，
以及包含原点的单连通格点动物的穷举
"""
import logging
from collections import deque
from typing import Callable, Iterable, Iterator, List, Optional, Set, Tuple

from src.core.exceptions import DomainError, ParameterError
from src.data.models.lattice import (
    ORIGIN, BoxSpec, LatticeAnimal, Site, canonical_sites, neighbors
)

logger = logging.getLogger(__name__)

# "edge": Z² 中恰有一个端点在集合内的边数；"site": 集合外相邻格点数
BOUNDARY_MODE = "edge"

# 带洞的多联骨牌至少需要 7 个格点
MIN_HOLE_SIZE = 7

# 超过这个规模时提醒调用方枚举量呈指数增长
ENUMERATION_WARN_SIZE = 12

AnimalPredicate = Callable[[LatticeAnimal], bool]


def sites_of_box(spec: BoxSpec) -> List[Site]:
    """Λ_N 的全部 (2N+1)² 个格点，行优先"""
    n = spec.N
    return [Site(x, y) for y in range(-n, n + 1) for x in range(-n, n + 1)]


def edge_boundary(sites: Iterable[Tuple[int, int]], mode: Optional[str] = None) -> int:
    """|∂A|，在整个 Z² 中计算，不截断到盒子"""
    cells = {Site(*s) for s in sites}
    if not cells:
        raise ParameterError("空集合的边界没有定义")

    mode = mode or BOUNDARY_MODE
    if mode == "edge":
        return sum(1 for c in cells for n in neighbors(c) if n not in cells)
    if mode == "site":
        return len({n for c in cells for n in neighbors(c) if n not in cells})
    raise ParameterError(f"未知的边界类型: {mode}")


def _is_connected(cells: Set[Site]) -> bool:
    start = next(iter(cells))
    seen = {start}
    queue = deque([start])
    while queue:
        for n in neighbors(queue.popleft()):
            if n in cells and n not in seen:
                seen.add(n)
                queue.append(n)
    return len(seen) == len(cells)


def _complement_connected(cells: Iterable[Site]) -> bool:
    """外扩一圈的包围盒里，补集从角上出发能否全部到达"""
    cells = set(cells)
    xs = [c[0] for c in cells]
    ys = [c[1] for c in cells]
    x0, x1 = min(xs) - 1, max(xs) + 1
    y0, y1 = min(ys) - 1, max(ys) + 1
    free_total = (x1 - x0 + 1) * (y1 - y0 + 1) - len(cells)

    start = Site(x0, y0)
    seen = {start}
    queue = deque([start])
    while queue:
        for n in neighbors(queue.popleft()):
            if x0 <= n[0] <= x1 and y0 <= n[1] <= y1 and n not in cells and n not in seen:
                seen.add(n)
                queue.append(n)
    return len(seen) == free_total


def is_simply_connected(sites: Iterable[Tuple[int, int]]) -> bool:
    """四连通且补集在 Z² 中四连通（没有洞）"""
    cells = {Site(*s) for s in sites}
    if not cells:
        return False
    return _is_connected(cells) and _complement_connected(cells)


def make_animal(sites: Iterable[Tuple[int, int]], spec: Optional[BoxSpec] = None,
                require_origin: bool = True, mode: Optional[str] = None) -> LatticeAnimal:
    """校验后构造格点动物"""
    canonical = canonical_sites(sites)
    if not canonical:
        raise DomainError("格点动物不能为空")
    if not is_simply_connected(canonical):
        raise DomainError("格点集合不是单连通的")
    if require_origin and ORIGIN not in canonical:
        raise DomainError("格点动物必须包含原点")
    if spec is not None and not all(spec.contains(s) for s in canonical):
        raise DomainError(f"格点动物超出了盒子 Λ_{spec.N}")
    return LatticeAnimal(canonical, edge_boundary(canonical, mode))


def validate_animal(animal: LatticeAnimal, spec: Optional[BoxSpec] = None,
                    require_origin: bool = True, mode: Optional[str] = None) -> None:
    """检查全部不变量，不满足时抛 DomainError"""
    rebuilt = make_animal(animal.sites, spec, require_origin, mode)
    if rebuilt.sites != animal.sites:
        raise DomainError("格点没有按规范顺序存放")
    if rebuilt.boundary_size != animal.boundary_size:
        raise DomainError(
            f"缓存的边界 {animal.boundary_size} 与重新计算的 {rebuilt.boundary_size} 不一致"
        )


def grow_connected_sets(spec: BoxSpec, max_size: int) -> Iterator[Tuple[List[Site], int]]:
    """Redelmeier 式生长，每个包含原点的连通集恰好产出一次

    产出 (当前格点列表, 边界边数)。列表在后续迭代中会被原地修改，
    调用方需要保存时自行复制。
    """
    members: Set[Site] = set()
    order: List[Site] = []
    marked: Set[Site] = {ORIGIN}

    def extend(untried: List[Site], boundary: int):
        while untried:
            cell = untried.pop()
            shared = sum(1 for n in neighbors(cell) if n in members)
            grown = boundary + 4 - 2 * shared
            members.add(cell)
            order.append(cell)
            yield order, grown
            if len(order) < max_size:
                fresh = [n for n in neighbors(cell) if spec.contains(n) and n not in marked]
                marked.update(fresh)
                yield from extend(untried + fresh, grown)
                marked.difference_update(fresh)
            members.discard(cell)
            order.pop()

    yield from extend([ORIGIN], 0)


def enumerate_animals(spec: BoxSpec, max_size: int,
                      predicate: Optional[AnimalPredicate] = None,
                      mode: Optional[str] = None) -> Iterator[LatticeAnimal]:
    """穷举 Λ_N 内包含原点、至多 max_size 个格点的单连通格点动物

    数量随 max_size 指数增长；|Λ_N| ≤ 49、max_size ≤ 10 以内可以很快跑完。
    """
    if max_size < 1:
        raise ParameterError(f"max_size 至少为 1: {max_size}")
    if max_size > ENUMERATION_WARN_SIZE:
        logger.warning(f"max_size={max_size} 的枚举量呈指数增长，可能非常耗时")

    mode = mode or BOUNDARY_MODE
    for cells, boundary in grow_connected_sets(spec, max_size):
        if len(cells) >= MIN_HOLE_SIZE and not _complement_connected(cells):
            continue
        canonical = canonical_sites(cells)
        if mode != "edge":
            boundary = edge_boundary(canonical, mode)
        animal = LatticeAnimal(canonical, boundary)
        if predicate is not None and not predicate(animal):
            continue
        yield animal
