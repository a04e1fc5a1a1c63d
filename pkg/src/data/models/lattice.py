"""格点几何数据模型"""
import numbers
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Tuple

from src.core.exceptions import ParameterError


class Site(NamedTuple):
    """Z² 中的格点"""
    x: int
    y: int


ORIGIN = Site(0, 0)
NEIGHBOR_OFFSETS: Tuple[Tuple[int, int], ...] = ((1, 0), (-1, 0), (0, 1), (0, -1))


def row_major_key(site: Tuple[int, int]) -> Tuple[int, int]:
    """行优先顺序：先 y 后 x"""
    return site[1], site[0]


def neighbors(site: Tuple[int, int]) -> Tuple[Site, ...]:
    """四个最近邻，顺序固定"""
    x, y = site
    return tuple(Site(x + dx, y + dy) for dx, dy in NEIGHBOR_OFFSETS)


@dataclass(frozen=True)
class BoxSpec:
    """盒子 Λ_N = {v : |v|_∞ ≤ N}"""
    N: int

    def __post_init__(self):
        if not isinstance(self.N, numbers.Integral) or self.N < 0:
            raise ParameterError(f"盒子半边长必须是非负整数: N={self.N!r}")
        object.__setattr__(self, "N", int(self.N))

    @property
    def side(self) -> int:
        return 2 * self.N + 1

    @property
    def site_count(self) -> int:
        return self.side * self.side

    def contains(self, site: Tuple[int, int]) -> bool:
        return abs(site[0]) <= self.N and abs(site[1]) <= self.N

    def is_boundary(self, site: Tuple[int, int]) -> bool:
        """|v|_∞ = N 的格点"""
        return max(abs(site[0]), abs(site[1])) == self.N

    def index(self, site: Tuple[int, int]) -> int:
        """行优先下标"""
        return (site[1] + self.N) * self.side + (site[0] + self.N)

    def site_at(self, index: int) -> Site:
        row, col = divmod(index, self.side)
        return Site(col - self.N, row - self.N)


@dataclass(frozen=True)
class LatticeAnimal:
    """格点动物：非空、四连通、单连通的有限格点集

    sites 按行优先排好序，作为规范形式；boundary_size 是 Z² 中的边界边数。
    """
    sites: Tuple[Site, ...]
    boundary_size: int

    @property
    def size(self) -> int:
        return len(self.sites)

    @property
    def site_set(self) -> frozenset:
        return frozenset(self.sites)

    def sort_key(self) -> Tuple[int, Tuple[Tuple[int, int], ...]]:
        """短字典序：先比大小，再比行优先的格点序列"""
        return len(self.sites), tuple(row_major_key(s) for s in self.sites)

    def __contains__(self, site: object) -> bool:
        return site in self.site_set


def canonical_sites(sites: Iterable[Tuple[int, int]]) -> Tuple[Site, ...]:
    """去重并按行优先排序"""
    return tuple(sorted({Site(int(s[0]), int(s[1])) for s in sites}, key=row_major_key))
