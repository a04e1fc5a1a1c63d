"""多边形构造的数据模型"""
import math
from dataclasses import dataclass
from typing import Tuple

from shapely.geometry import Polygon as ShapelyPolygon

Point = Tuple[float, float]


@dataclass(frozen=True)
class Side:
    """有向边 start -> end；多边形逆时针时外法向在右侧"""
    start: Point
    end: Point

    @property
    def length(self) -> float:
        return math.hypot(self.end[0] - self.start[0], self.end[1] - self.start[1])

    def point_at(self, t: float) -> Point:
        return (self.start[0] + t * (self.end[0] - self.start[0]),
                self.start[1] + t * (self.end[1] - self.start[1]))

    @property
    def outward_normal(self) -> Point:
        length = self.length
        dx, dy = self.end[0] - self.start[0], self.end[1] - self.start[1]
        return dy / length, -dx / length


@dataclass(frozen=True)
class Polygon:
    """逆时针的简单多边形，所有边都是活动边"""
    vertices: Tuple[Point, ...]
    level: int
    N: int

    @property
    def active_sides(self) -> Tuple[Side, ...]:
        count = len(self.vertices)
        return tuple(Side(self.vertices[i], self.vertices[(i + 1) % count]) for i in range(count))

    @property
    def side_count(self) -> int:
        return len(self.vertices)

    def to_shapely(self) -> ShapelyPolygon:
        return ShapelyPolygon(self.vertices)

    @property
    def area(self) -> float:
        return float(self.to_shapely().area)

    @property
    def perimeter(self) -> float:
        return float(self.to_shapely().length)


@dataclass(frozen=True)
class PolygonLevel:
    """构造中的一层：多边形、栅格化后的权重、接受的三角形数"""
    polygon: Polygon
    weight: float
    accepted: int = 0

    @property
    def level(self) -> int:
        return self.polygon.level

    @property
    def side_count(self) -> int:
        return self.polygon.side_count

    @property
    def area(self) -> float:
        return self.polygon.area
