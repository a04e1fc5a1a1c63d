"""多边形构造的轨迹文件和顶点 CSV"""
from pathlib import Path
from typing import Sequence

from src.data.models.polygon import PolygonLevel
from src.data.repositories.output_repo import PathLike, atomic_write_text, format_float, write_csv


def render_trace(levels: Sequence[PolygonLevel]) -> str:
    """每层一行：`level side_count area weight`"""
    lines = ["# level side_count area weight"]
    for item in levels:
        lines.append(f"{item.level} {item.side_count} {format_float(item.area)} "
                     f"{format_float(item.weight)}")
    return "\n".join(lines) + "\n"


def write_trace(levels: Sequence[PolygonLevel], path: PathLike) -> Path:
    return atomic_write_text(path, render_trace(levels))


def write_vertices(levels: Sequence[PolygonLevel], path: PathLike) -> Path:
    """全部层的顶点：level,index,x,y"""
    rows = [[item.level, index, x, y]
            for item in levels
            for index, (x, y) in enumerate(item.polygon.vertices)]
    return write_csv(path, ["level", "index", "x", "y"], rows)
