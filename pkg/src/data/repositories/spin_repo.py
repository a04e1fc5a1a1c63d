"""
自旋构型快照

格式：首行 `RFPM-SPINS v1 N=<n> q=<q> bc=<free|wired(c)>`，
其后 2N+1 行，每行是该行格点的颜色数字（行优先，y 从 -N 开始）。
"""
import re
from pathlib import Path

import numpy as np

from src.core.exceptions import FieldLoadError, UnsupportedVersionError
from src.data.models.lattice import BoxSpec
from src.data.models.spin import BoundaryCondition, SpinConfig
from src.data.repositories.output_repo import PathLike, atomic_write_text

MAGIC = "RFPM-SPINS"
FORMAT_VERSION = "v1"

HEADER_PATTERN = re.compile(
    r"^RFPM-SPINS (?P<version>v\d+) N=(?P<N>\d+) q=(?P<q>\d+) bc=(?P<bc>\S+)$"
)


def render_snapshot(config: SpinConfig) -> str:
    side = config.spec.side
    lines = [f"{MAGIC} {FORMAT_VERSION} N={config.spec.N} q={config.q} bc={config.bc}"]
    grid = config.spins.reshape(side, side)
    separator = " " if config.q > 10 else ""
    for row in grid:
        lines.append(separator.join(str(int(s)) for s in row))
    return "\n".join(lines) + "\n"


def write_snapshot(config: SpinConfig, path: PathLike) -> Path:
    return atomic_write_text(path, render_snapshot(config))


def read_snapshot(path: PathLike) -> SpinConfig:
    with open(path, "r", encoding="utf-8") as handle:
        lines = [line.rstrip("\n") for line in handle if line.strip()]
    if not lines:
        raise FieldLoadError(f"快照文件为空: {path}")
    match = HEADER_PATTERN.match(lines[0])
    if match is None:
        raise FieldLoadError(f"快照文件头损坏: {lines[0]!r}")
    if match["version"] != FORMAT_VERSION:
        raise UnsupportedVersionError(f"不支持的快照版本: {match['version']}")

    spec = BoxSpec(int(match["N"]))
    q = int(match["q"])
    bc = BoundaryCondition.parse(match["bc"])
    rows = lines[1:]
    if len(rows) != spec.side:
        raise FieldLoadError(f"快照行数 {len(rows)} 与 Λ_{spec.N} 不一致")
    if q > 10:
        values = [int(token) for row in rows for token in row.split()]
    else:
        values = [int(ch) for row in rows for ch in row]
    return SpinConfig(spec, q, np.array(values, dtype=np.int64), bc)
