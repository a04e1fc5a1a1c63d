"""
随机场文件的读写

格式：首行为
    RFPM-FIELD v1 N=<n> q=<q> eps=<decimal> seed=<u64> conv=<unit|literal>
其后每行一个格点（行优先），每行 q 个 17 位有效数字的浮点数。
"""
import logging
import re
from pathlib import Path

import numpy as np

from src.core.exceptions import FieldLoadError, LengthMismatchError, UnsupportedVersionError
from src.data.models.field import FieldConvention, FieldRealization
from src.data.models.lattice import BoxSpec
from src.data.repositories.output_repo import PathLike, atomic_write_text, format_float

logger = logging.getLogger(__name__)

MAGIC = "RFPM-FIELD"
FORMAT_VERSION = "v1"

HEADER_PATTERN = re.compile(
    r"^RFPM-FIELD (?P<version>v\d+) N=(?P<N>\d+) q=(?P<q>\d+) eps=(?P<eps>\S+) "
    r"seed=(?P<seed>\d+) conv=(?P<conv>\S+)$"
)


def format_header(field: FieldRealization) -> str:
    return (f"{MAGIC} {FORMAT_VERSION} N={field.spec.N} q={field.q} "
            f"eps={format_float(field.epsilon)} seed={field.seed} conv={field.convention.value}")


def render_field(field: FieldRealization) -> str:
    lines = [format_header(field)]
    for row in field.values:
        lines.append(" ".join(format_float(v) for v in row))
    return "\n".join(lines) + "\n"


def save_field(field: FieldRealization, path: PathLike) -> Path:
    """原子写出场文件"""
    written = atomic_write_text(path, render_field(field))
    logger.info(f"已保存随机场: {written}")
    return written


def load_field(path: PathLike) -> FieldRealization:
    """读取场文件，校验文件头与数据长度"""
    try:
        with open(path, "r", encoding="utf-8") as handle:
            text = handle.read()
    except OSError as e:
        raise FieldLoadError(f"无法读取场文件 {path}: {e}") from e

    lines = text.splitlines()
    if not lines or not lines[0].startswith(MAGIC + " "):
        raise FieldLoadError(f"场文件头损坏: {path}")

    match = HEADER_PATTERN.match(lines[0].strip())
    if match is None:
        version = lines[0].split()[1] if len(lines[0].split()) > 1 else "?"
        if version != FORMAT_VERSION:
            raise UnsupportedVersionError(f"不支持的场文件版本: {version}")
        raise FieldLoadError(f"场文件头损坏: {lines[0]!r}")
    if match["version"] != FORMAT_VERSION:
        raise UnsupportedVersionError(f"不支持的场文件版本: {match['version']}")

    try:
        spec = BoxSpec(int(match["N"]))
        q = int(match["q"])
        epsilon = float(match["eps"])
        seed = int(match["seed"])
        convention = FieldConvention(match["conv"])
    except ValueError as e:
        raise FieldLoadError(f"场文件头字段无效: {e}") from e

    tokens = " ".join(lines[1:]).split()
    expected = q * spec.site_count
    if len(tokens) != expected:
        raise LengthMismatchError(f"数据长度 {len(tokens)} 与文件头声明的 {expected} 不一致")

    try:
        values = np.array([float(t) for t in tokens], dtype=np.float64).reshape(spec.site_count, q)
    except ValueError as e:
        raise FieldLoadError(f"场数据无法解析: {e}") from e
    if not np.all(np.isfinite(values)):
        raise FieldLoadError("场数据含有非有限值")

    return FieldRealization(spec, q, epsilon, seed, convention, values)
