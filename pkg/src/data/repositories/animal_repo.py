"""格点动物的文本格式：每行 `size boundary x1,y1 x2,y2 ...`"""
from pathlib import Path
from typing import Iterable, List

from src.core.exceptions import DomainError
from src.data.models.lattice import LatticeAnimal, Site, canonical_sites
from src.data.repositories.output_repo import PathLike, atomic_write_text


def format_animal(animal: LatticeAnimal) -> str:
    coords = " ".join(f"{s.x},{s.y}" for s in animal.sites)
    return f"{animal.size} {animal.boundary_size} {coords}"


def parse_animal(line: str) -> LatticeAnimal:
    parts = line.split()
    if len(parts) < 3:
        raise DomainError(f"格点动物行格式错误: {line!r}")
    size, boundary = int(parts[0]), int(parts[1])
    sites = tuple(Site(*map(int, token.split(","))) for token in parts[2:])
    if len(sites) != size or canonical_sites(sites) != sites:
        raise DomainError(f"格点动物不是规范形式: {line!r}")
    return LatticeAnimal(sites, boundary)


def write_animals(path: PathLike, animals: Iterable[LatticeAnimal]) -> Path:
    return atomic_write_text(path, "".join(format_animal(a) + "\n" for a in animals))


def read_animals(path: PathLike) -> List[LatticeAnimal]:
    with open(path, "r", encoding="utf-8") as handle:
        return [parse_animal(line) for line in handle if line.strip()]
