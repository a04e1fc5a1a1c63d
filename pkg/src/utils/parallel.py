"""并行执行工具：结果总是按输入顺序归约"""
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Optional, TypeVar

from src.utils.config import get_settings

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def ordered_map(func: Callable[[T], R], items: Iterable[T],
                threads: Optional[int] = None) -> List[R]:
    """对每个输入调用 func，返回与输入同序的结果列表"""
    items = list(items)
    workers = get_settings().resolve_threads(threads)
    if workers <= 1 or len(items) <= 1:
        return [func(item) for item in items]

    logger.debug(f"并行执行 {len(items)} 个任务，线程数 {workers}")
    with ThreadPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(func, items))
