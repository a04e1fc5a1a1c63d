"""应用程序配置管理"""
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Optional
import os

import psutil
from dotenv import load_dotenv


def _default_threads() -> int:
    """默认线程数：物理核数，取不到时为1"""
    return psutil.cpu_count(logical=False) or 1


@dataclass
class Settings:
    """应用程序设置"""
    app_name: str = "Random-Field Potts Toolkit"
    version: str = "0.3.0"
    threads: int = 1
    log_level: str = "INFO"
    log_dir: Optional[Path] = None
    exhaustive_limit: int = 2_000_000  # 精确枚举的状态空间上限
    default_threshold: float = 0.5

    def __post_init__(self):
        """初始化后处理：.env 与环境变量覆盖默认值"""
        load_dotenv(override=False)

        threads = os.getenv("RFPM_THREADS")
        self.threads = int(threads) if threads else _default_threads()
        self.log_level = os.getenv("RFPM_LOG_LEVEL", self.log_level).upper()

        log_dir = os.getenv("RFPM_LOG_DIR")
        self.log_dir = Path(log_dir) if log_dir else None

        limit = os.getenv("RFPM_EXHAUSTIVE_LIMIT")
        if limit:
            self.exhaustive_limit = int(limit)

    def resolve_threads(self, requested: Optional[int]) -> int:
        """命令行 --threads 优先，其次环境变量"""
        if requested is not None and requested > 0:
            return requested
        return max(1, self.threads)


@lru_cache()
def get_settings() -> Settings:
    """获取配置实例"""
    return Settings()
