"""
计数器型随机数流
所有随机性都由 (seed, 键...) 唯一确定，与调度顺序无关
"""
from typing import Tuple

import numpy as np
from scipy.special import ndtri

MASK64 = (1 << 64) - 1
COORD_OFFSET = 1 << 31

# 不同用途使用不同的流标签，互不干扰
STREAM_ANNEAL_GLA = 1
STREAM_POLYGON_COIN = 2
STREAM_HEAT_BATH = 3
STREAM_GROUND_STATE = 4


def site_key(seed: int, x: int, y: int) -> int:
    """把 (seed, x, y) 打包成 Philox 的 128 位密钥"""
    block = ((x + COORD_OFFSET) << 32) | (y + COORD_OFFSET)
    return (block << 64) | (seed & MASK64)


def uniforms_from_raw(raw: np.ndarray) -> np.ndarray:
    """64 位原始输出 -> (0, 1) 开区间上的均匀数，取高 53 位"""
    mantissa = (raw >> np.uint64(11)).astype(np.float64)
    return (mantissa + 0.5) * 2.0 ** -53


def site_uniforms(seed: int, site: Tuple[int, int], count: int) -> np.ndarray:
    """某个格点上的 count 个均匀数；只依赖 (seed, 格点)"""
    bit_generator = np.random.Philox(key=site_key(seed, site[0], site[1]))
    return uniforms_from_raw(bit_generator.random_raw(count))


def site_gaussians(seed: int, site: Tuple[int, int], count: int) -> np.ndarray:
    """逆CDF变换得到的标准正态数，不含拒绝采样"""
    return ndtri(site_uniforms(seed, site, count))


def counter_stream(seed: int, *keys: int) -> np.random.Generator:
    """按 (seed, 键...) 派生的独立生成器"""
    sequence = np.random.SeedSequence(entropy=seed & MASK64, spawn_key=tuple(keys))
    return np.random.Generator(np.random.Philox(sequence))
