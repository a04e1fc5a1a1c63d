"""pytest 公共配置与夹具"""
import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from src.core.field import constant_field, field_from_values, sample_field
from src.data.models.lattice import BoxSpec
from src.utils.config import get_settings
from tests.fixtures.sample_data import single_peak_values

settings.register_profile(
    "rfpm", max_examples=40, deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile("rfpm")


@pytest.fixture(autouse=True)
def single_thread(monkeypatch):
    """测试默认单线程，避免依赖机器核数"""
    monkeypatch.setenv("RFPM_THREADS", "1")
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture
def small_field():
    """Λ_2 上 q=3 的高斯场"""
    return sample_field(BoxSpec(2), 3, 1.0, 7)


@pytest.fixture
def zero_field():
    """Λ_2 上全零的场"""
    return constant_field(BoxSpec(2), 3, 0.0)


@pytest.fixture
def peak_field():
    """原点为 +1、其余为 -1e6 的单峰场"""
    return field_from_values(BoxSpec(2), single_peak_values(2, 3))


@pytest.fixture
def rng():
    return np.random.default_rng(20240101)
