"""随机场 Potts 模型：能量、精确 Gibbs 表、热浴、基态与磁化强度"""
import itertools
import math

import numpy as np
import pytest

from src.core.exceptions import DomainError, ParameterError, StateSpaceTooLargeError
from src.core.field import constant_field, field_from_values, sample_field
from src.core.potts import (
    HeatBathSampler, box_system, conditional_probabilities, energies, energy, exact_gibbs,
    exact_gibbs_system, grid_system, ground_state, heat_bath_sweep, magnetization,
    magnetization_records, realization_record
)
from src.data.models.lattice import BoxSpec
from src.data.models.params import MonteCarloParams
from src.data.models.spin import BoundaryCondition, GibbsParams, SpinConfig, boundary_mask
from tests.fixtures.sample_data import brute_force_gibbs, brute_force_minimum, grid_energy

FREE = BoundaryCondition.free()
WIRED = BoundaryCondition.wired(0)
EXHAUSTIVE = MonteCarloParams(ground_state_method="exhaustive")


def _ising_energy(spins, values, epsilon, spec):
    """σ = 2s - 1 下的仿射形式：-(E/2 + 边数/2 + ε·Σ[(h⁰+h¹)/2 + (h¹-h⁰)σ/2])"""
    sigma = 2 * np.asarray(spins) - 1
    side = spec.side
    grid = sigma.reshape(side, side)
    coupling = float((grid[:, 1:] * grid[:, :-1]).sum() + (grid[1:, :] * grid[:-1, :]).sum())
    edges = 2 * side * (side - 1)
    field = sum((values[i, 0] + values[i, 1]) / 2 + (values[i, 1] - values[i, 0]) * sigma[i] / 2
                for i in range(spec.site_count))
    return -(coupling / 2 + edges / 2 + epsilon * field)


# ---------------------------------------------------------------------------
# 能量
# ---------------------------------------------------------------------------

def test_energy_constant_config_counts_bonds():
    spec = BoxSpec(1)
    config = SpinConfig.constant(spec, 3, 2)
    assert energy(config, constant_field(spec, 3), 1.0) == -12.0


def test_energy_single_site():
    field = field_from_values(BoxSpec(0), [[0.3, -1.2, 2.0]])
    config = SpinConfig(BoxSpec(0), 3, [1], FREE)
    assert energy(config, field, 0.5) == pytest.approx(-0.5 * -1.2, rel=1e-15)


def test_energy_spec_mismatch(small_field):
    with pytest.raises(DomainError):
        energy(SpinConfig.constant(BoxSpec(1), 3, 0), small_field, 1.0)
    with pytest.raises(DomainError):
        energy(SpinConfig.constant(BoxSpec(2), 2, 0), small_field, 1.0)


def test_ising_reduction_free():
    spec = BoxSpec(1)
    field = sample_field(spec, 2, 1.0, 4)
    for spins in itertools.product((0, 1), repeat=9):
        config = SpinConfig(spec, 2, spins, FREE)
        expected = _ising_energy(spins, field.values, 0.7, spec)
        assert abs(energy(config, field, 0.7) - expected) < 1e-12


@pytest.mark.parametrize("color", [0, 1])
def test_ising_reduction_wired(color):
    spec = BoxSpec(1)
    field = sample_field(spec, 2, 1.0, 5)
    mask = boundary_mask(spec)
    for origin in (0, 1):
        spins = np.where(mask, color, origin)
        config = SpinConfig(spec, 2, spins, BoundaryCondition.wired(color))
        expected = _ising_energy(spins, field.values, 1.3, spec)
        assert abs(energy(config, field, 1.3) - expected) < 1e-12


def test_vectorized_energies_match_oracle(rng):
    values = rng.normal(size=(4, 3))
    system = grid_system(2, 2, values, 0.8)
    configs = np.array(list(itertools.product(range(3), repeat=4)))
    expected = [grid_energy(c, values, 0.8, 2, 2) for c in configs]
    assert np.allclose(energies(system, configs), expected, rtol=0, atol=1e-12)


def test_color_permutation_covariance():
    """零场下同时置换构型和 wired 颜色，能量不变"""
    spec = BoxSpec(1)
    field = constant_field(spec, 3)
    rng = np.random.default_rng(3)
    for permutation in itertools.permutations(range(3)):
        mapping = np.array(permutation)
        for _ in range(5):
            spins = np.where(boundary_mask(spec), 0, rng.integers(0, 3, spec.site_count))
            base = SpinConfig(spec, 3, spins, WIRED)
            moved = SpinConfig(spec, 3, mapping[spins], BoundaryCondition.wired(mapping[0]))
            assert energy(base, field, 1.0) == energy(moved, field, 1.0)


# ---------------------------------------------------------------------------
# 精确 Gibbs 表
# ---------------------------------------------------------------------------

def test_exact_gibbs_is_normalized():
    spec = BoxSpec(1)
    field = sample_field(spec, 3, 1.0, 2)
    table = exact_gibbs(spec, 3, field, GibbsParams(0.9, 1.0), FREE)
    assert len(table) == 3 ** 9
    assert abs(table.probabilities.sum() - 1.0) < 1e-10
    assert np.all(table.probabilities >= 0)


def test_exact_gibbs_high_temperature_is_uniform():
    spec = BoxSpec(1)
    field = sample_field(spec, 3, 1.0, 2)
    table = exact_gibbs(spec, 3, field, GibbsParams(1e-9, 1.0), FREE)
    uniform = 1.0 / len(table)
    assert 0.5 * np.abs(table.probabilities - uniform).sum() < 1e-6


def test_exact_gibbs_wired_low_temperature():
    spec = BoxSpec(1)
    table = exact_gibbs(spec, 3, constant_field(spec, 3), GibbsParams(10.0, 1.0), WIRED)
    assert len(table) == 3
    assert np.array_equal(table.most_probable(), np.zeros(9))


def test_exact_gibbs_matches_brute_force(rng):
    values = rng.normal(size=(4, 3))
    system = grid_system(2, 2, values, 1.1)
    table = exact_gibbs_system(system, 0.6)
    oracle = brute_force_gibbs(values, 1.1, 0.6, 2, 2)
    for config, probability in oracle.items():
        assert table.probability_of(config) == pytest.approx(probability, rel=1e-9)
    marginal = np.zeros(3)
    for config, probability in oracle.items():
        marginal[config[0]] += probability
    assert np.allclose(table.marginal(0), marginal, atol=1e-12)


def test_exact_gibbs_ground_state_limit():
    spec = BoxSpec(1)
    table = exact_gibbs(spec, 2, constant_field(spec, 2), GibbsParams(math.inf, 1.0), FREE)
    assert table.probabilities.max() == 0.5
    assert table.probability_of(np.ones(9, dtype=int)) == 0.5


def test_exact_gibbs_refuses_large_state_space(small_field):
    with pytest.raises(StateSpaceTooLargeError):
        exact_gibbs(BoxSpec(2), 3, small_field, GibbsParams(1.0, 1.0), FREE)


def test_gibbs_params_validation():
    with pytest.raises(ParameterError):
        GibbsParams(0.0, 1.0)
    with pytest.raises(ParameterError):
        GibbsParams(1.0, -1.0)
    assert GibbsParams(math.inf, 1.0).is_ground_state


# ---------------------------------------------------------------------------
# 热浴
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("beta", [0.3, 1.0])
@pytest.mark.parametrize("q", [2, 3, 4])
def test_conditional_closed_form(beta, q):
    system = grid_system(3, 3, np.zeros((9, q)), 1.0)
    spins = np.ones(9, dtype=np.int64)
    probabilities = conditional_probabilities(system, spins, 4, beta)
    k = 4
    expected = math.exp(beta * k) / (math.exp(beta * k) + q - 1)
    assert probabilities[1] == pytest.approx(expected, rel=1e-12)
    corner = conditional_probabilities(system, spins, 0, beta)
    assert corner[1] == pytest.approx(math.exp(2 * beta) / (math.exp(2 * beta) + q - 1),
                                      rel=1e-12)


@pytest.mark.parametrize("instance", range(20))
def test_detailed_balance(instance):
    """π(s)·k(s→s′) = π(s′)·k(s′→s)，s 与 s′ 只在一个格点不同"""
    rng = np.random.default_rng(instance)
    q = 3
    values = rng.normal(size=(4, q))
    beta = float(rng.uniform(0.2, 2.0))
    system = grid_system(2, 2, values, 1.0)
    table = exact_gibbs_system(system, beta)
    spins = rng.integers(0, q, 4)
    site = int(rng.integers(0, 4))
    kernel = conditional_probabilities(system, spins, site, beta)
    for color in range(q):
        moved = spins.copy()
        moved[site] = color
        back = conditional_probabilities(system, moved, site, beta)
        forward = table.probability_of(spins) * kernel[color]
        reverse = table.probability_of(moved) * back[spins[site]]
        assert forward == pytest.approx(reverse, rel=1e-10)


def test_heat_bath_matches_exact_distribution():
    """2×2 自由网格、q=3、β=0.7：经验分布与精确表的总变差"""
    values = sample_field(BoxSpec(1), 3, 1.0, 3).values[:4]
    system = grid_system(2, 2, values, 1.0)
    table = exact_gibbs_system(system, 0.7)
    sampler = HeatBathSampler(system, 0.7, np.random.default_rng(3))
    spins = sampler.run(np.zeros(4, dtype=np.int64), 100)
    counts = {}
    sweeps = 100_000
    for _ in range(sweeps):
        spins = sampler.sweep(spins)
        key = tuple(int(s) for s in spins)
        counts[key] = counts.get(key, 0) + 1
    distance = 0.5 * sum(abs(counts.get(tuple(int(s) for s in config), 0) / sweeps - p)
                         for config, p in zip(table.configs, table.probabilities))
    assert distance < 0.04


def test_heat_bath_keeps_wired_boundary(small_field):
    bc = BoundaryCondition.wired(2)
    config = SpinConfig.constant(BoxSpec(2), 3, 0, bc)
    rng = np.random.default_rng(0)
    mask = boundary_mask(BoxSpec(2))
    for _ in range(50):
        config = heat_bath_sweep(config, small_field, GibbsParams(1.5, 1.0), rng)
        assert np.all(config.spins[mask] == 2)


def test_heat_bath_is_deterministic(small_field):
    start = SpinConfig.constant(BoxSpec(2), 3, 0)
    params = GibbsParams(0.8, 1.0)
    first = heat_bath_sweep(start, small_field, params, 17)
    assert first == heat_bath_sweep(start, small_field, params, 17)


def test_heat_bath_refuses_infinite_beta(small_field):
    system = box_system(small_field, 1.0, FREE)
    with pytest.raises(ParameterError):
        HeatBathSampler(system, math.inf, np.random.default_rng(0))


# ---------------------------------------------------------------------------
# 基态
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("method", ["exhaustive", "icm", "anneal"])
def test_ground_state_dominant_field(method):
    spec = BoxSpec(1)
    values = np.zeros((9, 3))
    values[:, 2] = 1e6
    field = field_from_values(spec, values)
    config, value = ground_state(spec, 3, field, 1.0, FREE, method, seed=1)
    assert np.all(config.spins == 2)
    assert value == -(12 + 9e6)


def test_ground_state_zero_field_wired():
    spec = BoxSpec(1)
    config, value = ground_state(spec, 3, constant_field(spec, 3), 1.0, WIRED)
    assert np.all(config.spins == 0)
    assert value == -12.0


def test_ground_state_ties_are_lexicographic():
    spec = BoxSpec(1)
    config, _ = ground_state(spec, 3, constant_field(spec, 3), 1.0, FREE)
    assert np.all(config.spins == 0)


def test_ground_state_unknown_method(small_field):
    with pytest.raises(ParameterError):
        ground_state(BoxSpec(2), 3, small_field, 1.0, WIRED, "magic")


def test_anneal_ground_state_against_exhaustive():
    spec = BoxSpec(1)
    hits = 0
    for seed in range(50):
        field = sample_field(spec, 3, 1.0, seed)
        _, best = ground_state(spec, 3, field, 1.0, FREE, "exhaustive")
        _, found = ground_state(spec, 3, field, 1.0, FREE, "anneal", seed=seed)
        assert found >= best - 1e-12
        hits += abs(found - best) <= 1e-12
    assert hits >= 45


def test_exhaustive_matches_oracle_minimum():
    spec = BoxSpec(1)
    field = sample_field(spec, 2, 1.0, 8)
    _, value = ground_state(spec, 2, field, 1.0, FREE)
    oracle = brute_force_minimum(field.values, 1.0, 3, 3)
    assert value == pytest.approx(oracle, abs=1e-12)


# ---------------------------------------------------------------------------
# 磁化强度
# ---------------------------------------------------------------------------

def test_spin_config_validation():
    spec = BoxSpec(1)
    with pytest.raises(DomainError):
        SpinConfig(spec, 3, np.full(9, 3), FREE)
    with pytest.raises(DomainError):
        SpinConfig(spec, 3, np.ones(9, dtype=int), WIRED)
    with pytest.raises(DomainError):
        SpinConfig(spec, 3, np.zeros(9, dtype=int), BoundaryCondition.wired(3))


@pytest.mark.parametrize("text,expected", [
    ("free", BoundaryCondition.free()),
    ("wired", BoundaryCondition.wired(0)),
    ("wired(2)", BoundaryCondition.wired(2)),
])
def test_boundary_condition_parse(text, expected):
    assert BoundaryCondition.parse(text) == expected
    assert BoundaryCondition.parse(str(expected)) == expected


def test_zero_field_ground_state_magnetization():
    spec = BoxSpec(1)
    records = magnetization_records(spec, 3, 1.0, math.inf, 3, EXHAUSTIVE, 1,
                                    field_factory=lambda seed: constant_field(spec, 3))
    assert all(r.p0_wired == 1.0 for r in records)
    assert all(r.value == 0.0 for r in records)


def test_high_temperature_magnetization_vanishes():
    params = MonteCarloParams(thermal_method="exact")
    m, _ = magnetization(BoxSpec(1), 3, 1.0, 1e-9, 3, params, 1)
    assert abs(m) < 1e-6


def test_ground_state_magnetization_matches_oracle():
    """N=1、q=3、ε=1、β=∞：逐个种子与穷举最低能构型的原点颜色比较"""
    spec = BoxSpec(1)
    mask = boundary_mask(spec)
    seeds = range(1, 21)
    expected = []
    for seed in seeds:
        values = sample_field(spec, 3, 1.0, seed).values
        free = min(itertools.product(range(3), repeat=9),
                   key=lambda s: grid_energy(s, values, 1.0, 3, 3))
        wired = min(range(3), key=lambda c: grid_energy(np.where(mask, 0, c), values, 1.0, 3, 3))
        expected.append(1.5 * ((wired == 0) - (free[4] == 0)))
    records = magnetization_records(spec, 3, 1.0, math.inf, len(seeds), EXHAUSTIVE, 1)
    assert [r.value for r in records] == expected


def test_realization_record_with_gla(small_field):
    record = realization_record(BoxSpec(2), small_field, 1.0, math.inf,
                                MonteCarloParams(ground_state_method="icm"), 7, with_gla=True)
    assert record.gla_score is not None
    assert record.gla_indicator == (record.gla_score >= 1.0)
    assert record.bc == "wired(0)|free"


def test_magnetization_requires_samples():
    with pytest.raises(ParameterError):
        magnetization(BoxSpec(1), 3, 1.0, math.inf, 1, EXHAUSTIVE, 1)
