"""验收运行：大样本的正确性与趋势检查，以及每个子命令的按清单重跑"""
import math

import numpy as np
import pytest

from src.cli.main import EXIT_OK, main
from src.core.field import sample_field
from src.core.gla import estimate_tail, exact_gla
from src.core.polygon import check_polygon, run_construction
from src.core.potts import HeatBathSampler, exact_gibbs_system, grid_system
from src.core.scaling import theorem1_experiment, theorem2_experiment
from src.data.models.field import FieldConvention
from src.data.models.lattice import BoxSpec
from src.data.models.params import MonteCarloParams, OptimizerSpec, SearchParams, StatsParams
from src.data.repositories.output_repo import read_json, write_csv
from tests.fixtures.sample_data import naive_gla


def _strip_timestamps(payload):
    if isinstance(payload, dict):
        return {k: _strip_timestamps(v) for k, v in payload.items() if k != "timestamp"}
    if isinstance(payload, list):
        return [_strip_timestamps(v) for v in payload]
    return payload


def _assert_same_outputs(first, second):
    names = sorted(p.name for p in first.iterdir())
    assert names == sorted(p.name for p in second.iterdir())
    for name in names:
        a, b = first / name, second / name
        if name.endswith(".json"):
            assert _strip_timestamps(read_json(a)) == _strip_timestamps(read_json(b)), name
        else:
            assert a.read_bytes() == b.read_bytes(), name


SMALL = ["--N", "2", "--q", "2", "--eps", "1", "--seed", "1"]

COMMANDS = {
    "gla-exact": ["gla-exact", *SMALL, "--max-size", "5"],
    "gla-heur": ["gla-heur", *SMALL, "--schedule-sweeps", "20"],
    "gla-scan": ["gla-scan", *SMALL, "--samples", "4", "--method", "greedy"],
    "tail": ["tail", *SMALL, "--samples", "100", "--method", "greedy"],
    "polygon": ["polygon", "--N", "16", "--q", "2", "--eps", "1", "--seed", "1", "--levels", "3"],
    "gibbs-exact": ["gibbs-exact", "--N", "1", "--q", "2", "--eps", "1", "--seed", "1",
                    "--beta", "0.5"],
    "mc": ["mc", "--N", "1", "--q", "2", "--eps", "1", "--seed", "1", "--beta", "0.5",
           "--burn-in", "10", "--sweeps", "50"],
    "ground-state": ["ground-state", "--N", "1", "--q", "3", "--eps", "1", "--seed", "1",
                     "--method", "anneal", "--bc", "wired(1)"],
    "magnetization": ["magnetization", "--N", "1", "--q", "3", "--eps", "1", "--seed", "1",
                      "--samples", "3", "--ground-state-method", "exhaustive", "--with-gla"],
    "corrlen": ["corrlen", "--eps", "1", "--samples", "2", "--N-max", "4",
                "--ground-state-method", "icm"],
    "thm2": ["thm2", "--N", "3,4,5", "--samples", "3", "--method", "greedy"],
    "thm1": ["thm1", "--eps", "1,2", "--samples", "2", "--N-max", "4",
             "--ground-state-method", "icm"],
}


@pytest.mark.parametrize("name", sorted(COMMANDS))
def test_rerun_from_manifest(tmp_path, name):
    first, second = tmp_path / "first", tmp_path / "second"
    assert main(COMMANDS[name] + ["--out", str(first)]) == EXIT_OK
    code = main(["rerun", "--manifest", str(first / "manifest.json"), "--out", str(second)])
    assert code == EXIT_OK
    _assert_same_outputs(first, second)


def test_rerun_fit_and_field_gen(tmp_path):
    series = write_csv(tmp_path / "series.csv", ["x", "y", "yerr"],
                       [[x, 3.0 * x ** 1.25, 0.1] for x in (2.0, 4.0, 8.0, 16.0)])
    first, second = tmp_path / "first", tmp_path / "second"
    assert main(["fit", "--series", str(series), "--out", str(first)]) == EXIT_OK
    assert main(["rerun", "--manifest", str(first / "manifest.json"),
                 "--out", str(second)]) == EXIT_OK
    _assert_same_outputs(first, second)

    field = tmp_path / "a.field"
    assert main(["field-gen", *SMALL, "--out", str(field)]) == EXIT_OK
    again = tmp_path / "b.field"
    assert main(["rerun", "--manifest", str(tmp_path / "a.field.manifest.json"),
                 "--out", str(again)]) == EXIT_OK
    assert field.read_bytes() == again.read_bytes()


# ---------------------------------------------------------------------------
# 长时间运行
# ---------------------------------------------------------------------------

@pytest.mark.slow
@pytest.mark.parametrize("q", [2, 3])
def test_exact_gla_oracle_many_seeds(q):
    for seed in range(1, 51):
        field = sample_field(BoxSpec(2), q, 1.0, seed)
        result = exact_gla(field, 8)
        cells, score = naive_gla(field.values, 2, 8)
        assert result.score == score
        assert result.animal.site_set == cells


@pytest.mark.slow
def test_heat_bath_total_variation():
    values = sample_field(BoxSpec(1), 3, 1.0, 3).values[:4]
    system = grid_system(2, 2, values, 1.0)
    table = exact_gibbs_system(system, 0.7)
    sampler = HeatBathSampler(system, 0.7, np.random.default_rng(3))
    powers = np.array([27, 9, 3, 1])
    spins = sampler.run(np.zeros(4, dtype=np.int64), 1000)
    sweeps = 1_000_000
    codes = np.empty(sweeps, dtype=np.int64)
    for i in range(sweeps):
        spins = sampler.sweep(spins)
        codes[i] = int(spins @ powers)
    empirical = np.bincount(codes, minlength=81) / sweeps
    assert 0.5 * np.abs(empirical - table.probabilities).sum() < 0.01


@pytest.mark.slow
def test_gla_growth_trend():
    optimizer = OptimizerSpec("anneal", max_size=None)
    experiment = theorem2_experiment([4, 8, 16, 32], 2, 1.0, FieldConvention.UNIT, optimizer,
                                     100, 1)
    means = [p.y for p in experiment.series.points]
    assert means == sorted(means)
    ratio = means[-1] / means[0]
    assert 1.0 <= ratio <= 2.0 * (math.log(32) / math.log(4)) ** 0.75


@pytest.mark.slow
def test_gla_tail_bound():
    estimates = estimate_tail(BoxSpec(8), 2, 1.0, FieldConvention.UNIT, [1.0, 2.0, 3.0],
                              10_000, OptimizerSpec("greedy", max_size=None), 1)
    fractions = [e.fraction for e in estimates]
    assert fractions == sorted(fractions, reverse=True)
    for e in estimates:
        assert e.fraction <= e.bound + 3 * e.binomial_sigma


@pytest.mark.slow
def test_correlation_length_trend():
    experiment, lengths = theorem1_experiment(
        [0.5, 1.0, 2.0], 3, 0.5, math.inf, SearchParams(N_start=1, N_max=32),
        StatsParams(disorder_samples=100, base_seed=1),
        MonteCarloParams(ground_state_method="anneal"))
    by_eps = {r.epsilon: (r.L if r.found else math.inf) for r in lengths}
    assert by_eps[0.5] >= by_eps[1.0] >= by_eps[2.0]
    assert (experiment.fit is None) == (experiment.fit_error is not None)


@pytest.mark.slow
def test_polygon_invariants_many_runs():
    for seed in range(1, 26):
        for epsilon in (0.25, 1.0):
            field = sample_field(BoxSpec(64), 2, epsilon, seed)
            for variant in ("deterministic", "stochastic"):
                levels = run_construction(field, epsilon, 4, variant, seed)
                for before, after in zip(levels, levels[1:]):
                    check_polygon(after.polygon, epsilon)
                    assert after.area >= before.area - 1e-9
