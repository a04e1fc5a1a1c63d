"""命令行端到端测试"""
import json

import pytest

from src.cli.main import EXIT_OK, EXIT_RUNTIME, EXIT_USAGE, main
from src.core.gla import exact_gla
from src.core.potts import magnetization
from src.data.models.lattice import BoxSpec
from src.data.models.params import MonteCarloParams
from src.data.repositories.field_repo import load_field
from src.data.repositories.output_repo import read_csv, read_json, write_csv


def run(capsys, *argv):
    """运行一次命令行，返回 (退出码, 解析后的 stdout)"""
    capsys.readouterr()
    code = main([str(a) for a in argv])
    out = capsys.readouterr().out
    return code, (json.loads(out) if code == EXIT_OK and out.strip() else None)


def _without_timestamp(payload):
    payload = dict(payload)
    manifest = dict(payload.pop("manifest"))
    manifest.pop("timestamp")
    payload["manifest"] = manifest
    return payload


@pytest.fixture
def field_file(tmp_path, capsys):
    path = tmp_path / "lambda2.field"
    code, _ = run(capsys, "field-gen", "--N", 2, "--q", 3, "--eps", 1, "--seed", 7,
                  "--out", path)
    assert code == EXIT_OK
    return path


def test_field_gen_is_reproducible(tmp_path, capsys, field_file):
    again = tmp_path / "again.field"
    code, payload = run(capsys, "field-gen", "--N", 2, "--q", 3, "--eps", 1, "--seed", 7,
                        "--out", again)
    assert code == EXIT_OK
    assert payload["N"] == 2
    assert again.read_bytes() == field_file.read_bytes()
    sidecar = read_json(tmp_path / "again.field.manifest.json")
    assert sidecar["command"] == "field-gen"
    assert "--out" not in sidecar["argv"]


def test_gla_exact_matches_library(capsys, field_file):
    code, payload = run(capsys, "gla-exact", "--field", field_file, "--max-size", 6)
    assert code == EXIT_OK
    expected = exact_gla(load_field(field_file), 6)
    assert payload["score"] == expected.score
    assert payload["sites"] == [list(s) for s in expected.animal.sites]
    assert payload["evaluations"] == expected.evaluations


def test_gla_exact_writes_outputs(tmp_path, capsys, field_file):
    out = tmp_path / "run"
    code, _ = run(capsys, "gla-exact", "--field", field_file, "--max-size", 4, "--out", out)
    assert code == EXIT_OK
    manifest = read_json(out / "manifest.json")
    assert manifest["outputs"] == ["animal.txt", "gla.json"]
    assert read_json(out / "gla.json")["manifest"]["command"] == "gla-exact"


def test_thm2_run(tmp_path, capsys):
    out = tmp_path / "thm2"
    code, payload = run(capsys, "thm2", "--N", "4,8,16", "--method", "greedy", "--samples", 20,
                        "--out", out)
    assert code == EXIT_OK
    rows = read_csv(out / "series.csv")
    assert [int(float(r["N"])) for r in rows] == [4, 8, 16]
    fit = read_json(out / "fit.json")
    assert (fit["fit"] is None) == (fit["fit_error"] is not None)
    assert fit["provenance"]["N_list"] == [4, 8, 16]
    assert payload["transform"] == "loglog_x:log_y"


def test_thm2_config_file(tmp_path, capsys):
    config = tmp_path / "thm2.json"
    config.write_text(json.dumps({"N": [3, 4, 5], "samples": 3, "method": "greedy"}),
                      encoding="utf-8")
    code, payload = run(capsys, "thm2", "--config", config, "--samples", 4)
    assert code == EXIT_OK
    assert payload["provenance"]["N_list"] == [3, 4, 5]
    assert payload["provenance"]["disorder_samples"] == 4

    config.write_text(json.dumps({"N": [3, 4], "colour": 2}), encoding="utf-8")
    code, _ = run(capsys, "thm2", "--config", config)
    assert code == EXIT_RUNTIME


def test_magnetization_matches_library(capsys):
    code, payload = run(capsys, "magnetization", "--N", 1, "--q", 3, "--eps", 1, "--seed", 1,
                        "--samples", 4, "--ground-state-method", "exhaustive")
    assert code == EXIT_OK
    m, stderr = magnetization(BoxSpec(1), 3, 1.0, float("inf"), 4,
                              MonteCarloParams(ground_state_method="exhaustive"), 1)
    assert payload["m"] == m
    assert payload["stderr"] == stderr


def test_gibbs_exact_small_box(capsys):
    code, payload = run(capsys, "gibbs-exact", "--N", 1, "--q", 2, "--eps", 1, "--seed", 3,
                        "--beta", 0.5)
    assert code == EXIT_OK
    assert payload["states"] == 512
    assert sum(payload["origin_marginal"]) == pytest.approx(1.0)


def test_fit_command(tmp_path, capsys):
    series = write_csv(tmp_path / "series.csv", ["x", "y", "yerr"],
                       [[x, 2.0 * x ** 0.75, 0.0] for x in (1.0, 2.0, 4.0, 8.0)])
    code, payload = run(capsys, "fit", "--series", series, "--out", tmp_path / "fit")
    assert code == EXIT_OK
    assert payload["slope"] == pytest.approx(0.75, abs=1e-12)
    assert (tmp_path / "fit" / "plot.svg").exists()


def test_polygon_command(tmp_path, capsys, field_file):
    code, payload = run(capsys, "polygon", "--field", field_file, "--levels", 3,
                        "--out", tmp_path / "poly")
    assert code == EXIT_OK
    assert payload["levels"][0]["side_count"] == 4
    trace = (tmp_path / "poly" / "trace.txt").read_text(encoding="utf-8")
    assert trace.startswith("# level side_count area weight")


def test_usage_errors(capsys, tmp_path):
    assert main(["gla-exact", "--bogus"]) == EXIT_USAGE
    assert main([]) == EXIT_USAGE
    assert main(["gla-exact", "--N", "2"]) == EXIT_USAGE
    assert "--q" in capsys.readouterr().err


def test_runtime_errors(capsys, tmp_path):
    assert main(["gla-exact", "--field", str(tmp_path / "missing.field")]) == EXIT_RUNTIME
    assert main(["gibbs-exact", "--N", "2", "--q", "3", "--eps", "1", "--seed", "1",
                 "--beta", "1"]) == EXIT_RUNTIME
    assert main(["gibbs-exact", "--N", "1", "--q", "3", "--eps", "1", "--seed", "1",
                 "--beta", "1", "--bc", "wired(5)"]) == EXIT_RUNTIME


def test_rerun_reproduces_outputs(tmp_path, capsys):
    first = tmp_path / "first"
    second = tmp_path / "second"
    code, _ = run(capsys, "gla-scan", "--N", 2, "--q", 2, "--eps", 1, "--seed", 1,
                  "--samples", 5, "--method", "greedy", "--out", first)
    assert code == EXIT_OK
    code = main(["rerun", "--manifest", str(first / "manifest.json"), "--out", str(second)])
    assert code == EXIT_OK
    assert (second / "gla_scan.csv").read_bytes() == (first / "gla_scan.csv").read_bytes()
    assert (_without_timestamp(read_json(second / "summary.json"))
            == _without_timestamp(read_json(first / "summary.json")))
