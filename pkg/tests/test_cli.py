import json

import numpy as np
import pytest

from trafficqaoa import experiments as ex
from trafficqaoa.cli import main
from trafficqaoa.experiments import ConfigError, ExperimentConfig


def test_config_hash_is_stable_and_sensitive():
    a, b = ExperimentConfig(), ExperimentConfig()
    assert a.config_hash() == b.config_hash()
    assert a.replace(seed=1).config_hash() != a.config_hash()
    assert ExperimentConfig.from_dict(a.to_dict()) == a


def test_config_validation():
    with pytest.raises(ConfigError):
        ExperimentConfig(algorithms=("magic",))
    with pytest.raises(ConfigError):
        ExperimentConfig(cars=(0,))
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"bogus": 1})
    with pytest.raises(ConfigError):
        ExperimentConfig(coupling_map="torus:3")
    with pytest.raises(ConfigError):
        ExperimentConfig(network="no-such-network")


def test_fixture_network_instances():
    cfg = ExperimentConfig(network="three_paths.net", origin="O", destination="D", routes=3, instances=1)
    prob = ex.make_problem(cfg, 3, 0)
    assert prob.n_qubits == 9
    assert len(prob.spectrum.ground_states) == 6


def test_generate_writes_files(tmp_path):
    assert main(["generate", "--out", str(tmp_path), "--cars", "2", "--routes", "2"]) == 0
    folder = tmp_path / "c2_r2_s0"
    assert {p.name for p in folder.iterdir()} == {"instance.json", "qubo.json", "ising.json", "network.net"}
    cfg = json.loads((tmp_path / "config.json").read_text())
    assert cfg["config"]["cars"] == [2]


def test_bad_config_exits_one(tmp_path, capsys):
    assert main(["scaling", "--out", str(tmp_path), "--algorithms", "nope"]) == 1
    bad = tmp_path / "cfg.json"
    bad.write_text("{not json")
    assert main(["density", "--out", str(tmp_path), "--config", str(bad)]) == 1
    assert "config error" in capsys.readouterr().err


def test_report_on_empty_records_exits_two(tmp_path):
    empty = tmp_path / "records.json"
    empty.write_text(json.dumps({"records": []}))
    assert main(["report", str(empty)]) == 2


def test_scaling_and_report_roundtrip(tmp_path, capsys):
    out = tmp_path / "s"
    args = ["scaling", "--out", str(out), "--cars", "1", "2", "--instances", "2", "--shots", "500",
            "--grid-points", "16"]
    assert main(args) == 0
    records = json.loads((out / "records.json").read_text())["records"]
    assert len(records) == 2 * 2 * 3
    assert {r["algorithm"] for r in records} == set(ex.ALGORITHMS)
    for r in records:
        assert r["config_hash"] == records[0]["config_hash"]
        assert sum(1 for _ in r["shots_digest"]) == 16
    capsys.readouterr()
    assert main(["report", str(out / "records.json")]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0].startswith("algorithm,p,n_qubits")
    assert len(lines) == 1 + 3 * 2
    # a rerun of the same config reproduces the records
    again = tmp_path / "s2"
    assert main(args[:2] + [str(again)] + args[3:]) == 0
    assert json.loads((again / "records.json").read_text())["records"] == records


def test_config_file_with_flag_override(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"cars": [1], "instances": 1, "p": [1], "shots": 100, "grid_points": 8,
                               "algorithms": ["qaoa"]}))
    out = tmp_path / "o"
    assert main(["scaling", "--out", str(out), "--config", str(cfg), "--seed", "4"]) == 0
    saved = json.loads((out / "config.json").read_text())["config"]
    assert saved["seed"] == 4 and saved["cars"] == [1] and saved["routes"] == 2


def test_benchmark_init_small(tmp_path):
    out = tmp_path / "b"
    assert main(["benchmark-init", "--out", str(out), "--instances", "1", "--restarts", "2", "--cars", "2",
                 "--routes", "2", "--max-iter", "10"]) == 0
    summary = (out / "summary.csv").read_text().splitlines()
    assert len(summary) == 1 + 2 * 2  # two arms at each of p = 2, 3
    assert (out / "traces.csv").stat().st_size > 0


def test_density_and_precompute_small(tmp_path):
    cfg = ExperimentConfig(cars=(2,), routes=2, instances=1, p=(2,), precompute_samples=2,
                           precompute_qubits=4, max_iter=15, grid_points=8)
    rows, summary, meta = ex.density(cfg)
    assert len(rows) == 4 * 16
    assert {s["arm"] for s in summary} == set(ex.DENSITY_ARMS)
    for arm in ex.DENSITY_ARMS:
        assert sum(r["probability"] for r in rows if r["arm"] == arm) == pytest.approx(1)
    assert meta["background_probability"] == 1 / 16
    with pytest.raises(ConfigError):
        ex.density(cfg.replace(p=(1,)))
    out = tmp_path / "pre"
    assert main(["precompute", "--out", str(out), "--cars", "2", "--routes", "2", "--instances", "1",
                 "--p", "1", "--precompute-samples", "2", "--precompute-qubits", "4"]) == 0
    params = json.loads((out / "params.json").read_text())
    assert params[0]["p"] == 1 and params[0]["meta"]["strategy"] == "precomputed"
