"""CLI subcommands, output files, and the config loader."""

import json

import numpy as np
import pytest

from fedlora.cli import main
from fedlora.config import ConfigError, load_config, sim_config_from_mapping
from fedlora.output import fmt_float

SMALL_CONFIG = """
seed: 5
n_clients: 4
rounds: 3
n_test: 300
task:
  n_per_client: 96
"""


@pytest.fixture
def config_path(tmp_path):
    path = tmp_path / "config.yaml"
    path.write_text(SMALL_CONFIG)
    return str(path)


# --- config loading ---


def test_load_config_defaults_and_overrides(config_path):
    cfg = load_config(config_path)
    assert cfg.seed == 5
    assert cfg.n_clients == 4
    assert cfg.task.n_per_client == 96
    assert cfg.task.d_in == 32  # untouched default
    assert cfg.aggregator.value == "noise_weighted"


def test_load_config_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="nowhere.yaml"):
        load_config(tmp_path / "nowhere.yaml")


def test_unknown_keys_rejected():
    with pytest.raises(ConfigError, match="n_clienst"):
        sim_config_from_mapping({"n_clienst": 7})
    with pytest.raises(ConfigError, match="task"):
        sim_config_from_mapping({"task": {"learning_rte": 0.1}})


def test_invalid_values_rejected():
    with pytest.raises(ConfigError):
        sim_config_from_mapping({"rounds": 0})
    with pytest.raises(ConfigError):
        sim_config_from_mapping({"aggregator": "fancy"})


def test_explicit_action_set_list():
    cfg = sim_config_from_mapping({"action_set": [0.0, 0.3, 1.0]})
    assert cfg.actions().levels == (0.0, 0.3, 1.0)


def test_default_config_file_loads():
    cfg = load_config("configs/default.yaml")
    assert cfg.n_clients == 10
    assert cfg.rounds == 20
    assert cfg.sigma_max == 0.1
    assert cfg.alpha_dir == 0.3
    assert cfg.actions().levels == (0.0, 0.1, 0.5, 1.0)


# --- run subcommand ---


def test_run_writes_outputs(config_path, tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["run", "--config", config_path, "--out", str(out)]) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["schema_version"] == 1
    assert summary["config"]["seed"] == 5
    assert 0.0 <= summary["metrics"]["global_accuracy_mean"] <= 1.0

    lines = (out / "rounds.csv").read_text().splitlines()
    assert lines[0] == "run_id,round,metric,value"
    rows = [line.split(",") for line in lines[1:]]
    per_metric = {}
    for _, rnd, metric, value in rows:
        per_metric.setdefault(metric, []).append((int(rnd), value))
    # exactly rounds rows per metric
    assert all(len(v) == 3 for v in per_metric.values())
    # global metric, six per-client series, and 4 policy estimates per client
    assert len(per_metric) == 1 + 6 * 4 + 4 * 4


def test_run_missing_config_exits_nonzero(tmp_path, capsys):
    code = main(["run", "--config", str(tmp_path / "absent.yaml"), "--out", str(tmp_path / "o")])
    assert code != 0
    err = capsys.readouterr().err
    assert err.startswith("error: config:")
    assert "absent.yaml" in err


def test_run_byte_identical_reruns(config_path, tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert main(["run", "--config", config_path, "--out", str(out1)]) == 0
    assert main(["run", "--config", config_path, "--out", str(out2)]) == 0
    for name in ("summary.json", "rounds.csv"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


def test_run_seed_override_changes_output(config_path, tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    main(["run", "--config", config_path, "--out", str(out1)])
    main(["run", "--config", config_path, "--out", str(out2), "--seed", "99"])
    s1 = json.loads((out1 / "summary.json").read_text())
    s2 = json.loads((out2 / "summary.json").read_text())
    assert s1["run_id"] != s2["run_id"]
    assert s2["config"]["seed"] == 99


# --- sweep subcommand ---


def test_sweep_writes_cells_and_index(config_path, tmp_path):
    out = tmp_path / "sweep"
    code = main(
        ["sweep", "--config", config_path, "--axis", "bias_rho",
         "--values", "0.8,1.0,1.2", "--out", str(out)]
    )
    assert code == 0
    index = json.loads((out / "index.json").read_text())
    assert index["axis"] == "bias_rho"
    assert [c["status"] for c in index["cells"]] == ["ok"] * 3
    for cell in index["cells"]:
        assert (out / cell["dir"] / "summary.json").exists()
        assert (out / cell["dir"] / "rounds.csv").exists()


def test_sweep_single_value_matches_run(config_path, tmp_path):
    run_out = tmp_path / "run"
    sweep_out = tmp_path / "sweep"
    main(["run", "--config", config_path, "--out", str(run_out)])
    main(
        ["sweep", "--config", config_path, "--axis", "gamma_mu",
         "--values", "0.5", "--out", str(sweep_out)]
    )
    cell_dir = json.loads((sweep_out / "index.json").read_text())["cells"][0]["dir"]
    # gamma_mu=0.5 and seed offset 0 reproduce the plain run exactly
    assert (sweep_out / cell_dir / "rounds.csv").read_bytes() == (run_out / "rounds.csv").read_bytes()


def test_sweep_failure_reflected_in_exit_code(config_path, tmp_path, capsys):
    out = tmp_path / "sweep"
    code = main(
        ["sweep", "--config", config_path, "--axis", "alpha_dir",
         "--values", "0.3,-1.0", "--out", str(out)]
    )
    assert code == 1
    index = json.loads((out / "index.json").read_text())
    statuses = {c["status"] for c in index["cells"]}
    assert statuses == {"ok", "error"}


# --- check subcommand ---


@pytest.mark.parametrize("suite", ["aggregation", "gradients"])
def test_check_fast_suites_pass(suite, capsys):
    assert main(["check", "--suite", suite]) == 0
    out = capsys.readouterr().out
    assert "PASS" in out


def test_check_bandit_suite(capsys):
    assert main(["check", "--suite", "bandit"]) == 0
    assert "fraction=" in capsys.readouterr().out


def test_check_estimation_suite(capsys):
    assert main(["check", "--suite", "estimation"]) == 0
    assert "spearman=" in capsys.readouterr().out


# --- float formatting contract ---


def test_fmt_float_significant_digits():
    assert fmt_float(0.1) == "1.000000000000e-01"
    assert len(fmt_float(np.pi).replace("-", "").replace(".", "").split("e")[0]) == 13
