import json

import pytest

from src.utils.config import (
    DEFAULT_CONFIG,
    ConfigError,
    ExperimentConfig,
    build_experiment_config,
    get_config,
    load_config_file,
)


def test_defaults():
    config = get_config()
    assert config == DEFAULT_CONFIG
    assert config["LINK_TRIALS"] == 1_000_000
    assert config["LINK_PASS1_FRACTION"] == 0.1


def test_environment_overrides(monkeypatch):
    monkeypatch.setenv("LINK_TRIALS", "500")
    monkeypatch.setenv("LINK_PASS1_FRACTION", "0.25")
    monkeypatch.setenv("LINK_OUTPUT_FORMAT", "json")
    config = get_config()
    assert config["LINK_TRIALS"] == 500
    assert config["LINK_PASS1_FRACTION"] == 0.25
    assert config["LINK_OUTPUT_FORMAT"] == "json"


def test_bad_environment_value(monkeypatch):
    monkeypatch.setenv("LINK_WORKERS", "many")
    with pytest.raises(ConfigError):
        get_config()


def test_experiment_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig(schemes=["Z"])
    with pytest.raises(ValueError):
        ExperimentConfig(schemes=[])
    with pytest.raises(ValueError):
        ExperimentConfig(t=4, K=6)
    with pytest.raises(ValueError):
        ExperimentConfig(axis="t")
    with pytest.raises(ValueError):
        ExperimentConfig(axis="power", values=[1])
    with pytest.raises(ValueError):
        ExperimentConfig(unknown_field=1)
    assert ExperimentConfig(t=4, K=6, axis="t", values=[6, 8]).K == 6


def test_system_fields():
    config = ExperimentConfig(t=12, alpha=0.5, K=3, epsilon=0.01, trials=10, seed=4)
    assert config.system_fields() == {
        "t": 12, "P": 1.0, "alpha": 0.5, "epsilon": 0.01, "K": 3, "delta": 1, "trials": 10, "seed": 4,
    }


def test_key_value_file(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("# grouped selection\nschemes=B,Bprime\nt=30\nalpha=1\nepsilon=0.02\nK=3\naxis=K\nvalues=1,2,3\n")
    raw = load_config_file(str(path))
    assert raw["schemes"] == ["B", "Bprime"]
    assert raw["values"] == ["1", "2", "3"]
    config = build_experiment_config(config_file=str(path))
    assert config.schemes == ["B", "Bprime"]
    assert config.K == 3 and config.epsilon == 0.02
    assert config.values == [1.0, 2.0, 3.0]


def test_json_file(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"schemes": ["D"], "quantizer": "variable", "t": 8}))
    config = build_experiment_config(config_file=str(path))
    assert config.quantizer == "variable" and config.t == 8


def test_precedence(tmp_path, monkeypatch):
    monkeypatch.setenv("LINK_TRIALS", "700")
    monkeypatch.setenv("LINK_SEED", "9")
    path = tmp_path / "run.cfg"
    path.write_text("trials=800\n")
    config = build_experiment_config({"trials": None, "seed": None, "t": 5}, str(path))
    assert config.trials == 800
    assert config.seed == 9
    assert config.t == 5
    assert build_experiment_config({"trials": 900}, str(path)).trials == 900


def test_config_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_config_file(str(tmp_path / "missing.cfg"))
    broken = tmp_path / "broken.json"
    broken.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config_file(str(broken))
    listed = tmp_path / "list.json"
    listed.write_text("[1, 2]")
    with pytest.raises(ConfigError):
        load_config_file(str(listed))
    with pytest.raises(ConfigError):
        build_experiment_config({"alpha": -1.0})
