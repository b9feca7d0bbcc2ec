import json
from fractions import Fraction
from pathlib import Path

import pytest

from config import CombKind, ExperimentConfig, load_experiment_config, parse_probability
from errors import ConfigError


def test_defaults():
    experiment = load_experiment_config()
    assert experiment.comb is CombKind.LOGARITHMIC
    assert experiment.checkpoints[0] == 1024
    assert experiment.checkpoints[-1] == 2**18
    assert experiment.q_values() is None


def test_overrides_map_cli_flags():
    experiment = load_experiment_config(overrides={"comb": "factorial", "order": 64, "out": "x.csv", "seed": None})
    assert experiment.comb is CombKind.FACTORIAL
    assert experiment.series_order == 64
    assert experiment.output == Path("x.csv")
    assert experiment.seed == 42


def test_reads_json(tmp_path):
    path = tmp_path / "experiment.json"
    path.write_text(json.dumps({"comb": "custom", "custom_q": ["1/2", "1/3"], "runs": 3}), encoding="utf-8")
    experiment = load_experiment_config(path)
    assert experiment.runs == 3
    assert experiment.q_values() == [Fraction(1, 2), Fraction(1, 3)]


def test_cli_override_wins_over_file(tmp_path):
    path = tmp_path / "experiment.json"
    path.write_text(json.dumps({"seed": 7}), encoding="utf-8")
    assert load_experiment_config(path, {"seed": 9}).seed == 9


@pytest.mark.parametrize("payload", [
    {"comb": "custom", "custom_q": ["3/2"]},
    {"comb": "custom", "custom_q": [0.0]},
    {"comb": "custom"},
    {"checkpoints": [16, 8]},
    {"checkpoints": []},
    {"runs": 0},
    {"output_format": "xml"},
    {"enumeration_max": 40},
])
def test_rejects_invalid(payload):
    with pytest.raises(ConfigError):
        load_experiment_config(overrides=payload)


def test_rejects_unreadable_file(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json", encoding="utf-8")
    with pytest.raises(ConfigError):
        load_experiment_config(path)
    with pytest.raises(ConfigError):
        load_experiment_config(tmp_path / "missing.json")


def test_parse_probability():
    assert parse_probability("1/3") == Fraction(1, 3)
    assert parse_probability(1) == Fraction(1)
    assert isinstance(parse_probability(0.25), float)


def test_output_path_default():
    experiment = ExperimentConfig()
    assert experiment.output_path("a.csv").name == "a.csv"
