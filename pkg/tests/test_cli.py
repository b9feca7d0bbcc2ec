import csv
import json
import inspect

import pytest

from cli import main
from config import ExperimentConfig
from suite_provider import SuiteProvider
from view_router import ViewRouter
from views import VerifyView


def test_router_views():
    router = ViewRouter()
    assert set(router.views) == {"verify", "trie-sweep", "mixing", "return-time", "pi", "generate"}
    assert router.get_view("nope") is None
    with pytest.raises(ValueError):
        router.execute_view("nope", {})


def test_suites_follow_provider_methods():
    suites = VerifyView().get_suites(SuiteProvider(ExperimentConfig()))
    expected = {name for name, _ in inspect.getmembers(SuiteProvider, predicate=inspect.isfunction)
                if not name.startswith("_")}
    assert {s["name"] for s in suites} == expected
    assert all(s["description"] for s in suites)


def test_pi_command(capsys):
    assert main(["pi", "--word", "1"]) == 0
    assert "18/19" in capsys.readouterr().out


def test_pi_long_zero_run(capsys):
    assert main(["pi", "--comb", "factorial", "--word", "0" * 40]) == 0
    assert "ln(1/π)" in capsys.readouterr().out


def test_bad_config_exits_with_two(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"comb": "custom", "custom_q": ["3/2"]}))
    assert main(["pi", "--word", "1", "--config", str(path)]) == 2
    assert "Ошибка" in capsys.readouterr().err


def test_verify_single_suite():
    assert main(["verify", "--suite", "sample_trie"]) == 0


def test_verify_unknown_suite():
    assert main(["verify", "--suite", "no_such_suite"]) == 2


def test_mixing_command(tmp_path):
    out = tmp_path / "m.csv"
    assert main(["mixing", "--A", "1", "--B", "1", "--n", "1", "2", "3", "--out", str(out)]) == 0
    with open(out, newline="") as f:
        rows = list(csv.DictReader(f))
    assert [row["n"] for row in rows] == ["1", "2", "3"]
    assert all(row["case"] == "I" and row["difference"] == "0" for row in rows)


def test_return_time_command(tmp_path):
    config_path = tmp_path / "rt.json"
    config_path.write_text(json.dumps({"float_order": 128}))
    out = tmp_path / "x.json"
    args = ["return-time", "--comb", "factorial", "--k", "2", "--mc_runs", "0",
            "--config", str(config_path), "--out", str(out)]
    assert main(args) == 0
    payload = json.loads(out.read_text(encoding="utf-8"))
    assert payload["k"] == 2
    assert payload["monte_carlo"] is None
    assert "mean_tau2" in payload and "mean_tau2_exact" in payload
    assert payload["mean_tau2_exact"] != payload["mean_tau2_float"]


def test_generate_command(tmp_path):
    out = tmp_path / "stream.txt"
    assert main(["generate", "--letters", "100", "--seed", "5", "--out", str(out)]) == 0
    data = out.read_bytes()
    assert len(data) == 101
    assert set(data[:-1]) <= {ord("0"), ord("1")}


def test_trie_sweep_command(tmp_path):
    config_path = tmp_path / "sweep.json"
    config_path.write_text(json.dumps({"checkpoints": [16, 32, 64], "runs": 2, "workers": 1}))
    out = tmp_path / "sweep.csv"
    assert main(["trie-sweep", "--config", str(config_path), "--out", str(out)]) == 0
    with open(out, newline="") as f:
        assert len(list(csv.reader(f))) == 1 + 6
    assert (tmp_path / "sweep.means.csv").exists()
    trend = json.loads((tmp_path / "sweep.trend.json").read_text())
    assert trend["checkpoints"] == [16, 32, 64]
