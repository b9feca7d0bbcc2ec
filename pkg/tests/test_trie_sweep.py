import csv
import math

import pytest
from pydantic import ValidationError

from config import ExperimentConfig
from suite_provider import SuiteProvider
from trie_sweep import (
    CSV_HEADER,
    RunRecord,
    TrajectoryTask,
    checkpoint_means,
    hard_failures,
    log_fit,
    monotonicity_violations,
    run_trajectory,
    side_path,
    sweep,
    trend_checks,
    write_records,
)
from views import TrieSweepView


def _task(run_id=0, checkpoints=(16, 32, 64, 128), letter_cap=10**6, timing=False):
    return TrajectoryTask(comb="logarithmic", q_values=None, seed=7, run_id=run_id,
                          checkpoints=list(checkpoints), letter_cap=letter_cap, timing=timing)


def test_trajectory_is_deterministic():
    first = run_trajectory(_task(run_id=3))
    second = run_trajectory(_task(run_id=3))
    assert first == second
    assert [r.n for r in first] == [16, 32, 64, 128]
    assert all(r.seed == 7 ^ 3 for r in first)
    heights = [r.height for r in first]
    assert heights == sorted(heights)
    assert all(r.saturation <= r.height for r in first)
    assert all(r.millis == 0 for r in first)


def test_aborted_run_keeps_one_row_per_checkpoint():
    records = run_trajectory(_task(checkpoints=(1, 16, 32, 64), letter_cap=8))
    assert [r.n for r in records] == [1, 16, 32, 64]
    assert not records[0].aborted
    assert all(r.aborted for r in records[1:])
    for record in records[1:]:
        row = record.csv_row()
        assert row[4] == "" and row[5] == ""


def test_record_rejects_saturation_above_height():
    with pytest.raises(ValidationError):
        RunRecord(comb="logarithmic", seed=1, run_id=0, n=8, height=2, saturation=3)


def test_checkpoint_means_skip_aborted():
    records = [
        RunRecord(comb="x", seed=0, run_id=0, n=4, height=2, saturation=1),
        RunRecord(comb="x", seed=1, run_id=1, n=4, height=4, saturation=1),
        RunRecord(comb="x", seed=1, run_id=1, n=8),
    ]
    means = checkpoint_means(records, [4, 8])
    assert means[0].runs == 2 and means[0].mean_height == 3.0
    assert means[1].runs == 0 and means[1].mean_height is None


def test_monotonicity_violations():
    records = [
        RunRecord(comb="x", seed=0, run_id=0, n=4, height=3, saturation=1),
        RunRecord(comb="x", seed=0, run_id=0, n=8, height=2, saturation=1),
        RunRecord(comb="x", seed=1, run_id=1, n=4, height=2, saturation=1),
        RunRecord(comb="x", seed=1, run_id=1, n=8, height=3, saturation=2),
    ]
    assert monotonicity_violations(records) == [0]


def test_log_fit_recovers_exact_line():
    ns = [2 ** j for j in range(4, 12)]
    fit = log_fit(ns, [2 * math.log(n) + 1 for n in ns])
    assert fit["slope"] == pytest.approx(2.0)
    assert fit["intercept"] == pytest.approx(1.0)
    assert fit["r_squared"] == pytest.approx(1.0)
    assert fit["ratio_decreasing"] and not fit["ratio_increasing"]
    assert fit["loglog_slope"] is not None


def test_log_fit_needs_three_points():
    assert log_fit([16, 32], [1.0, 2.0]) is None


def test_sweep_is_reproducible(tmp_path):
    experiment = ExperimentConfig(checkpoints=[16, 32, 64], runs=3, workers=1, seed=11)
    first = write_records(sweep(experiment).records, tmp_path / "a.csv")
    second = write_records(sweep(experiment).records, tmp_path / "b.csv")
    assert first.read_bytes() == second.read_bytes()
    with open(first, newline="") as f:
        rows = list(csv.reader(f))
    assert rows[0] == CSV_HEADER
    assert len(rows) == 1 + 3 * 3


def test_started_at_only_with_timing():
    plain = sweep(ExperimentConfig(checkpoints=[8, 16, 32], runs=1, workers=1))
    timed = sweep(ExperimentConfig(checkpoints=[8, 16, 32], runs=1, workers=1, timing=True))
    assert "started_at" not in plain.trend
    assert "started_at" in timed.trend


def test_side_path(tmp_path):
    assert side_path(tmp_path / "sweep.csv", "means.csv") == tmp_path / "sweep.means.csv"


def _trend(checkpoints, height=None, saturation=None):
    return {"checkpoints": checkpoints, "height": height, "saturation": saturation, "monotonicity_violations": []}


def test_ratio_monotonicity_is_enforced():
    trend = _trend([2 ** j for j in range(10, 19)], height={"ratio_increasing": False, "loglog_slope": 0.2})
    trend["checks"] = trend_checks("logarithmic", trend)
    assert trend["checks"]["height.loglog_slope"]["met"]
    assert trend["checks"]["height.ratio_increasing"] == {
        "value": False, "expected": True, "met": False, "hard": True,
    }
    assert hard_failures(trend) == ["height.ratio_increasing"]
    assert not TrieSweepView().succeeded({"trend": trend})


def test_factorial_saturation_ratio():
    trend = _trend([2 ** j for j in range(10, 21)], saturation={"ratio_decreasing": True})
    trend["checks"] = trend_checks("factorial", trend)
    assert hard_failures(trend) == []
    assert TrieSweepView().succeeded({"trend": trend})


def test_thresholds_are_report_only():
    trend = _trend([2 ** j for j in range(10, 19)], height={"r_squared": 0.9}, saturation={"r_squared": 0.99})
    trend["checks"] = trend_checks("logn", trend)
    assert not trend["checks"]["height.r_squared"]["met"]
    assert trend["checks"]["saturation.r_squared"]["met"]
    assert hard_failures(trend) == []


def test_small_checkpoints_only_report():
    trend = _trend([16, 32, 64], height={"ratio_increasing": False, "loglog_slope": 0.1})
    trend["checks"] = trend_checks("logarithmic", trend)
    assert not any(check["hard"] for check in trend["checks"].values())
    assert hard_failures(trend) == []


def test_monotonicity_violation_fails_sweep():
    trend = _trend([16, 32, 64])
    trend["monotonicity_violations"] = [3]
    trend["checks"] = trend_checks("custom", trend)
    assert hard_failures(trend) == ["monotonicity"]


def test_sweep_report_carries_checks():
    result = sweep(ExperimentConfig(checkpoints=[8, 16, 32], runs=2, workers=1))
    assert set(result.trend["checks"]) == {"height.loglog_slope", "height.ratio_increasing"}


@pytest.mark.slow
def test_trend_suite_reports_all_combs():
    outcome = SuiteProvider(ExperimentConfig(runs=2, workers=2)).trie_trends()
    assert set(outcome["details"]["trends"]) == {"logn", "logarithmic", "factorial"}
    assert "height.r_squared" in outcome["details"]["trends"]["logn"]["checks"]
