import csv
import json
import logging
import time
from dataclasses import dataclass, field as dataclass_field
from datetime import datetime
from multiprocessing import Pool
from pathlib import Path
from typing import Any, Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import pytz
from pydantic import BaseModel, model_validator
from scipy import stats as scipy_stats

from comb_source import Number, comb_from_selector, sample_stream
from config import ExperimentConfig
from errors import BudgetExceededError
from suffix_trie import SuffixTrie

logger = logging.getLogger(__name__)

CSV_HEADER = ["comb", "seed", "run_id", "n", "height", "saturation", "letters", "millis"]
MEANS_HEADER = ["comb", "n", "runs", "mean_height", "mean_saturation"]


class RunRecord(BaseModel):
    """Одна строка траектории: (run, контрольная точка)"""

    comb: str
    seed: int
    run_id: int
    n: int
    height: Optional[int] = None
    saturation: Optional[int] = None
    letters: int = 0
    millis: int = 0

    @model_validator(mode="after")
    def _height_bounds_saturation(self) -> "RunRecord":
        if self.height is not None and self.saturation is not None and self.saturation > self.height:
            raise ValueError(f"ℓ = {self.saturation} больше H = {self.height}")
        return self

    @property
    def aborted(self) -> bool:
        return self.height is None

    def csv_row(self) -> List[Any]:
        return [
            self.comb, self.seed, self.run_id, self.n,
            "" if self.height is None else self.height,
            "" if self.saturation is None else self.saturation,
            self.letters, self.millis,
        ]


class TrajectoryTask(NamedTuple):
    comb: str
    q_values: Optional[List[Number]]
    seed: int
    run_id: int
    checkpoints: List[int]
    letter_cap: int
    timing: bool


class CheckpointMean(NamedTuple):
    comb: str
    n: int
    runs: int
    mean_height: Optional[float]
    mean_saturation: Optional[float]


@dataclass
class SweepResult:
    records: List[RunRecord]
    means: List[CheckpointMean]
    trend: Dict[str, Any] = dataclass_field(default_factory=dict)


def run_trajectory(task: TrajectoryTask) -> List[RunRecord]:
    """Растит одно дерево на потоке с зерном seed ⊕ run_id и пишет строку в каждой контрольной точке"""
    spec = comb_from_selector(task.comb, task.q_values)
    run_seed = task.seed ^ task.run_id
    trie = SuffixTrie(sample_stream(spec, run_seed), letter_cap=task.letter_cap)
    started = time.perf_counter()
    records: List[RunRecord] = []
    for index, n in enumerate(task.checkpoints):
        try:
            stats = trie.grow(n)
        except BudgetExceededError as e:
            logger.warning(f"Run {task.run_id} ({task.comb}) aborted at n={n}: {e}")
            millis = _millis(started, task.timing)
            # строка на каждую оставшуюся контрольную точку, с пустыми H и ℓ
            for rest in task.checkpoints[index:]:
                records.append(RunRecord(comb=task.comb, seed=run_seed, run_id=task.run_id, n=rest,
                                         letters=trie.letters_used, millis=millis))
            break
        records.append(RunRecord(
            comb=task.comb,
            seed=run_seed,
            run_id=task.run_id,
            n=n,
            height=stats.height,
            saturation=stats.saturation,
            letters=stats.letters_used,
            millis=_millis(started, task.timing),
        ))
    return records


def _millis(started: float, timing: bool) -> int:
    return int((time.perf_counter() - started) * 1000) if timing else 0


def checkpoint_means(records: Sequence[RunRecord], checkpoints: Sequence[int]) -> List[CheckpointMean]:
    means = []
    for n in checkpoints:
        rows = [r for r in records if r.n == n and not r.aborted]
        comb = records[0].comb if records else ""
        if not rows:
            means.append(CheckpointMean(comb, n, 0, None, None))
            continue
        means.append(CheckpointMean(
            comb=comb,
            n=n,
            runs=len(rows),
            mean_height=float(np.mean([r.height for r in rows])),
            mean_saturation=float(np.mean([r.saturation for r in rows])),
        ))
    return means


def _strictly(values: Sequence[float], increasing: bool) -> bool:
    pairs = zip(values, values[1:])
    return all(b > a for a, b in pairs) if increasing else all(b < a for a, b in pairs)


def log_fit(ns: Sequence[int], values: Sequence[float]) -> Optional[Dict[str, Any]]:
    """Регрессия values ~ a·ln n + b с 95% интервалом для наклона и лог-лог наклоном"""
    if len(ns) < 3:
        return None
    log_n = np.log(np.asarray(ns, dtype=float))
    y = np.asarray(values, dtype=float)
    fit = scipy_stats.linregress(log_n, y)
    half_width = float(scipy_stats.t.ppf(0.975, len(ns) - 2) * fit.stderr)
    report: Dict[str, Any] = {
        "slope": float(fit.slope),
        "intercept": float(fit.intercept),
        "r_squared": float(fit.rvalue ** 2),
        "slope_ci95": [float(fit.slope) - half_width, float(fit.slope) + half_width],
        "loglog_slope": None,
    }
    if np.all(y > 0):
        report["loglog_slope"] = float(scipy_stats.linregress(log_n, np.log(y)).slope)
    ratio = (y / log_n).tolist()
    report["ratio_to_log"] = ratio
    report["ratio_increasing"] = _strictly(ratio, increasing=True)
    report["ratio_decreasing"] = _strictly(ratio, increasing=False)
    return report


def monotonicity_violations(records: Sequence[RunRecord]) -> List[int]:
    """Номера прогонов, где H или ℓ убывают по контрольным точкам"""
    by_run: Dict[int, List[RunRecord]] = {}
    for record in records:
        if not record.aborted:
            by_run.setdefault(record.run_id, []).append(record)
    bad = []
    for run_id, rows in sorted(by_run.items()):
        rows.sort(key=lambda r: r.n)
        for left, right in zip(rows, rows[1:]):
            if right.height < left.height or right.saturation < left.saturation:
                bad.append(run_id)
                break
    return bad


# ниже этой контрольной точки тренды только в отчет
TREND_MIN_N = 2 ** 10

# (серия, поле отчета, порог или требуемый флаг, жесткая ли проверка)
TREND_EXPECTATIONS: Dict[str, List[Tuple[str, str, Any, bool]]] = {
    "logn": [
        ("height", "r_squared", 0.98, False),
        ("saturation", "r_squared", 0.98, False),
    ],
    "logarithmic": [
        ("height", "loglog_slope", 0.15, False),
        ("height", "ratio_increasing", True, True),
    ],
    "factorial": [
        ("saturation", "ratio_decreasing", True, True),
    ],
}


def trend_checks(comb: str, trend: Dict[str, Any]) -> Dict[str, Dict[str, Any]]:
    """Ожидаемые для гребня тренды: пороги только в отчет, монотонность отношений - жестко"""
    checks: Dict[str, Dict[str, Any]] = {}
    ns = trend.get("checkpoints") or []
    enforce = bool(ns) and ns[0] >= TREND_MIN_N
    for series, key, expected, hard in TREND_EXPECTATIONS.get(comb, []):
        fit = trend.get(series)
        value = None if fit is None else fit.get(key)
        if isinstance(expected, bool):
            met = value is expected
        else:
            met = value is not None and value >= expected
        hard = hard and enforce
        checks[f"{series}.{key}"] = {"value": value, "expected": expected, "met": met, "hard": hard}
        if not met:
            level = logging.ERROR if hard else logging.WARNING
            logger.log(level, f"Trend check {comb} {series}.{key}: got {value}, expected {expected}")
    return checks


def hard_failures(trend: Dict[str, Any]) -> List[str]:
    failed = [name for name, check in trend.get("checks", {}).items() if check["hard"] and not check["met"]]
    if trend.get("monotonicity_violations"):
        failed.append("monotonicity")
    return failed


def trend_report(comb: str, means: Sequence[CheckpointMean], records: Sequence[RunRecord]) -> Dict[str, Any]:
    complete = [m for m in means if m.mean_height is not None]
    ns = [m.n for m in complete]
    report = {
        "checkpoints": ns,
        "height": log_fit(ns, [m.mean_height for m in complete]),
        "saturation": log_fit(ns, [m.mean_saturation for m in complete]),
        "aborted_runs": sorted({r.run_id for r in records if r.aborted}),
        "monotonicity_violations": monotonicity_violations(records),
    }
    for name in ("height", "saturation"):
        fit = report[name]
        if fit is not None:
            logger.info(f"Trend {name}: {fit['slope']:.3f}*ln(n) + {fit['intercept']:.3f}, "
                        f"R^2={fit['r_squared']:.4f}")
    report["checks"] = trend_checks(comb, report)
    return report


def sweep(experiment: ExperimentConfig) -> SweepResult:
    """runs независимых траекторий; результаты собираются в порядке run_id"""
    q_values = experiment.q_values()
    tasks = [
        TrajectoryTask(
            comb=experiment.comb.value,
            q_values=q_values,
            seed=experiment.seed,
            run_id=run_id,
            checkpoints=list(experiment.checkpoints),
            letter_cap=experiment.letter_cap,
            timing=experiment.timing,
        )
        for run_id in range(experiment.runs)
    ]
    logger.info(f"Trie sweep: comb={experiment.comb.value} runs={experiment.runs} "
                f"checkpoints={experiment.checkpoints[0]}..{experiment.checkpoints[-1]}")
    workers = min(experiment.workers, experiment.runs)
    if workers > 1:
        with Pool(processes=workers) as pool:
            results = pool.map(run_trajectory, tasks, chunksize=1)
    else:
        results = [run_trajectory(task) for task in tasks]

    records = [record for rows in results for record in rows]
    means = checkpoint_means(records, experiment.checkpoints)
    trend = trend_report(experiment.comb.value, means, records)
    if experiment.timing:
        trend["started_at"] = datetime.now(pytz.utc).isoformat()
    logger.info(f"Trie sweep finished: {len(records)} rows, {len(trend['aborted_runs'])} aborted run(s)")
    return SweepResult(records=records, means=means, trend=trend)


def side_path(path: Path, suffix: str) -> Path:
    return path.with_name(f"{path.stem}.{suffix}")


def write_records(records: Sequence[RunRecord], path: Path, output_format: str = "csv") -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    if output_format == "json":
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            json.dump([r.model_dump() for r in records], f, indent=2)
            f.write("\n")
        return path
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for record in records:
            writer.writerow(record.csv_row())
    return path


def write_means(means: Sequence[CheckpointMean], path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(MEANS_HEADER)
        for m in means:
            writer.writerow([
                m.comb, m.n, m.runs,
                "" if m.mean_height is None else repr(m.mean_height),
                "" if m.mean_saturation is None else repr(m.mean_saturation),
            ])
    return path


def write_trend(trend: Dict[str, Any], path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(trend, f, indent=2, sort_keys=True, default=_json_default)
        f.write("\n")
    return path


def _json_default(value: Any) -> Any:
    if isinstance(value, (np.integer, np.floating)):
        return value.item()
    raise TypeError(f"Не сериализуется в JSON: {value!r}")
