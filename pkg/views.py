import csv
import inspect
import json
import logging
import math
import time
from pathlib import Path
from typing import Any, Dict, List, Optional

from base_view import BaseView
from comb_source import Word, pi_word, sample_stream, word_surprisal
from config import ExperimentConfig
from mixing import MixQuery, classify, default_field, mixing_bruteforce, series_M
from return_time import monte_carlo_tau2, pattern_stats
from series_engine import Field
from suite_provider import SuiteProvider
from trie_sweep import hard_failures, side_path, sweep, write_means, write_records, write_trend

logger = logging.getLogger(__name__)


def _number(value: Any) -> Any:
    """Точные значения - строкой, приближенные - float"""
    if isinstance(value, float):
        return value
    return str(value)


def _write_json(payload: Any, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(payload, f, indent=2, ensure_ascii=False)
        f.write("\n")
    return path


class VerifyView(BaseView):
    """Прогоняет все проверочные наборы и печатает таблицу"""

    def get_name(self) -> str:
        return "verify"

    def get_description(self) -> str:
        return "Проверить инварианты и оракулы всех модулей"

    def get_parameters(self) -> Dict[str, Any]:
        return {
            "suite": {
                "type": "string",
                "description": "запустить только один набор",
                "required": False
            }
        }

    def get_suites(self, provider: SuiteProvider) -> List[Dict[str, Any]]:
        """Наборы - публичные методы SuiteProvider, описание из первой строки docstring"""
        suites = []
        for name, method in inspect.getmembers(provider, predicate=inspect.ismethod):
            if not name.startswith('_'):
                docstring = method.__doc__ or ""
                description = docstring.strip().split('\n')[0]
                suites.append({"name": name, "description": description, "method": method})
        return suites

    def execute(self, experiment: ExperimentConfig, suite: Optional[str] = None) -> List[Dict]:
        suites = self.get_suites(SuiteProvider(experiment))
        if suite is not None:
            suites = [s for s in suites if s["name"] == suite]
            if not suites:
                raise ValueError(f"Набор проверок не найден: {suite}")

        results = []
        for entry in suites:
            started = time.perf_counter()
            logger.info(f"Running suite {entry['name']}")
            try:
                outcome = entry["method"]()
            except Exception as e:
                logger.error(f"Suite {entry['name']} failed: {e}")
                outcome = {"passed": False, "details": {"error": f"{type(e).__name__}: {e}"}}
            seconds = time.perf_counter() - started
            if not outcome["passed"]:
                logger.error(f"Suite {entry['name']} did not pass: {outcome['details']}")
            results.append({
                "name": entry["name"],
                "description": entry["description"],
                "passed": outcome["passed"],
                "details": outcome["details"],
                "seconds": seconds,
            })
        return results

    def render(self, result: List[Dict], **kwargs) -> str:
        text = "Проверки:\n\n"
        for row in result:
            mark = "✅" if row["passed"] else "❌"
            text += f"{mark} {row['name']:<22} {row['seconds']:8.2f} с  {row['description']}\n"
            if not row["passed"]:
                text += f"    {row['details']}\n"
        failed = sum(1 for row in result if not row["passed"])
        text += f"\nИтого: {len(result) - failed} из {len(result)} прошли\n"
        return text

    def succeeded(self, result: List[Dict]) -> bool:
        return all(row["passed"] for row in result)


class TrieSweepView(BaseView):
    """Траектории (Hₙ, ℓₙ) суффиксного дерева по контрольным точкам"""

    def get_name(self) -> str:
        return "trie-sweep"

    def get_description(self) -> str:
        return "Вырастить суффиксные деревья и записать высоту и уровень насыщения"

    def get_parameters(self) -> Dict[str, Any]:
        return {}

    def execute(self, experiment: ExperimentConfig) -> Dict:
        result = sweep(experiment)
        path = experiment.output_path(f"trie_sweep_{experiment.comb.value}.{experiment.output_format}")
        write_records(result.records, path, experiment.output_format)
        write_means(result.means, side_path(path, "means.csv"))
        write_trend(result.trend, side_path(path, "trend.json"))
        logger.info(f"Trie sweep written to {path}")
        return {"path": str(path), "means": result.means, "trend": result.trend}

    def render(self, result: Dict, **kwargs) -> str:
        text = f"Записано: {result['path']}\n\n"
        text += "n         H         ℓ\n"
        for m in result["means"]:
            if m.mean_height is None:
                text += f"{m.n:<9} прерван\n"
            else:
                text += f"{m.n:<9} {m.mean_height:<9.3f} {m.mean_saturation:.3f}\n"
        trend = result["trend"]
        for name in ("height", "saturation"):
            fit = trend.get(name)
            if fit:
                low, high = fit["slope_ci95"]
                text += (f"\n{name}: {fit['slope']:.3f}·ln n + {fit['intercept']:.3f} "
                         f"(95%: {low:.3f}..{high:.3f}), R² = {fit['r_squared']:.4f}")
        for name, check in trend.get("checks", {}).items():
            mark = "✅" if check["met"] else ("❌" if check["hard"] else "⚠️")
            text += f"\n{mark} {name} = {check['value']} (ожидается {check['expected']})"
        if trend.get("monotonicity_violations"):
            text += f"\n\nНарушена монотонность в прогонах: {trend['monotonicity_violations']}"
        return text + "\n"

    def succeeded(self, result: Dict) -> bool:
        return not hard_failures(result["trend"])


class MixingTableView(BaseView):
    """Таблица ψ(n, A, B) из ряда M^{A,B} и перебором"""

    def get_name(self) -> str:
        return "mixing"

    def get_description(self) -> str:
        return "Посчитать коэффициенты перемешивания ψ(n, A, B)"

    def get_parameters(self) -> Dict[str, Any]:
        return {
            "A": {"type": "string", "description": "слово A", "required": True},
            "B": {"type": "string", "description": "слово B", "required": True},
            "n": {"type": "list", "description": "значения n", "required": True}
        }

    def execute(self, experiment: ExperimentConfig, A: str, B: str, n: List[int]) -> Dict:
        spec = self.comb(experiment)
        query = MixQuery.parse(A, B, spec)
        case = classify(query.A, query.B)
        ns = sorted(set(n))
        if ns[0] < 1:
            raise ValueError(f"ψ определен для n >= 1, получено {ns[0]}")

        series = {}
        for field in (Field.RATIONAL, Field.FLOAT):
            wanted = [m for m in ns if default_field(spec, m) is field]
            if wanted:
                series[field] = series_M(query, max(wanted) + 1, field)

        rows = []
        for m in ns:
            value = series[default_field(spec, m)].coefficient(m + 1)
            row = {
                "n": m,
                "case": case.case_id.value,
                "psi": _number(value),
                "psi_float": float(value),
                "n3_psi": m ** 3 * float(value),
                "scaled_2pi": abs(float(value)) * (2 * math.pi) ** m,
                "brute": None,
                "difference": None,
            }
            if m <= experiment.enumeration_max:
                brute = mixing_bruteforce(query, m, experiment.enumeration_max)
                row["brute"] = _number(brute)
                row["difference"] = _number(value - brute)
            rows.append(row)

        path = experiment.output_path(f"mixing_{A}_{B}.{experiment.output_format}")
        self._write(rows, path, experiment.output_format)
        return {"path": str(path), "case": case, "rows": rows}

    def _write(self, rows: List[Dict], path: Path, output_format: str) -> None:
        if output_format == "json":
            _write_json(rows, path)
            return
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as f:
            writer = csv.DictWriter(f, fieldnames=list(rows[0]), lineterminator="\n")
            writer.writeheader()
            writer.writerows(rows)

    def render(self, result: Dict, **kwargs) -> str:
        case = result["case"]
        text = f"Случай {case.case_id.value} (a = {case.a}, b = {case.b}), записано: {result['path']}\n\n"
        for row in result["rows"]:
            text += f"n = {row['n']:<6} ψ = {row['psi_float']:.6e}  n³ψ = {row['n3_psi']:.6f}"
            if row["difference"] is not None:
                text += f"  ψ - перебор = {row['difference']}"
            text += "\n"
        return text


class ReturnTimeView(BaseView):
    """Момент второго возвращения шаблона 10^{k-1}"""

    def get_name(self) -> str:
        return "return-time"

    def get_description(self) -> str:
        return "Моменты и закон τ⁽²⁾ для шаблона 10^{k-1}"

    def get_parameters(self) -> Dict[str, Any]:
        return {
            "k": {"type": "integer", "description": "длина шаблона 10^{k-1}", "required": True},
            "mc_runs": {"type": "integer", "description": "число прогонов Монте-Карло (0 - без них)",
                        "required": False}
        }

    def execute(self, experiment: ExperimentConfig, k: int, mc_runs: Optional[int] = None) -> Dict:
        spec = self.comb(experiment)
        stats = pattern_stats(spec, k, N=max(experiment.float_order, 2 * k))
        mc_runs = experiment.mc_runs if mc_runs is None else mc_runs
        payload: Dict[str, Any] = {
            "comb": spec.name,
            "k": k,
            "mean_tau2": _number(stats.mean2),
            "mean_tau2_float": float(stats.mean2),
            "mean_tau2_exact": float(stats.mean2_exact),
            "var_tau2": _number(stats.var2),
            "mean_T": float(stats.mean_T),
            "var_T": float(stats.var2),
            "dist_head": stats.dist2[:experiment.dist_head],
            "dist_order": stats.phi2.order,
            "defect": stats.defect,
            "monte_carlo": None,
        }
        if mc_runs > 0:
            summary = monte_carlo_tau2(spec, k, mc_runs, experiment.seed, workers=experiment.workers)
            payload["monte_carlo"] = {"runs": mc_runs, "mean": summary.mean, "stderr": summary.stderr}

        path = experiment.output_path(f"return_time_{spec.name}_k{k}.json")
        _write_json(payload, path)
        payload["path"] = str(path)
        return payload

    def render(self, result: Dict, **kwargs) -> str:
        text = f"τ⁽²⁾(10^{result['k'] - 1}) для {result['comb']}:\n\n"
        text += f"E τ⁽²⁾ = {result['mean_tau2_float']:.6f}\n"
        text += f"E τ⁽²⁾ с условием на все слово = {result['mean_tau2_exact']:.6f}\n"
        text += f"E T_k = {result['mean_T']:.6f}, Var T_k = {result['var_T']:.6e}\n"
        text += f"Дефект закона до x^{result['dist_order']}: {result['defect']:.3e}\n"
        mc = result["monte_carlo"]
        if mc:
            text += f"Монте-Карло ({mc['runs']} прогонов): {mc['mean']:.3f} ± {mc['stderr']:.3f}\n"
        text += f"Записано: {result['path']}\n"
        return text


class PiView(BaseView):
    """Стационарная мера слова"""

    def get_name(self) -> str:
        return "pi"

    def get_description(self) -> str:
        return "Посчитать π(w) для двоичного слова"

    def get_parameters(self) -> Dict[str, Any]:
        return {
            "word": {"type": "string", "description": "двоичное слово (может быть пустым)", "required": True}
        }

    def execute(self, experiment: ExperimentConfig, word: str) -> Dict:
        spec = self.comb(experiment)
        w = Word.parse(word)
        value = pi_word(spec, w)
        return {
            "comb": spec.name,
            "word": str(w),
            "blocks": w.blocks(),
            "pi": _number(value),
            "pi_float": float(value),
            "surprisal": word_surprisal(spec, w),
        }

    def render(self, result: Dict, **kwargs) -> str:
        text = f"π({result['word'] or 'ε'}) для {result['comb']} = {result['pi']}\n"
        if result["pi"] != str(result["pi_float"]):
            text += f"≈ {result['pi_float']:.12e}\n"
        text += f"ln(1/π) = {result['surprisal']:.6f}\n"
        return text


class GenerateView(BaseView):
    """Сырой поток букв в файл"""

    def get_name(self) -> str:
        return "generate"

    def get_description(self) -> str:
        return "Записать поток букв источника в текстовый файл"

    def get_parameters(self) -> Dict[str, Any]:
        return {
            "letters": {"type": "integer", "description": "число букв", "required": True}
        }

    def execute(self, experiment: ExperimentConfig, letters: int) -> Dict:
        if letters < 1:
            raise ValueError(f"Число букв должно быть >= 1, получено {letters}")
        spec = self.comb(experiment)
        stream = sample_stream(spec, experiment.seed)
        data = stream.take(letters)
        path = experiment.output_path(f"stream_{spec.name}_{experiment.seed}.txt")
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "wb") as f:
            f.write(bytes(48 + letter for letter in data))
            f.write(b"\n")
        ones = sum(data)
        logger.info(f"Wrote {letters} letters to {path}")
        return {"path": str(path), "letters": letters, "ones": ones, "initial_state": stream.initial_state}

    def render(self, result: Dict, **kwargs) -> str:
        return (f"Записано {result['letters']} букв в {result['path']}\n"
                f"Доля единиц: {result['ones'] / result['letters']:.6f}, "
                f"начальный контекст: {result['initial_state']}\n")
