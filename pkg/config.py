import json
import logging
import os
from enum import Enum
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Union

from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator

from errors import ConfigError

logger = logging.getLogger(__name__)


class Config:
    # Куда по умолчанию пишутся CSV/JSON
    OUTPUT_DIR: str = os.getenv("COMB_TRIES_OUTPUT_DIR", "data")
    LOG_LEVEL: str = os.getenv("COMB_TRIES_LOG_LEVEL", "INFO")
    WORKERS: int = int(os.getenv("COMB_TRIES_WORKERS", str(os.cpu_count() or 1)))

    # Ряды
    SERIES_ORDER: int = 256
    FLOAT_SERIES_ORDER: int = 4096
    FLOAT_REL_TOL: float = 1e-9
    FLOAT_ABS_TOL: float = 1e-15
    RATIONAL_PSI_LIMIT: int = 64

    # Усечение S(1) для гребней без замкнутой формы
    TAIL_TOLERANCE: Fraction = Fraction(1, 10**40)
    CUSTOM_TOLERANCE: float = 1e-12
    CUSTOM_HORIZON: int = 100_000
    MOMENT_TOLERANCE: float = 1e-6

    # Бюджеты
    ENUMERATION_LIMIT: int = 22
    ENUMERATION_DEFAULT: int = 14
    LETTER_CAP: int = 10**8
    SCAN_CAP: int = 10**9
    STREAM_BLOCK: int = 1024

    # Монте-Карло
    MC_RUNS: int = 10_000
    MC_LETTERS: int = 10**7


config = Config()


class CombKind(str, Enum):
    LOGARITHMIC = "logarithmic"
    FACTORIAL = "factorial"
    LOGN = "logn"
    CUSTOM = "custom"


def parse_probability(value: Union[str, int, float]) -> Union[Fraction, float]:
    """Строка "1/3" -> Fraction, число с плавающей точкой остается float"""
    if isinstance(value, str):
        return Fraction(value.strip())
    if isinstance(value, int):
        return Fraction(value)
    return float(value)


class ExperimentConfig(BaseModel):
    """Конфигурация эксперимента: один JSON-документ плюс переопределения из CLI"""

    comb: CombKind = CombKind.LOGARITHMIC
    custom_q: Optional[List[Union[str, float]]] = None
    seed: int = Field(default=42, ge=0, lt=2**64)
    runs: int = Field(default=25, ge=1)
    checkpoints: List[int] = Field(default_factory=lambda: [2**j for j in range(10, 19)])
    series_order: int = Field(default=config.SERIES_ORDER, ge=1)
    float_order: int = Field(default=config.FLOAT_SERIES_ORDER, ge=1)
    enumeration_max: int = Field(default=config.ENUMERATION_DEFAULT, ge=1, le=config.ENUMERATION_LIMIT)
    letter_cap: int = Field(default=config.LETTER_CAP, ge=1)
    output: Optional[Path] = None
    output_format: Literal["csv", "json"] = "csv"
    workers: int = Field(default=config.WORKERS, ge=1)
    timing: bool = False
    mc_runs: int = Field(default=config.MC_RUNS, ge=1)
    mc_letters: int = Field(default=config.MC_LETTERS, ge=1)
    dist_head: int = Field(default=64, ge=1)

    @field_validator("checkpoints")
    @classmethod
    def _strictly_increasing(cls, value: List[int]) -> List[int]:
        if not value:
            raise ValueError("список контрольных точек пуст")
        if value[0] < 1:
            raise ValueError("контрольные точки должны быть >= 1")
        for left, right in zip(value, value[1:]):
            if right <= left:
                raise ValueError(f"контрольные точки должны строго возрастать: {left} >= {right}")
        return value

    @field_validator("custom_q")
    @classmethod
    def _probabilities(cls, value: Optional[List[Union[str, float]]]) -> Optional[List[Union[str, float]]]:
        if value is None:
            return value
        if not value:
            raise ValueError("custom_q не может быть пустым")
        for item in value:
            try:
                q = parse_probability(item)
            except (ValueError, ZeroDivisionError) as e:
                raise ValueError(f"не удалось разобрать вероятность {item!r}: {e}")
            if not 0 < q < 1:
                raise ValueError(f"q0 должно лежать в (0, 1), получено {item!r}")
        return value

    @model_validator(mode="after")
    def _custom_needs_q(self) -> "ExperimentConfig":
        if self.comb is CombKind.CUSTOM and self.custom_q is None:
            raise ValueError("для comb=custom нужен список custom_q")
        return self

    def q_values(self) -> Optional[List[Union[Fraction, float]]]:
        if self.custom_q is None:
            return None
        return [parse_probability(item) for item in self.custom_q]

    def output_path(self, default_name: str) -> Path:
        if self.output is not None:
            return self.output
        return Path(config.OUTPUT_DIR) / default_name


OVERRIDE_FIELDS = {"comb": "comb", "seed": "seed", "runs": "runs", "order": "series_order", "out": "output"}


def load_experiment_config(path: Optional[Union[str, Path]] = None,
                           overrides: Optional[Dict[str, Any]] = None) -> ExperimentConfig:
    """Читает JSON-конфигурацию и применяет переопределения из командной строки"""
    data: Dict[str, Any] = {}
    if path is not None:
        try:
            with open(path, "r", encoding="utf-8") as f:
                data = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"Не удалось прочитать конфигурацию {path}: {e}")
        if not isinstance(data, dict):
            raise ConfigError(f"Конфигурация {path} должна быть JSON-объектом")

    for flag, value in (overrides or {}).items():
        if value is None:
            continue
        data[OVERRIDE_FIELDS.get(flag, flag)] = value

    try:
        experiment = ExperimentConfig.model_validate(data)
    except ValidationError as e:
        logger.error(f"Config rejected: {e.error_count()} error(s)")
        raise ConfigError(f"Некорректная конфигурация: {e}")

    logger.info(f"Loaded config: comb={experiment.comb.value} seed={experiment.seed} runs={experiment.runs}")
    return experiment
