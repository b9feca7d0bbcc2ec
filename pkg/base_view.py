from abc import ABC, abstractmethod
from typing import Any, Dict
import logging

from comb_source import CombSpec, comb_from_selector
from config import ExperimentConfig

logger = logging.getLogger(__name__)


class BaseView(ABC):
    """Базовый класс для всех подкоманд: execute считает, render печатает"""

    @abstractmethod
    def get_name(self) -> str:
        """Имя подкоманды в командной строке"""
        pass

    @abstractmethod
    def get_description(self) -> str:
        """Описание для справки argparse"""
        pass

    @abstractmethod
    def get_parameters(self) -> Dict[str, Any]:
        """Параметры подкоманды сверх общих флагов конфигурации"""
        pass

    @abstractmethod
    def execute(self, experiment: ExperimentConfig, **kwargs) -> Any:
        """Выполняет подкоманду и возвращает сырые данные"""
        pass

    @abstractmethod
    def render(self, result: Any, **kwargs) -> str:
        """Преобразует сырые данные в текст для терминала"""
        pass

    def succeeded(self, result: Any) -> bool:
        """Код выхода 1, если вернуть False"""
        return True

    def comb(self, experiment: ExperimentConfig) -> CombSpec:
        spec = comb_from_selector(experiment.comb, experiment.q_values())
        logger.debug(f"{self.get_name()}: using {spec!r}")
        return spec
