from typing import Any, Dict
from views import GenerateView, MixingTableView, PiView, ReturnTimeView, TrieSweepView, VerifyView
from base_view import BaseView


class ViewRouter:
    """Реестр подкоманд командной строки"""

    def __init__(self):
        self.views: Dict[str, BaseView] = {}
        self._register_views()

    def _register_views(self):
        """Регистрирует все подкоманды"""
        views = [VerifyView(), TrieSweepView(), MixingTableView(), ReturnTimeView(), PiView(), GenerateView()]
        self.views = {view.get_name(): view for view in views}

    def execute_view(self, view_name: str, parameters: Dict[str, Any]) -> Any:
        """Выполняет подкоманду по имени"""
        if view_name not in self.views:
            raise ValueError(f"Команда не найдена: {view_name}")

        view = self.views[view_name]
        return view.execute(**parameters)

    def render_view(self, view_name: str, result: Any, **kwargs) -> str:
        if view_name not in self.views:
            return f"Ошибка: команда {view_name} не найдена"

        view = self.views[view_name]
        return view.render(result, **kwargs)

    def get_view(self, view_name: str) -> BaseView:
        return self.views.get(view_name)
