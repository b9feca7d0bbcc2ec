class CombError(ValueError):
    """Некорректный гребень"""


class UnboundedTailError(CombError):
    """Хвост Σcₙ не удается ограничить"""


class UnsupportedCombError(CombError):
    """У гребня нет конечного второго момента Σn²cₙ"""


class BudgetExceededError(RuntimeError):
    """Превышен бюджет перебора или букв"""


class TruncationOrderError(ValueError):
    """Коэффициент запрошен за пределами порядка усечения ряда"""


class ConsistencyError(ArithmeticError):
    """Две независимые конструкции дали разный результат"""


class ConfigError(ValueError):
    """Конфигурация эксперимента отклонена"""
