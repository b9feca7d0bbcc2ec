import pytest

from comb_source import builtin_comb
from config import CombKind


@pytest.fixture
def logarithmic():
    return builtin_comb(CombKind.LOGARITHMIC)


@pytest.fixture
def factorial():
    return builtin_comb(CombKind.FACTORIAL)


@pytest.fixture
def logn():
    return builtin_comb(CombKind.LOGN)


@pytest.fixture(params=[CombKind.LOGARITHMIC, CombKind.FACTORIAL, CombKind.LOGN], ids=lambda kind: kind.value)
def any_builtin(request):
    return builtin_comb(request.param)
