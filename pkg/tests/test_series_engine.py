from fractions import Fraction

import pytest

from comb_source import CustomComb, Word, comb_from_selector, pi_word
from config import CombKind
from errors import ConsistencyError, TruncationOrderError
from series_engine import (
    _U_CACHE,
    Field,
    Series,
    assert_series_equal,
    series_P,
    series_P_closed,
    series_Pa,
    series_S,
    series_U,
)


def test_arithmetic_basics():
    x = Series.monomial(1, 6)
    geometric = 1 / (1 - x)
    assert geometric.coefficients() == [1] * 7
    assert (geometric * (1 - x)).coefficients() == [1, 0, 0, 0, 0, 0, 0]
    assert (x * x).valuation_offset == 2


def test_division_by_non_unit():
    with pytest.raises(ConsistencyError):
        Series.one(5) / Series.monomial(1, 5)


def test_coefficient_beyond_order():
    with pytest.raises(TruncationOrderError):
        Series.one(3).coefficient(4)


def test_canonical_rejects_laurent_part():
    with pytest.raises(ConsistencyError):
        Series([1], 5, -1).canonical()
    assert Series([0, 2], 5, -1).canonical().valuation_offset == 0


def test_rational_rejects_floats():
    with pytest.raises(TypeError):
        Series([0.5], 3, 0, Field.RATIONAL)


def test_mixed_fields_fall_back_to_float():
    mixed = Series.one(3) + Series([0.5], 3, 0, Field.FLOAT)
    assert mixed.field is Field.FLOAT
    assert mixed.coefficient(0) == 1.5


def test_S_head(logarithmic):
    S = series_S(logarithmic, 10)
    assert S.coefficient(0) == 1
    assert S.coefficient(1) == Fraction(1, 24)


def test_P_two_ways(any_builtin):
    assert_series_equal(series_P(any_builtin, 40), series_P_closed(any_builtin, 40), 40, label="P")


def test_renewal_identity(any_builtin):
    U = series_U(any_builtin, 64)
    one_minus_P = 1 - series_P(any_builtin, 64)
    assert (one_minus_P * U).coefficients() == [1] + [0] * 64


def test_U_head(logarithmic):
    U = series_U(logarithmic, 8)
    assert U.coefficient(0) == 1
    assert U.coefficient(1) == Fraction(23, 24)
    assert U.coefficient(1) == pi_word(logarithmic, Word.parse("11")) / pi_word(logarithmic, Word.parse("1"))


def test_U_converges_to_inverse_S(logarithmic):
    U = series_U(logarithmic, 256, Field.FLOAT)
    limit = 18 / 19
    gaps = [abs(U.coefficient(n) - limit) for n in range(64, 257, 8)]
    assert all(b < a for a, b in zip(gaps, gaps[1:]))
    assert gaps[-1] < 1e-4


def test_float_U_matches_rational(factorial):
    exact = series_U(factorial, 48)
    approx = series_U(factorial, 48, Field.FLOAT)
    assert_series_equal(exact.to_float(), approx, 48, label="U")


def test_Pa_zero_is_P(logarithmic):
    assert_series_equal(series_Pa(logarithmic, 0, 30), series_P(logarithmic, 30), 30, label="P_0")


def test_Pa_head(logarithmic):
    assert series_Pa(logarithmic, 1, 10).coefficient(1) == Fraction(4, 5)


@pytest.mark.parametrize("a", [1, 2, 5])
def test_Pa_is_a_distribution(logarithmic, a):
    N = 128
    total = series_Pa(logarithmic, a, N).partial_sum()
    assert total == 1 - logarithmic.c(a + N) / logarithmic.c(a)


def test_field_guard():
    spec = comb_from_selector(CombKind.CUSTOM, [0.5])
    with pytest.raises(ValueError):
        series_S(spec, 10, Field.RATIONAL)
    assert series_S(spec, 10, Field.FLOAT).coefficient(2) == 0.25


def test_u_cache_keyed_by_comb_parameters():
    first = comb_from_selector(CombKind.CUSTOM, [Fraction(1, 3)])
    expected = series_U(first, 16)
    size = len(_U_CACHE)
    for _ in range(3):
        again = comb_from_selector(CombKind.CUSTOM, [Fraction(1, 3)])
        assert again is not first
        assert series_U(again, 16).coefficients() == expected.coefficients()
    assert len(_U_CACHE) == size
    by_function = CustomComb(q_function=lambda n: Fraction(1, 3))
    assert series_U(by_function, 16).coefficients() == expected.coefficients()
    assert len(_U_CACHE) == size
