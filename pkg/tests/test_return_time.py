import math
from fractions import Fraction

import numpy as np
import pytest

from comb_source import CustomComb, FixedLetters, Word, pi_word, sample_stream
from errors import BudgetExceededError, TruncationOrderError, UnsupportedCombError
from return_time import (
    exact_mean_tau2,
    formula_mean_tau2,
    mean_T,
    mean_from_distribution,
    moments_tau2,
    monte_carlo_tau2,
    pattern_stats,
    phi1_series,
    phi2_exact_series,
    phi2_factorial_closed_form,
    phi2_series,
    scan_second_occurrence,
    tau2_bruteforce,
    tau2_chisquare,
    tau2_histogram,
    var_T,
)
from series_engine import Field, assert_series_equal


def test_first_occurrence_head(logarithmic):
    for k in (1, 2, 4):
        phi1 = phi1_series(logarithmic, k, 3 * k)
        assert phi1.coefficient(k - 1) == 0
        assert phi1.coefficient(k) == pi_word(logarithmic, Word.comb_pattern(k))


def test_phi2_support_starts_at_twice_k(logarithmic):
    phi2 = phi2_series(logarithmic, 3, 20)
    assert all(phi2.coefficient(m) == 0 for m in range(6))
    assert phi2.coefficient(6) > 0
    assert sum(phi2.coefficients()) < 1


def test_phi2_needs_order(logarithmic):
    with pytest.raises(TruncationOrderError):
        phi2_series(logarithmic, 5, 9)
    with pytest.raises(ValueError):
        phi1_series(logarithmic, 0, 9)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_factorial_closed_form_exact(factorial, k):
    generic = phi2_series(factorial, k, 40, Field.RATIONAL)
    closed = phi2_factorial_closed_form(k, 40, Field.RATIONAL, s1=factorial.s1)
    assert generic.coefficients() == closed.coefficients()


@pytest.mark.parametrize("k", [1, 2, 3])
def test_factorial_closed_form_float(factorial, k):
    generic = phi2_series(factorial, k, 200, Field.RATIONAL).to_float()
    assert_series_equal(generic, phi2_factorial_closed_form(k, 200), 200, label="phi2")


def test_exp_coefficients_underflow_quietly():
    closed = phi2_factorial_closed_form(1, 400)
    assert closed.order == 400
    assert all(math.isfinite(value) for value in closed.coefficients())


@pytest.mark.parametrize("k", [1, 2, 3])
def test_exact_law_matches_enumeration(logarithmic, factorial, k):
    for spec in (logarithmic, factorial):
        exact = phi2_exact_series(spec, k, 12)
        for m in range(13):
            assert exact.coefficient(m) == tau2_bruteforce(spec, k, m)


def test_formula_is_exact_for_single_letter(logarithmic):
    assert phi2_series(logarithmic, 1, 40).coefficients() == phi2_exact_series(logarithmic, 1, 40).coefficients()
    assert formula_mean_tau2(logarithmic, 1) == exact_mean_tau2(logarithmic, 1)


def test_formula_differs_for_longer_patterns(logarithmic):
    c, rho = logarithmic.c(1), logarithmic.rho(2)
    assert phi2_series(logarithmic, 2, 4).coefficient(4) == c * c * (1 - c) / logarithmic.s1
    assert tau2_bruteforce(logarithmic, 2, 4) == c * rho / logarithmic.s1
    assert exact_mean_tau2(logarithmic, 4) - formula_mean_tau2(logarithmic, 4) == logarithmic.s1 - 2


def test_mean_of_single_letter(logarithmic):
    s1 = logarithmic.s1
    expected = 1 + Fraction(1, 12) / s1 + s1
    mean, variance = moments_tau2(logarithmic, 1)
    assert mean == expected
    assert variance > 0
    assert mean_T(logarithmic, 1) == expected
    assert var_T(logarithmic, 1) == variance
    mean3, variance3 = moments_tau2(logarithmic, 3)
    assert mean_T(logarithmic, 3) == mean3 - 2
    assert var_T(logarithmic, 3) == variance3


def test_moments_agree_with_distribution(factorial):
    phi2 = phi2_series(factorial, 2, 400, Field.FLOAT)
    mean, _ = moments_tau2(factorial, 2)
    assert mean_from_distribution(phi2.coefficients()) == pytest.approx(float(mean), rel=1e-9)
    exact = phi2_exact_series(factorial, 2, 400, Field.FLOAT)
    assert mean_from_distribution(exact.coefficients()) == pytest.approx(float(exact_mean_tau2(factorial, 2)),
                                                                       rel=1e-9)


def test_logarithmic_asymptotics(logarithmic):
    k = 30
    mean, variance = moments_tau2(logarithmic, k)
    assert float((mean - k + 1) / k ** 4) == pytest.approx(19 / 9, rel=0.1)
    c = logarithmic.c(k - 1)
    assert float(variance * c * c / (2 * logarithmic.s1 ** 2)) == pytest.approx(1, rel=0.1)
    _, variance60 = moments_tau2(logarithmic, 60)
    assert float(variance60 / Fraction(60) ** 8) == pytest.approx(361 / 162, rel=0.1)


def test_heavy_tail_moments_rejected():
    spec = CustomComb(q_function=lambda n: ((n + 1) / (n + 2)) ** 2.5, tolerance=1e-3)
    with pytest.raises(UnsupportedCombError):
        moments_tau2(spec, 2)


def test_pattern_stats_defect(logarithmic):
    stats = pattern_stats(logarithmic, 3, N=1024)
    assert 0 <= stats.defect < 1
    assert stats.mean_T == stats.mean2 - 2
    assert len(stats.dist2) == 1025


@pytest.mark.parametrize("word, pattern, T, tau2", [
    ("0101101", "1", 4, 4),
    ("0101101", "10", 5, 6),
    ("1111", "11", 2, 3),
    ("1001000", "100", 4, 6),
])
def test_scan_second_occurrence(word, pattern, T, tau2):
    found = scan_second_occurrence(FixedLetters(word), Word.parse(pattern))
    assert found == (T, tau2)
    assert found.tau2 == found.T + len(pattern) - 1


def test_scan_limits():
    with pytest.raises(BudgetExceededError):
        scan_second_occurrence(FixedLetters("1000"), Word.parse("1"))
    with pytest.raises(ValueError):
        scan_second_occurrence(FixedLetters("1"), Word())


def test_scan_cap(logarithmic):
    with pytest.raises(BudgetExceededError):
        scan_second_occurrence(sample_stream(logarithmic, 3), Word.comb_pattern(12), cap=100)


def test_monte_carlo_factorial(factorial):
    k = 2
    summary = monte_carlo_tau2(factorial, k, 3000, seed=7)
    assert len(summary.samples) == 3000
    assert summary.samples.min() >= 2 * k
    assert abs(summary.mean - float(exact_mean_tau2(factorial, k))) <= 4 * summary.stderr
    exact = phi2_exact_series(factorial, k, 200, Field.FLOAT)
    _, pvalue = tau2_chisquare(summary.samples, exact.coefficients())
    assert pvalue > 1e-3


def test_monte_carlo_is_reproducible(logn):
    first = monte_carlo_tau2(logn, 2, 50, seed=11)
    second = monte_carlo_tau2(logn, 2, 50, seed=11)
    assert (first.samples == second.samples).all()


def test_histogram_overflow_cell():
    counts = tau2_histogram(np.array([2, 2, 3, 9, 40]), 5)
    assert counts.tolist() == [0, 0, 2, 1, 0, 0, 2]


@pytest.mark.slow
def test_monte_carlo_logarithmic(logarithmic):
    summary = monte_carlo_tau2(logarithmic, 4, 10_000, seed=42, workers=2)
    assert abs(summary.mean - float(exact_mean_tau2(logarithmic, 4))) <= 4 * summary.stderr
    assert math.isfinite(summary.stderr)
