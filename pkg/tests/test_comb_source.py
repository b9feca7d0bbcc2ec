import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import chisquare

from comb_source import (
    CustomComb,
    FixedLetters,
    Word,
    comb_from_selector,
    count_occurrences,
    initial_context,
    pattern_frequency,
    pi_letters,
    pi_word,
    remainder_r,
    sample_stream,
    word_surprisal,
)
from config import CombKind
from errors import BudgetExceededError, CombError, UnboundedTailError, UnsupportedCombError

binary_words = st.lists(st.integers(min_value=0, max_value=1), max_size=12).map(tuple)


def test_logarithmic_constants(logarithmic):
    assert logarithmic.s1 == Fraction(19, 18)
    assert logarithmic.c(1) == Fraction(1, 24)
    assert logarithmic.remainder(1) == Fraction(1, 18)
    assert logarithmic.remainder(0) == logarithmic.s1
    assert logarithmic.moment_sums() == (Fraction(1, 12), Fraction(1, 6))


def test_q0_reproduces_c(any_builtin):
    for n in range(40):
        assert any_builtin.c(n + 1) == any_builtin.c(n) * any_builtin.q0(n)


def test_remainder_is_tail_sum(logarithmic):
    for n in range(1, 20):
        assert logarithmic.remainder(n) - logarithmic.remainder(n + 1) == logarithmic.c(n)


def test_factorial_truncation(factorial):
    assert abs(float(factorial.s1) - (math.e - 1)) < 1e-15
    assert factorial.tail_bound <= Fraction(1, 10**40)
    assert abs(float(factorial.remainder(3)) - (math.e - 1 - 1 - 0.5 - 1 / 6)) < 1e-15
    assert factorial.moment_sums()[0] == 1


def test_long_zero_runs_keep_positive_measure(factorial):
    K = factorial.horizon
    assert factorial.remainder(K) == factorial.c(K)
    for n in range(K + 1, K + 8):
        zeros = pi_word(factorial, Word.zeros(n))
        assert zeros > 0
        assert math.isfinite(word_surprisal(factorial, Word.zeros(n)))
        split = pi_word(factorial, Word.zeros(n + 1)) + pi_word(factorial, Word.parse("1" + "0" * n))
        assert abs(zeros - split) <= zeros * Fraction(1, 10**30)
    boundary = pi_word(factorial, Word.zeros(K + 1)) + pi_word(factorial, Word.parse("1" + "0" * K))
    assert abs(pi_word(factorial, Word.zeros(K)) - boundary) <= factorial.tail_bound


def test_custom_tail_beyond_horizon():
    spec = CustomComb(q_values=[Fraction(1, 2)])
    n = spec.horizon + 5
    assert abs(remainder_r(spec, n) * 2 ** (n - 1) - 1) <= Fraction(1, 10**11)
    assert math.isfinite(word_surprisal(spec, Word.zeros(n)))
    floating = CustomComb(q_values=[0.5])
    assert word_surprisal(floating, Word.zeros(floating.horizon + 2)) == pytest.approx(
        (floating.horizon + 2) * math.log(2), rel=1e-9)


def test_remainder_entry_point(logarithmic):
    assert remainder_r(logarithmic, 2) == Fraction(1, 72)
    assert word_surprisal(logarithmic, Word.parse("0")) == pytest.approx(math.log(19))


def test_pi_examples(logarithmic):
    assert pi_word(logarithmic, Word.parse("")) == 1
    assert pi_word(logarithmic, Word.parse("1")) == Fraction(18, 19)
    assert pi_word(logarithmic, Word.parse("101")) == Fraction(3, 95)
    assert pi_word(logarithmic, Word.parse("0")) == Fraction(1, 19)


@pytest.mark.parametrize("n", range(1, 11))
def test_measure_sums_to_one(any_builtin, n):
    total = sum(pi_letters(any_builtin, w) for w in itertools.product((0, 1), repeat=n))
    assert total == 1


@pytest.mark.parametrize("n", [15, 16])
def test_logarithmic_measure_to_sixteen(logarithmic, n):
    assert sum(pi_letters(logarithmic, w) for w in itertools.product((0, 1), repeat=n)) == 1


@given(w=binary_words)
def test_stationarity(w):
    spec = comb_from_selector(CombKind.LOGARITHMIC)
    value = pi_letters(spec, w)
    assert pi_letters(spec, w + (0,)) + pi_letters(spec, w + (1,)) == value
    assert pi_letters(spec, (0,) + w) + pi_letters(spec, (1,) + w) == value


@given(u=binary_words, v=binary_words)
def test_renewal_at_a_one(u, v):
    spec = comb_from_selector(CombKind.FACTORIAL)
    one = pi_letters(spec, (1,))
    assert pi_letters(spec, u + (1,) + v) * one == pi_letters(spec, u + (1,)) * pi_letters(spec, (1,) + v)


@given(w=binary_words)
def test_blocks_round_trip(w):
    word = Word(w)
    assert Word.from_blocks(word.blocks()) == word
    assert len(word.blocks()) == word.ones + 1


def test_word_validation():
    with pytest.raises(ValueError):
        Word.parse("012")
    with pytest.raises(ValueError):
        Word((2,))
    with pytest.raises(ValueError):
        Word.comb_pattern(0)
    assert str(Word.comb_pattern(4)) == "1000"
    assert Word.parse("0010100").blocks() == (2, 1, 2)


def test_custom_geometric():
    spec = CustomComb(q_values=[Fraction(1, 2)])
    assert spec.exact
    assert spec.c(5) == Fraction(1, 32)
    assert abs(spec.s1 - 2) <= Fraction(1, 10**12)
    assert spec.q_values == [Fraction(1, 2)]
    assert spec.horizon is not None


def test_custom_float_is_not_exact():
    spec = comb_from_selector(CombKind.CUSTOM, [0.5, 0.25])
    assert not spec.exact
    assert isinstance(pi_word(spec, Word.parse("101")), float)


def test_custom_rejects_bad_input():
    with pytest.raises(CombError):
        CustomComb(q_values=[Fraction(1, 2), Fraction(1)])
    with pytest.raises(CombError):
        CustomComb(q_values=[])
    with pytest.raises(CombError):
        CustomComb(q_values=[Fraction(1, 2)], q_function=lambda n: Fraction(1, 2))
    with pytest.raises(CombError):
        comb_from_selector(CombKind.CUSTOM)


def test_unbounded_tail():
    with pytest.raises(UnboundedTailError):
        CustomComb(q_function=lambda n: Fraction(n + 1, n + 2), horizon=1000)


def test_heavy_tail_has_no_second_moment():
    spec = CustomComb(q_function=lambda n: ((n + 1) / (n + 2)) ** 2.5, tolerance=1e-3)
    with pytest.raises(UnsupportedCombError):
        spec.moment_sums()


def test_stream_is_reproducible(logn):
    first = sample_stream(logn, 17).take(5000)
    assert sample_stream(logn, 17).take(5000) == first
    assert sample_stream(logn, 18).take(5000) != first
    assert set(first) <= {0, 1}


def test_initial_context_law(logarithmic):
    rng = np.random.Generator(np.random.PCG64(2024))
    draws = 20000
    counts = np.bincount([min(initial_context(logarithmic, rng), 3) for _ in range(draws)], minlength=4)
    probs = [float(logarithmic.c(k) / logarithmic.s1) for k in range(3)]
    probs.append(1 - sum(probs))
    _, pvalue = chisquare(counts, np.array(probs) * draws)
    assert pvalue > 1e-3


def test_factorial_transition_after_one(factorial):
    data = sample_stream(factorial, 5).take(100_000)
    after_one = count_occurrences(data, b"\x01\x00") + count_occurrences(data, b"\x01\x01")
    assert abs(count_occurrences(data, b"\x01\x00") / after_one - 0.5) < 0.01


def test_pattern_frequency_matches_measure(logarithmic):
    pattern = Word.parse("10")
    mean, stderr = pattern_frequency(sample_stream(logarithmic, 11), pattern, 200_000)
    assert abs(mean - float(pi_word(logarithmic, pattern))) <= 5 * stderr + 1e-4


def test_count_occurrences_overlaps():
    assert count_occurrences(b"\x01\x01\x01", b"\x01\x01") == 2
    assert count_occurrences(b"", b"\x01") == 0


def test_fixed_letters_cannot_grow():
    source = FixedLetters("0110")
    assert source[2] == 1
    with pytest.raises(BudgetExceededError):
        source[4]
