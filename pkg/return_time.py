import itertools
import logging
import math
from dataclasses import dataclass, field as dataclass_field
from fractions import Fraction
from multiprocessing import Pool
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import chisquare

from comb_source import (
    CombSpec,
    LetterSource,
    Number,
    Word,
    builtin_comb,
    comb_from_selector,
    count_occurrences,
    pi_letters,
    sample_stream,
)
from config import CombKind, config
from errors import BudgetExceededError, TruncationOrderError
from series_engine import Field, Series, assert_series_equal, check_field, s_at_one, series_Pa, series_U

logger = logging.getLogger(__name__)


@dataclass
class PatternStats:
    k: int
    phi1: Series
    phi2: Series
    mean2: Number
    var2: Number
    dist2: List[float] = dataclass_field(default_factory=list)
    defect: float = 0.0
    mean2_exact: Optional[Number] = None

    @property
    def mean_T(self) -> Number:
        return self.mean2 - self.k + 1


class SecondOccurrence(NamedTuple):
    T: int
    tau2: int


class MonteCarloSummary(NamedTuple):
    mean: float
    stderr: float
    samples: np.ndarray


def _field_for(spec: CombSpec, field: Optional[Field]) -> Field:
    if field is None:
        return Field.RATIONAL if spec.exact else Field.FLOAT
    return check_field(spec, field)


def _c(spec: CombSpec, k: int, field: Field) -> Number:
    return spec.c(k) if field is Field.RATIONAL else spec.c_float(k)


def _pattern_pieces(spec: CombSpec, k: int, N: int, field: Field) -> Tuple[Number, Number, Series, Series]:
    if k < 1:
        raise ValueError(f"k должно быть >= 1, получено {k}")
    c = _c(spec, k - 1, field)
    s1 = s_at_one(spec, field)
    u_minus_one = series_U(spec, N, field) - 1
    # S_w = 1 + c_{k-1} x^{k-1} (U - 1); автокорреляция 10^{k-1} равна 1
    s_w = u_minus_one.shift(k - 1) * c + 1
    return c, s1, u_minus_one, s_w


def phi1_series(spec: CombSpec, k: int, N: int, field: Optional[Field] = None) -> Series:
    """Производящая функция позиции последней буквы первого вхождения 10^{k-1}"""
    field = _field_for(spec, field)
    c, s1, _, s_w = _pattern_pieces(spec, k, N, field)
    one_minus_x = Series.polynomial([1, -1], N, field)
    return Series.monomial(k, N, field, c) / (one_minus_x * s_w * s1)


def phi2_series(spec: CombSpec, k: int, N: int, field: Optional[Field] = None) -> Series:
    """Производящая функция τ⁽²⁾(10^{k-1}) с проверкой Φ⁽²⁾ = Φ⁽¹⁾·(1 - 1/S_w)"""
    field = _field_for(spec, field)
    if N < 2 * k:
        raise TruncationOrderError(f"Для k = {k} нужен порядок >= {2 * k}, задан {N}")
    c, s1, u_minus_one, s_w = _pattern_pieces(spec, k, N, field)
    one_minus_x = Series.polynomial([1, -1], N, field)
    closed = (u_minus_one.shift(2 * k - 1) * (c * c) / (one_minus_x * s_w * s_w * s1)).truncate(N)

    phi1 = phi1_series(spec, k, N, field)
    tol = {} if field is Field.RATIONAL else {"abs_tol": 1e-12}
    assert_series_equal(closed, phi1 * (1 - 1 / s_w), N, label=f"phi2[k={k}]", **tol)
    return closed


def phi2_exact_series(spec: CombSpec, k: int, N: int, field: Optional[Field] = None) -> Series:
    """Закон τ⁽²⁾ с возвратом из состояния "k-1 нулей после единицы".

    После 10^{k-1} следующая единица приходит с вероятностями ρ_{k-1+n}/c_{k-1}, поэтому
    S_w = 1 + c_{k-1} x^{k-1} P_{k-1}(x) U(x). При k = 1 совпадает с phi2_series.
    """
    field = _field_for(spec, field)
    if k < 1:
        raise ValueError(f"k должно быть >= 1, получено {k}")
    if N < 2 * k:
        raise TruncationOrderError(f"Для k = {k} нужен порядок >= {2 * k}, задан {N}")
    c = _c(spec, k - 1, field)
    s1 = s_at_one(spec, field)
    returns = (series_Pa(spec, k - 1, N, field) * series_U(spec, N, field)).shift(k - 1) * c
    s_w = returns + 1
    one_minus_x = Series.polynomial([1, -1], N, field)
    phi1 = Series.monomial(k, N, field, c) / (one_minus_x * s_w * s1)
    return (phi1 * (1 - 1 / s_w)).truncate(N)


def exact_mean_tau2(spec: CombSpec, k: int, field: Optional[Field] = None) -> Number:
    """E τ⁽²⁾ для phi2_exact_series: formula_mean_tau2 + S(1) - r_{k-1}/c_{k-1}"""
    field = _field_for(spec, field)
    s0 = s_at_one(spec, field)
    r = spec.remainder(k - 1) if field is Field.RATIONAL else spec.remainder_float(k - 1)
    return formula_mean_tau2(spec, k, field) + s0 - r / _c(spec, k - 1, field)


def tau2_bruteforce(spec: CombSpec, k: int, m: int, budget: int = config.ENUMERATION_LIMIT) -> Number:
    """P(τ⁽²⁾ = m) перебором всех слов длины m"""
    if m > budget:
        raise BudgetExceededError(f"Перебор 2^{m} слов превышает бюджет 2^{budget}")
    needle = bytes(Word.comb_pattern(k).letters)
    total = Fraction(0) if spec.exact else 0.0
    for letters in itertools.product((0, 1), repeat=m):
        data = bytes(letters)
        if data.endswith(needle) and count_occurrences(data, needle) == 2:
            total += pi_letters(spec, letters)
    return total


def _exp_series(order: int, field: Field) -> Series:
    if field is Field.RATIONAL:
        return Series([Fraction(1, math.factorial(n)) for n in range(order + 1)], order, 0, field)
    coefficients = [1.0]
    for n in range(1, order + 1):
        coefficients.append(coefficients[-1] / n)
    return Series(coefficients, order, 0, field)


def phi2_factorial_closed_form(k: int, N: int, field: Field = Field.FLOAT, s1: Optional[Number] = None) -> Series:
    """Φ⁽²⁾ факториального гребня по явной формуле через eˣ"""
    field = Field(field)
    if s1 is None:
        s1 = builtin_comb(CombKind.FACTORIAL).s1 if field is Field.RATIONAL else math.e - 1
    order = N + 4
    ex = _exp_series(order, field)
    one_minus_x = Series.polynomial([1, -1], order, field)
    E = ex - 1
    Q = 1 - ex * one_minus_x
    # знаменатель k!(1-x)(eˣ-1) + x^{k-1}Q делится на x
    reduced = (one_minus_x * E * math.factorial(k)).shift(-1).canonical() + Q.shift(k - 2).canonical()
    numerator = (E * Q).shift(2 * k - 3).canonical()
    return (numerator / (reduced * reduced * s1)).truncate(N)


def _taylor_phi2(spec: CombSpec, k: int, field: Field) -> Series:
    """Φ⁽²⁾(1 + t) до t² по формуле c²x^k h/(S(1)D²), h = x^{k-1}(1/S - 1 + x), D = 1 - x + c h"""
    s0 = s_at_one(spec, field)
    first, second = spec.moment_sums()
    if field is Field.FLOAT:
        first, second = float(first), float(second)
    c = _c(spec, k - 1, field)

    def binomial_head(p: int) -> Series:
        return Series.polynomial([1, p, Fraction(p * (p - 1), 2)], 2, field)

    t = Series.monomial(1, 2, field)
    s_taylor = Series.polynomial([s0, first, second / 2], 2, field)
    h = binomial_head(k - 1) * (1 / s_taylor + t)
    D = h * c - t
    return binomial_head(k) * h * (c * c / s0) / (D * D)


def moments_tau2(spec: CombSpec, k: int, field: Optional[Field] = None) -> Tuple[Number, Number]:
    """Точные (E τ⁽²⁾, Var τ⁽²⁾) для шаблона 10^{k-1}"""
    if k < 1:
        raise ValueError(f"k должно быть >= 1, получено {k}")
    field = _field_for(spec, field)
    expansion = _taylor_phi2(spec, k, field)
    tol = {} if field is Field.RATIONAL else {"abs_tol": 1e-12}
    assert_series_equal(expansion.truncate(0), Series.one(0, field), 0, label="phi2(1)", **tol)

    mean = expansion.coefficient(1)
    factorial_moment = 2 * expansion.coefficient(2)
    variance = factorial_moment + mean - mean * mean

    closed = Series.constant(formula_mean_tau2(spec, k, field), 0, field)
    assert_series_equal(Series.constant(mean, 0, field), closed, 0, label=f"E tau2[k={k}]")
    return mean, variance


def formula_mean_tau2(spec: CombSpec, k: int, field: Field = Field.RATIONAL) -> Number:
    """(Φ⁽²⁾)'(1) = (Φ⁽¹⁾)'(1) + S(1)/c_{k-1}, (Φ⁽¹⁾)'(1) = S(1)/c_{k-1} - S(1) + 1 + S'(1)/S(1)"""
    s0 = s_at_one(spec, field)
    first, _ = spec.moment_sums()
    if field is Field.FLOAT:
        first = float(first)
    c = _c(spec, k - 1, field)
    phi1_mean = s0 / c - s0 + 1 + first / s0
    return phi1_mean + s0 / c


def mean_T(spec: CombSpec, k: int, field: Optional[Field] = None) -> Number:
    mean, _ = moments_tau2(spec, k, field)
    return mean - k + 1


def var_T(spec: CombSpec, k: int, field: Optional[Field] = None) -> Number:
    _, variance = moments_tau2(spec, k, field)
    return variance


def pattern_stats(spec: CombSpec, k: int, N: Optional[int] = None, field: Optional[Field] = None) -> PatternStats:
    if field is None:
        field = Field.FLOAT
    N = config.FLOAT_SERIES_ORDER if N is None else N
    phi1 = phi1_series(spec, k, N, field)
    phi2 = phi2_series(spec, k, N, field)
    mean2, var2 = moments_tau2(spec, k)
    mean2_exact = exact_mean_tau2(spec, k)
    dist2 = [float(value) for value in phi2.coefficients(N)]
    defect = 1.0 - math.fsum(dist2)
    logger.info(f"Pattern stats {spec.name} k={k}: N={N} defect={defect:.3e}")
    return PatternStats(k=k, phi1=phi1, phi2=phi2, mean2=mean2, var2=var2, dist2=dist2, defect=defect,
                        mean2_exact=mean2_exact)


def mean_from_distribution(dist: Sequence[float]) -> float:
    return math.fsum(m * p for m, p in enumerate(dist))


def _failure_table(pattern: Sequence[int]) -> List[int]:
    table = [0] * len(pattern)
    j = 0
    for i in range(1, len(pattern)):
        while j and pattern[i] != pattern[j]:
            j = table[j - 1]
        if pattern[i] == pattern[j]:
            j += 1
        table[i] = j
    return table


def scan_second_occurrence(stream: LetterSource, w: Word, cap: int = config.SCAN_CAP) -> SecondOccurrence:
    """Начало T второго вхождения w (вхождения могут перекрываться), позиции с 1.

    tau2 - позиция последней буквы второго вхождения: tau2 = T + |w| - 1.
    """
    pattern = w.letters
    if not pattern:
        raise ValueError("Пустой шаблон")
    table = _failure_table(pattern)
    matched = 0
    found = 0
    pos = 0
    while True:
        if pos >= cap:
            raise BudgetExceededError(f"Второе вхождение {w} не найдено за {cap} букв")
        letter = stream[pos]
        while matched and pattern[matched] != letter:
            matched = table[matched - 1]
        if pattern[matched] == letter:
            matched += 1
        if matched == len(pattern):
            found += 1
            if found == 2:
                end = pos + 1
                return SecondOccurrence(T=end - len(pattern) + 1, tau2=end)
            matched = table[matched - 1]
        pos += 1


def _tau2_run(task: Tuple[str, Optional[list], int, int]) -> int:
    kind, q_values, seed, k = task
    spec = comb_from_selector(kind, q_values)
    return scan_second_occurrence(sample_stream(spec, seed), Word.comb_pattern(k)).tau2


def monte_carlo_tau2(spec: CombSpec, k: int, runs: int, seed: int, workers: int = 1) -> MonteCarloSummary:
    """τ⁽²⁾ по независимым потокам с зернами seed ⊕ run"""
    q_values = getattr(spec, "q_values", None)
    if workers > 1 and (spec.kind is not CombKind.CUSTOM or q_values is not None):
        tasks = [(spec.kind.value, q_values, seed ^ run, k) for run in range(runs)]
        with Pool(workers) as pool:
            samples = np.array(pool.map(_tau2_run, tasks), dtype=np.int64)
    else:
        pattern = Word.comb_pattern(k)
        samples = np.array(
            [scan_second_occurrence(sample_stream(spec, seed ^ run), pattern).tau2 for run in range(runs)],
            dtype=np.int64,
        )
    mean = float(samples.mean())
    stderr = float(samples.std(ddof=1) / math.sqrt(runs)) if runs > 1 else float("nan")
    logger.info(f"Monte Carlo tau2 {spec.name} k={k}: runs={runs} mean={mean:.3f} +- {stderr:.3f}")
    return MonteCarloSummary(mean=mean, stderr=stderr, samples=samples)


def tau2_histogram(samples: np.ndarray, upto: int) -> np.ndarray:
    """Число прогонов с τ⁽²⁾ = m для m = 0..upto; большие значения - в ячейке upto + 1"""
    counts = np.bincount(np.minimum(samples, upto + 1), minlength=upto + 2)
    return counts[:upto + 2]


def tau2_chisquare(samples: np.ndarray, dist: Sequence[float], min_expected: float = 5.0) -> Tuple[float, float]:
    """Хи-квадрат эмпирического закона τ⁽²⁾ против коэффициентов Φ⁽²⁾; хвост - отдельная ячейка"""
    runs = len(samples)
    bounds: List[int] = []
    expected: List[float] = []
    acc = 0.0
    for m, p in enumerate(dist):
        acc += runs * p
        if acc >= min_expected:
            bounds.append(m)
            expected.append(acc)
            acc = 0.0
    tail = runs - math.fsum(expected)
    if tail < min_expected and expected:
        bounds.pop()
        expected[-1] += tail
        tail_expected = expected.pop()
    else:
        tail_expected = tail
    expected.append(tail_expected)

    counts = tau2_histogram(samples, len(dist))
    observed = []
    start = 0
    for end in bounds:
        observed.append(int(counts[start:end + 1].sum()))
        start = end + 1
    observed.append(runs - sum(observed))
    statistic, pvalue = chisquare(np.array(observed, dtype=float), np.array(expected, dtype=float))
    return float(statistic), float(pvalue)
