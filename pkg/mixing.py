import itertools
import logging
import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Iterable, List, Optional, Tuple

from comb_source import CombSpec, Number, Word, log_number, pi_letters
from config import config
from errors import BudgetExceededError, TruncationOrderError
from series_engine import (
    Field,
    Series,
    assert_series_equal,
    s_at_one,
    series_Pa,
    series_R,
    series_S,
    series_U,
    shifted_remainders,
)

logger = logging.getLogger(__name__)


class MixCaseId(str, Enum):
    I = "I"
    II = "II"
    III = "III"
    IV = "IV"
    V = "V"


@dataclass(frozen=True)
class MixCase:
    case_id: MixCaseId
    a: int
    b: int


@dataclass(frozen=True)
class MixQuery:
    A: Word
    B: Word
    spec: CombSpec

    def __post_init__(self):
        if not len(self.A) or not len(self.B):
            raise ValueError("Слова A и B должны быть непустыми")

    @classmethod
    def parse(cls, A: str, B: str, spec: CombSpec) -> "MixQuery":
        return cls(Word.parse(A), Word.parse(B), spec)


def classify(A: Word, B: Word) -> MixCase:
    """a - число нулей в конце A, b - число нулей в начале B"""
    if not len(A) or not len(B):
        raise ValueError("Слова A и B должны быть непустыми")
    a = A.am if A.ones else len(A)
    b = B.a0 if B.ones else len(B)
    if A.ones and B.ones:
        if a == 0 and b == 0:
            return MixCase(MixCaseId.I, 0, 0)
        return MixCase(MixCaseId.II, a, b)
    if not A.ones and not B.ones:
        return MixCase(MixCaseId.III, a, b)
    if A.ones:
        return MixCase(MixCaseId.IV, a, b)
    return MixCase(MixCaseId.V, a, b)


def default_field(spec: CombSpec, n: int) -> Field:
    if spec.exact and n <= config.RATIONAL_PSI_LIMIT:
        return Field.RATIONAL
    return Field.FLOAT


def _c(spec: CombSpec, k: int, field: Field) -> Number:
    return spec.c(k) if field is Field.RATIONAL else spec.c_float(k)


def _r(spec: CombSpec, k: int, field: Field) -> Number:
    return spec.remainder(k) if field is Field.RATIONAL else spec.remainder_float(k)


def series_M(query: MixQuery, N: int, field: Optional[Field] = None) -> Series:
    """M^{A,B}: ψ(n, A, B) = [x^{n+1}] M"""
    spec = query.spec
    field = Field(field) if field is not None else default_field(spec, N)
    return series_M_case(spec, classify(query.A, query.B), N, field)


def series_M_case(spec: CombSpec, case: MixCase, N: int, field: Field) -> Series:
    """M для заданного случая и (a, b) без привязки к конкретным словам"""
    field = Field(field)
    a, b = case.a, case.b
    order = N + a + b + 2
    s1 = s_at_one(spec, field)
    U = series_U(spec, order, field)
    S = series_S(spec, order, field)
    logger.debug(f"M^{{A,B}} case {case.case_id.value} a={a} b={b} order={N} ({field.value})")

    if case.case_id is MixCaseId.I:
        x_minus_one = Series.polynomial([-1, 1], order, field)
        quotient = (S - s1) / (x_minus_one * S)
        renewal = U * s1 - Series.one(order, field) / Series.polynomial([1, -1], order, field)
        tol = {} if field is Field.RATIONAL else {"abs_tol": config.FLOAT_REL_TOL}
        assert_series_equal(quotient, renewal, N, label="M[I]", **tol)
        M = quotient
    elif case.case_id is MixCaseId.II:
        ratio = _c(spec, a + b, field) / (_c(spec, a, field) * _c(spec, b, field))
        Pa = series_Pa(spec, a, order, field)
        Pb = Pa if a == b else series_Pa(spec, b, order, field)
        M = series_Pa(spec, a + b, order, field) * (s1 * ratio) + U * (Pa * Pb * s1 - S)
    elif case.case_id is MixCaseId.III:
        norm = s1 / (_r(spec, a, field) * _r(spec, b, field))
        first = shifted_remainders(spec, a + b, order, field) * norm
        laurent = (series_R(spec, a, order + a + b, field) * series_R(spec, b, order + a + b, field))
        laurent = laurent.shift(-(a + b - 2)).canonical() * norm
        M = first + U * (laurent - S)
    elif case.case_id is MixCaseId.IV:
        ca, rb = _c(spec, a, field), _r(spec, b, field)
        first = series_R(spec, a + b, order + a + b - 1, field).shift(-(a + b - 1)).canonical()
        second = (series_Pa(spec, a, order, field) * series_R(spec, b, order + b - 1, field))
        second = second.shift(-(b - 1)).canonical()
        M = first * (s1 / (ca * rb)) + U * (second * (s1 / rb) - S)
    else:
        ra, cb = _r(spec, a, field), _c(spec, b, field)
        first = series_R(spec, a + b, order + a + b - 1, field).shift(-(a + b - 1)).canonical()
        second = (series_R(spec, a, order + a - 1, field) * series_Pa(spec, b, order, field))
        second = second.shift(-(a - 1)).canonical()
        M = first * (s1 / (ra * cb)) + U * (second * (s1 / ra) - S)

    return M.truncate(N).canonical()


def psi(query: MixQuery, n: int, N: Optional[int] = None, field: Optional[Field] = None) -> Number:
    if n < 1:
        raise ValueError(f"ψ определен для n >= 1, получено {n}")
    N = n + 1 if N is None else N
    if n + 1 > N:
        raise TruncationOrderError(f"Для ψ({n}) нужен порядок >= {n + 1}, задан {N}")
    field = Field(field) if field is not None else default_field(query.spec, n)
    return series_M(query, N, field).coefficient(n + 1)


def mixing_bruteforce(query: MixQuery, n: int, budget: int = config.ENUMERATION_LIMIT) -> Number:
    """ψ(n, A, B) перебором всех 2ⁿ средних слов"""
    if n < 1:
        raise ValueError(f"ψ определен для n >= 1, получено {n}")
    if n > budget:
        raise BudgetExceededError(f"Перебор 2^{n} слов превышает бюджет 2^{budget}")
    spec = query.spec
    A, B = query.A.letters, query.B.letters
    product = pi_letters(spec, A) * pi_letters(spec, B)
    total = 0
    for middle in itertools.product((0, 1), repeat=n):
        total += pi_letters(spec, A + middle + B)
    return (total - product) / product


def word_log_extremes(spec: CombSpec, n: int) -> Tuple[float, float]:
    """(min, max) ln(1/π(w)) по словам длины n, блочным динамическим программированием"""
    if n < 1:
        raise ValueError(f"n должно быть >= 1, получено {n}")
    if spec.horizon is not None and n > spec.horizon:
        raise BudgetExceededError(f"n = {n} за пределами удостоверенного горизонта {spec.horizon}")
    log_c = [log_number(spec.c(k)) for k in range(n)]
    log_rho = [0.0] + [log_number(spec.rho(g)) for g in range(1, n)]

    inner_lo = [0.0] * n
    inner_hi = [0.0] * n
    for t in range(1, n):
        candidates = [log_rho[g] + inner_lo[t - g] for g in range(1, t + 1)]
        inner_lo[t] = min(candidates)
        candidates = [log_rho[g] + inner_hi[t - g] for g in range(1, t + 1)]
        inner_hi[t] = max(candidates)

    lo = hi = log_number(spec.remainder(n))
    for s in range(n):
        edges = [log_c[a0] + log_c[s - a0] for a0 in range(s + 1)]
        lo = min(lo, min(edges) + inner_lo[n - 1 - s])
        hi = max(hi, max(edges) + inner_hi[n - 1 - s])

    log_s = log_number(spec.s1)
    return log_s - hi, log_s - lo


def h_bounds_estimate(spec: CombSpec, n: int, method: str = "enumerate") -> Tuple[float, float]:
    """(h₋ₙ, h₊ₙ) = (1/n)·(min, max) ln(1/π(w)) по словам длины n"""
    if n < 1:
        raise ValueError(f"n должно быть >= 1, получено {n}")
    if method == "blocks":
        lo, hi = word_log_extremes(spec, n)
        return lo / n, hi / n
    if method != "enumerate":
        raise ValueError(f"Неизвестный метод: {method}")
    if n > config.ENUMERATION_LIMIT:
        raise BudgetExceededError(f"Перебор 2^{n} слов превышает бюджет 2^{config.ENUMERATION_LIMIT}")
    surprisals = [-log_number(pi_letters(spec, w)) for w in itertools.product((0, 1), repeat=n)]
    return min(surprisals) / n, max(surprisals) / n


def spine_rate(spec: CombSpec, n: int) -> float:
    """(1/n)·ln(1/π(10^{n-1}))"""
    return -log_number(pi_letters(spec, Word.comb_pattern(n).letters)) / n


def case_one_constant(spec: CombSpec) -> Fraction:
    """Предел n³ψ(n, A, B) в случае I для логарифмического гребня: 1/(3S(1))"""
    return 1 / (3 * spec.s1)


def remark_constant(spec: CombSpec, a: int, b: int) -> Number:
    """Предел n³ψ(n, 0^a, 0^b) для логарифмического гребня"""
    s1 = spec.s1
    ra, rb = spec.remainder(a), spec.remainder(b)
    return (s1 / (ra * rb) - 1 / ra - 1 / rb + 1 / s1) / 3


def factorial_coefficient_equivalent(m: int) -> float:
    """Модуль главного члена [x^m]M для факториального гребня (полюса ±2iπ)"""
    epsilon = 1.0 if m % 2 == 0 else 2 * math.pi
    return 2 * (math.e - 1) / (1 + 4 * math.pi ** 2) * (2 * math.pi) ** (-m) * epsilon


def diagonal_sweep(spec: CombSpec, ns: Iterable[int]) -> List[Tuple[int, float]]:
    """ψ(n, "0", 0ⁿ): b растет вместе с n"""
    rows = []
    for n in ns:
        value = psi(MixQuery(Word.zeros(1), Word.zeros(n), spec), n, field=Field.FLOAT)
        logger.info(f"diagonal psi(n={n}) = {value:.6f}")
        rows.append((n, float(value)))
    return rows
