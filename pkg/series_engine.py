import logging
import math
from enum import Enum
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from comb_source import CombSpec, Number
from config import CombKind, config
from errors import ConsistencyError, TruncationOrderError

logger = logging.getLogger(__name__)


class Field(str, Enum):
    RATIONAL = "rational"
    FLOAT = "float"


def _rational_convolve(a: Sequence[Fraction], b: Sequence[Fraction], length: int) -> List[Fraction]:
    """Свертка через общий знаменатель: целочисленная арифметика без gcd на каждом шаге"""
    da = math.lcm(*(x.denominator for x in a))
    db = math.lcm(*(x.denominator for x in b))
    ia = [x.numerator * (da // x.denominator) for x in a]
    ib = [x.numerator * (db // x.denominator) for x in b]
    out = [0] * length
    for i, av in enumerate(ia):
        if not av:
            continue
        for j in range(length - i):
            out[i + j] += av * ib[j]
    den = da * db
    return [Fraction(v, den) for v in out]


class Series:
    """Усеченный ряд Σ_{k=valuation_offset}^{order} a_k x^k.

    Коэффициенты выше order неизвестны; ниже valuation_offset равны нулю.
    Отрицательный valuation_offset допускается только внутри промежуточных вычислений.
    """

    __slots__ = ("_coeffs", "valuation_offset", "order", "field")

    def __init__(self, coeffs: Iterable[Number], order: int, valuation_offset: int = 0,
                 field: Field = Field.RATIONAL):
        field = Field(field)
        length = max(order - valuation_offset + 1, 0)
        values = list(coeffs)[:length]
        if field is Field.FLOAT:
            arr = np.zeros(length)
            if values:
                arr[:len(values)] = [float(v) for v in values]
            stored = arr
        else:
            for v in values:
                if isinstance(v, float):
                    raise TypeError("Рациональный ряд не принимает float-коэффициенты")
            stored = tuple(Fraction(v) for v in values) + (Fraction(0),) * (length - len(values))
        self._init(stored, order, valuation_offset, field)

    def _init(self, coeffs, order: int, valuation_offset: int, field: Field) -> None:
        if isinstance(coeffs, np.ndarray):
            coeffs.flags.writeable = False
        self._coeffs = coeffs
        self.order = order
        self.valuation_offset = valuation_offset
        self.field = field

    @classmethod
    def _raw(cls, coeffs, order: int, valuation_offset: int, field: Field) -> "Series":
        series = cls.__new__(cls)
        if field is Field.FLOAT:
            coeffs = np.asarray(coeffs, dtype=float)
        else:
            coeffs = tuple(coeffs)
        series._init(coeffs, order, valuation_offset, field)
        return series

    @classmethod
    def constant(cls, value: Number, order: int, field: Field = Field.RATIONAL) -> "Series":
        return cls([value], order, 0, field)

    @classmethod
    def one(cls, order: int, field: Field = Field.RATIONAL) -> "Series":
        return cls.constant(1, order, field)

    @classmethod
    def monomial(cls, k: int, order: int, field: Field = Field.RATIONAL, coefficient: Number = 1) -> "Series":
        return cls([coefficient], order, k, field)

    @classmethod
    def polynomial(cls, coeffs: Sequence[Number], order: int, field: Field = Field.RATIONAL) -> "Series":
        return cls(coeffs, order, 0, field)

    def _zero(self) -> Number:
        return 0.0 if self.field is Field.FLOAT else Fraction(0)

    def coefficient(self, k: int) -> Number:
        if k > self.order:
            raise TruncationOrderError(f"Коэффициент x^{k} за пределами порядка усечения {self.order}")
        if k < self.valuation_offset:
            return self._zero()
        value = self._coeffs[k - self.valuation_offset]
        return float(value) if self.field is Field.FLOAT else value

    __getitem__ = coefficient

    def coefficients(self, upto: int = None) -> List[Number]:
        """[a_0, ..., a_upto]"""
        upto = self.order if upto is None else upto
        return [self.coefficient(k) for k in range(upto + 1)]

    def _dense(self, lo: int, hi: int):
        n = hi - lo + 1
        if self.field is Field.FLOAT:
            out = np.zeros(max(n, 0))
            start = max(lo, self.valuation_offset)
            if start <= hi:
                out[start - lo:] = self._coeffs[start - self.valuation_offset:hi - self.valuation_offset + 1]
            return out
        out = [Fraction(0)] * max(n, 0)
        start = max(lo, self.valuation_offset)
        for k in range(start, hi + 1):
            out[k - lo] = self._coeffs[k - self.valuation_offset]
        return out

    def _coerce(self, other) -> Tuple["Series", "Series"]:
        if not isinstance(other, Series):
            other = Series.constant(other if self.field is Field.RATIONAL else float(other), self.order, self.field)
        if self.field is other.field:
            return self, other
        return self.to_float(), other.to_float()

    def __add__(self, other) -> "Series":
        a, b = self._coerce(other)
        lo = min(a.valuation_offset, b.valuation_offset)
        hi = min(a.order, b.order)
        if a.field is Field.FLOAT:
            values = a._dense(lo, hi) + b._dense(lo, hi)
        else:
            values = [x + y for x, y in zip(a._dense(lo, hi), b._dense(lo, hi))]
        return Series._raw(values, hi, lo, a.field)

    __radd__ = __add__

    def __neg__(self) -> "Series":
        return self.scale(-1)

    def __sub__(self, other) -> "Series":
        a, b = self._coerce(other)
        return a + (-b)

    def __rsub__(self, other) -> "Series":
        return (-self) + other

    def scale(self, value: Number) -> "Series":
        if self.field is Field.FLOAT:
            return Series._raw(self._coeffs * float(value), self.order, self.valuation_offset, self.field)
        return Series._raw([x * value for x in self._coeffs], self.order, self.valuation_offset, self.field)

    def __mul__(self, other) -> "Series":
        if not isinstance(other, Series):
            return self.scale(other)
        a, b = self._coerce(other)
        offset = a.valuation_offset + b.valuation_offset
        hi = min(a.order + b.valuation_offset, b.order + a.valuation_offset)
        length = hi - offset + 1
        if length <= 0:
            return Series._raw([], hi, offset, a.field)
        left, right = a._coeffs[:length], b._coeffs[:length]
        if a.field is Field.FLOAT:
            values = np.convolve(left, right)[:length]
        else:
            values = _rational_convolve(left, right, length)
        return Series._raw(values, hi, offset, a.field)

    def __rmul__(self, other) -> "Series":
        return self.scale(other)

    def __truediv__(self, other) -> "Series":
        if not isinstance(other, Series):
            if self.field is Field.FLOAT:
                return self.scale(1.0 / float(other))
            return self.scale(1 / Fraction(other))
        a, g = self._coerce(other)
        if g.valuation_offset != 0 or g.coefficient(0) == 0:
            raise ConsistencyError("Деление на ряд с нулевым свободным членом")
        offset = a.valuation_offset
        hi = min(a.order, g.order + offset)
        length = hi - offset + 1
        if length <= 0:
            return Series._raw([], hi, offset, a.field)
        f, d = a._coeffs, g._coeffs
        if a.field is Field.FLOAT:
            h = np.zeros(length)
            d0 = d[0]
            for n in range(length):
                acc = f[n]
                if n:
                    acc -= np.dot(d[1:n + 1], h[n - 1::-1])
                h[n] = acc / d0
            return Series._raw(h, hi, offset, a.field)
        d0 = d[0]
        nonzero = [(i, d[i]) for i in range(1, length) if d[i]]
        values: List[Fraction] = []
        for n in range(length):
            acc = f[n]
            for i, di in nonzero:
                if i > n:
                    break
                acc -= di * values[n - i]
            values.append(acc / d0)
        return Series._raw(values, hi, offset, a.field)

    def __rtruediv__(self, other) -> "Series":
        return Series.constant(other, self.order, self.field) / self

    def shift(self, k: int) -> "Series":
        """Умножение на x^k (k может быть отрицательным)"""
        return Series._raw(self._coeffs, self.order + k, self.valuation_offset + k, self.field)

    def truncate(self, order: int) -> "Series":
        if order >= self.order:
            return self
        length = max(order - self.valuation_offset + 1, 0)
        return Series._raw(self._coeffs[:length], order, self.valuation_offset, self.field)

    def canonical(self) -> "Series":
        """Снимает нулевую лоранову часть; ненулевой коэффициент при x^{-j} - ошибка"""
        offset = self.valuation_offset
        i = 0
        while offset + i < 0 and i < len(self._coeffs) and self._coeffs[i] == 0:
            i += 1
        if offset + i < 0 and i < len(self._coeffs):
            raise ConsistencyError(
                f"Лоранова часть не сократилась: коэффициент при x^{offset + i} = {self._coeffs[i]}"
            )
        if offset + i < 0:
            return Series([], self.order, 0, self.field)
        return Series._raw(self._coeffs[i:], self.order, offset + i, self.field)

    def partial_sum(self, upto: int = None) -> Number:
        upto = self.order if upto is None else upto
        return sum(self.coefficients(upto), self._zero())

    def to_float(self) -> "Series":
        if self.field is Field.FLOAT:
            return self
        return Series._raw([float(x) for x in self._coeffs], self.order, self.valuation_offset, Field.FLOAT)

    def __repr__(self) -> str:
        head = ", ".join(str(x) for x in self.coefficients(min(self.order, 5))) if self.order >= 0 else ""
        return f"Series([{head}, ...], order={self.order}, field={self.field.value})"


def assert_series_equal(a: Series, b: Series, upto: int, label: str = "series",
                        rel_tol: float = None, abs_tol: float = None) -> None:
    """Точное равенство в рациональном режиме, допуски - в float"""
    exact = a.field is Field.RATIONAL and b.field is Field.RATIONAL
    rel_tol = config.FLOAT_REL_TOL if rel_tol is None else rel_tol
    abs_tol = config.FLOAT_ABS_TOL if abs_tol is None else abs_tol
    for k in range(upto + 1):
        x, y = a.coefficient(k), b.coefficient(k)
        if exact:
            if x != y:
                raise ConsistencyError(f"{label}: коэффициенты при x^{k} различаются: {x} != {y}")
        elif abs(x - y) > rel_tol * max(abs(x), abs(y)) + abs_tol:
            raise ConsistencyError(f"{label}: коэффициенты при x^{k} различаются: {x!r} != {y!r}")


def check_field(spec: CombSpec, field: Field) -> Field:
    field = Field(field)
    if field is Field.RATIONAL and not spec.exact:
        raise ValueError(f"Гребень {spec.name} с float-коэффициентами нельзя считать в рациональном режиме")
    return field


def _c(spec: CombSpec, k: int, field: Field) -> Number:
    return spec.c(k) if field is Field.RATIONAL else spec.c_float(k)


def _rho(spec: CombSpec, k: int, field: Field) -> Number:
    if field is Field.RATIONAL:
        return spec.rho(k)
    if k <= 0:
        return 0.0
    return spec.c_float(k - 1) - spec.c_float(k)


def _r(spec: CombSpec, k: int, field: Field) -> Number:
    return spec.remainder(k) if field is Field.RATIONAL else spec.remainder_float(k)


def s_at_one(spec: CombSpec, field: Field) -> Number:
    return spec.s1 if field is Field.RATIONAL else float(spec.s1)


def series_S(spec: CombSpec, N: int, field: Field = Field.RATIONAL) -> Series:
    field = check_field(spec, field)
    return Series([_c(spec, k, field) for k in range(N + 1)], N, 0, field)


def series_P(spec: CombSpec, N: int, field: Field = Field.RATIONAL) -> Series:
    field = check_field(spec, field)
    return Series([_rho(spec, k, field) for k in range(N + 1)], N, 0, field)


def series_P_closed(spec: CombSpec, N: int, field: Field = Field.RATIONAL) -> Series:
    """P = 1 - (1-x)S"""
    one_minus_x = Series.polynomial([1, -1], N, field)
    return 1 - one_minus_x * series_S(spec, N, field)


def series_R(spec: CombSpec, a: int, N: int, field: Field = Field.RATIONAL) -> Series:
    field = check_field(spec, field)
    if a < 0:
        raise ValueError(f"a должно быть >= 0, получено {a}")
    return Series([_c(spec, k, field) for k in range(a, N + 1)], N, a, field)


def shifted_remainders(spec: CombSpec, start: int, N: int, field: Field = Field.RATIONAL) -> Series:
    """Σ_{n>=1} r_{start+n-1} xⁿ"""
    field = check_field(spec, field)
    return Series([_r(spec, start + n - 1, field) for n in range(1, N + 1)], N, 1, field)


_U_CACHE: Dict[Tuple, Series] = {}


def _u_cache_key(spec: CombSpec, field: Field) -> Optional[Tuple]:
    """Ключ по параметрам гребня, а не по объекту; гребень, заданный функцией q0, не кешируется"""
    if spec.kind is CombKind.CUSTOM:
        q_values = getattr(spec, "q_values", None)
        if q_values is None:
            return None
        return spec.kind, tuple(q_values), spec.horizon, field
    return spec.kind, spec.horizon, field


def series_U(spec: CombSpec, N: int, field: Field = Field.RATIONAL) -> Series:
    """U = 1/(1-P) = 1/((1-x)S): рекуррентно и делением, с проверкой совпадения"""
    field = check_field(spec, field)
    key = _u_cache_key(spec, field)
    cached = _U_CACHE.get(key) if key is not None else None
    if cached is not None and cached.order >= N:
        return cached.truncate(N)

    rho = [_rho(spec, k, field) for k in range(N + 1)]
    if field is Field.FLOAT:
        rho_arr = np.asarray(rho, dtype=float)
        u = np.zeros(N + 1)
        u[0] = 1.0
        for n in range(1, N + 1):
            u[n] = np.dot(rho_arr[1:n + 1], u[n - 1::-1])
        values = u
    else:
        values = [Fraction(1)]
        for n in range(1, N + 1):
            acc = Fraction(0)
            for k in range(1, n + 1):
                acc += rho[k] * values[n - k]
            values.append(acc)
    by_recurrence = Series(values, N, 0, field)

    denominator = Series.polynomial([1, -1], N, field) * series_S(spec, N, field)
    by_division = Series.one(N, field) / denominator
    assert_series_equal(by_recurrence, by_division, N, label=f"U[{spec.name}]")
    logger.debug(f"U for {spec.name} built to order {N} ({field.value})")

    if key is not None:
        _U_CACHE[key] = by_recurrence
    return by_recurrence


def series_Pa(spec: CombSpec, a: int, N: int, field: Field = Field.RATIONAL) -> Series:
    """P_a = (1/c_a) Σ_{n>=1} ρ_{a+n} xⁿ, сверенный с x + (x-1) R_{a+1} / (c_a x^a)"""
    field = check_field(spec, field)
    ca = _c(spec, a, field)
    shifted = Series([_rho(spec, a + n, field) / ca for n in range(1, N + 1)], N, 1, field)

    x_minus_one = Series.polynomial([-1, 1], N + a, field)
    laurent = (x_minus_one * series_R(spec, a + 1, N + a, field)).shift(-a)
    closed = (Series.monomial(1, N, field) + laurent / ca).canonical()
    assert_series_equal(shifted, closed, max(N - a, 0), label=f"P_{a}[{spec.name}]")
    return shifted
