import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from config import CombKind, config
from errors import BudgetExceededError, CombError, UnboundedTailError, UnsupportedCombError

logger = logging.getLogger(__name__)

Number = Union[Fraction, float]


@dataclass(frozen=True)
class Word:
    """Конечное слово над {0, 1}"""

    letters: Tuple[int, ...] = ()

    def __post_init__(self):
        for letter in self.letters:
            if letter not in (0, 1):
                raise ValueError(f"Слово должно состоять из 0 и 1, получено {letter!r}")

    @classmethod
    def parse(cls, text: str) -> "Word":
        text = text.strip()
        if any(ch not in "01" for ch in text):
            raise ValueError(f"Не двоичное слово: {text!r}")
        return cls(tuple(int(ch) for ch in text))

    @classmethod
    def zeros(cls, n: int) -> "Word":
        return cls((0,) * n)

    @classmethod
    def comb_pattern(cls, k: int) -> "Word":
        """Слово 10^{k-1}"""
        if k < 1:
            raise ValueError(f"Длина шаблона должна быть >= 1, получено {k}")
        return cls((1,) + (0,) * (k - 1))

    @classmethod
    def from_blocks(cls, zeros: Sequence[int]) -> "Word":
        """Обратная операция к blocks(): (a0, a1, ..., am) -> 0^{a0} 1 0^{a1} ... 1 0^{am}"""
        if not zeros:
            raise ValueError("Пустое блочное разложение")
        letters: List[int] = []
        for i, run in enumerate(zeros):
            if run < 0:
                raise ValueError(f"Отрицательная длина блока: {run}")
            if i:
                letters.append(1)
            letters.extend([0] * run)
        return cls(tuple(letters))

    def blocks(self) -> Tuple[int, ...]:
        zeros = [0]
        for letter in self.letters:
            if letter:
                zeros.append(0)
            else:
                zeros[-1] += 1
        return tuple(zeros)

    @property
    def ones(self) -> int:
        return sum(self.letters)

    @property
    def a0(self) -> int:
        return self.blocks()[0]

    @property
    def am(self) -> int:
        return self.blocks()[-1]

    @property
    def inner_gaps(self) -> Tuple[int, ...]:
        return self.blocks()[1:-1]

    def is_all_zero(self) -> bool:
        return 1 not in self.letters

    def __len__(self) -> int:
        return len(self.letters)

    def __str__(self) -> str:
        return "".join(str(letter) for letter in self.letters)

    def __add__(self, other: "Word") -> "Word":
        return Word(self.letters + other.letters)


class CombSpec(ABC):
    """Бесконечный гребень: q0(n) = q_{0ⁿ1}(0), cₙ = ∏_{k<n} q0(k)"""

    kind: CombKind
    exact: bool = True

    def __init__(self):
        self._c: List[Number] = [self._one()]
        self._c_float: List[float] = [1.0]
        self._q_float: List[float] = []
        self._partial: List[Number] = [self._zero()]

    @property
    def name(self) -> str:
        return self.kind.value

    def _one(self) -> Number:
        return Fraction(1) if self.exact else 1.0

    def _zero(self) -> Number:
        return Fraction(0) if self.exact else 0.0

    @abstractmethod
    def q0(self, n: int) -> Number:
        pass

    @property
    @abstractmethod
    def s1(self) -> Number:
        """S(1) = Σ cₙ"""
        pass

    @property
    def horizon(self) -> Optional[int]:
        """Индекс усечения S(1); None для замкнутой формы"""
        return None

    @property
    def tail_bound(self) -> Number:
        return self._zero()

    def c(self, n: int) -> Number:
        if n < 0:
            raise ValueError(f"n должно быть >= 0, получено {n}")
        while len(self._c) <= n:
            k = len(self._c) - 1
            self._c.append(self._c[k] * self.q0(k))
        return self._c[n]

    def c_float(self, n: int) -> float:
        while len(self._c_float) <= n:
            k = len(self._c_float) - 1
            self._c_float.append(self._c_float[k] * self.q0_float(k))
        return self._c_float[n]

    def q0_float(self, n: int) -> float:
        while len(self._q_float) <= n:
            self._q_float.append(float(self.q0(len(self._q_float))))
        return self._q_float[n]

    def rho(self, n: int) -> Number:
        """ρₙ = c_{n-1} - cₙ, ρ₀ = 0"""
        if n <= 0:
            return self._zero()
        return self.c(n - 1) - self.c(n)

    def partial(self, n: int) -> Number:
        """Σ_{k<n} c_k"""
        while len(self._partial) <= n:
            k = len(self._partial) - 1
            self._partial.append(self._partial[k] + self.c(k))
        return self._partial[n]

    def remainder(self, n: int) -> Number:
        if n < 0:
            raise ValueError(f"n должно быть >= 0, получено {n}")
        return self.s1 - self.partial(n)

    def remainder_float(self, n: int) -> float:
        return float(self.remainder(n))

    @abstractmethod
    def moment_sums(self) -> Tuple[Number, Number]:
        """(S'(1), S''(1)) = (Σ n cₙ, Σ n(n-1) cₙ)"""
        pass

    def validate(self, upto: int = 64) -> None:
        for n in range(upto):
            q = self.q0(n)
            if not 0 < q < 1:
                raise CombError(f"q0({n}) = {q} вне интервала (0, 1)")

    def __repr__(self) -> str:
        return f"{type(self).__name__}()"


class LogarithmicComb(CombSpec):
    """cₙ = 1/(n(n+1)(n+2)(n+3)), S(1) = 19/18"""

    kind = CombKind.LOGARITHMIC

    def q0(self, n: int) -> Fraction:
        if n == 0:
            return Fraction(1, 24)
        return Fraction(n, n + 4)

    def c(self, n: int) -> Fraction:
        if n < 0:
            raise ValueError(f"n должно быть >= 0, получено {n}")
        if n == 0:
            return Fraction(1)
        return Fraction(1, n * (n + 1) * (n + 2) * (n + 3))

    def c_float(self, n: int) -> float:
        if n == 0:
            return 1.0
        return 1.0 / (n * (n + 1.0) * (n + 2.0) * (n + 3.0))

    @property
    def s1(self) -> Fraction:
        return Fraction(19, 18)

    def remainder(self, n: int) -> Fraction:
        if n < 0:
            raise ValueError(f"n должно быть >= 0, получено {n}")
        if n == 0:
            return self.s1
        # телескопическая сумма
        return Fraction(1, 3 * n * (n + 1) * (n + 2))

    def remainder_float(self, n: int) -> float:
        if n == 0:
            return 19.0 / 18.0
        return 1.0 / (3.0 * n * (n + 1.0) * (n + 2.0))

    def moment_sums(self) -> Tuple[Fraction, Fraction]:
        return Fraction(1, 12), Fraction(1, 6)


class TruncatedComb(CombSpec):
    """Гребень, у которого S(1) берется как точная частичная сумма с оценкой хвоста"""

    def __init__(self, tolerance: Number, min_horizon: int = 0, max_horizon: int = config.CUSTOM_HORIZON):
        super().__init__()
        self._tolerance = tolerance
        self._max_horizon = max_horizon
        self._tails: Dict[int, Number] = {}
        self._horizon, self._tail = self._truncate(min_horizon, max_horizon)
        self._s1 = self.partial(self._horizon + 1)
        logger.debug(f"{self.name}: horizon={self._horizon} tail<={float(self._tail):.3e}")

    def _tail_from(self, k: int) -> Number:
        # для невозрастающих q0 начиная с k: Σ_{n>=k} cₙ <= c_k / (1 - q0(k))
        return self.c(k) / (1 - self.q0(k))

    def _truncate(self, min_horizon: int, max_horizon: int) -> Tuple[int, Number]:
        k = min_horizon
        while True:
            bound = self._tail_from(k + 1)
            if bound <= self._tolerance:
                return k, bound
            k += 1
            if k > max_horizon:
                raise UnboundedTailError(
                    f"Частичные суммы {self.name} не стабилизировались до {self._tolerance} за {max_horizon} членов"
                )

    def remainder(self, n: int) -> Number:
        """rₙ = S̃ - Σ_{k<n} c_k до горизонта, дальше - хвостовая сумма с относительной погрешностью tolerance"""
        if n < 0:
            raise ValueError(f"n должно быть >= 0, получено {n}")
        if n <= self._horizon:
            return self.s1 - self.partial(n)
        return self._tail_sum(n)

    def _tail_sum(self, n: int) -> Number:
        cached = self._tails.get(n)
        if cached is not None:
            return cached
        total = self._zero()
        m = n
        while True:
            total += self.c(m)
            if self._tail_from(m + 1) <= self._tolerance * total:
                break
            m += 1
            if m - n > self._max_horizon:
                raise UnboundedTailError(
                    f"Хвост r_{n} для {self.name} не стабилизировался за {self._max_horizon} членов"
                )
        self._tails[n] = total
        return total

    @property
    def horizon(self) -> int:
        return self._horizon

    @property
    def tail_bound(self) -> Number:
        return self._tail

    @property
    def s1(self) -> Number:
        return self._s1

    def moment_sums(self) -> Tuple[Number, Number]:
        first = self._zero()
        second = self._zero()
        for n in range(1, self._horizon + 1):
            first += n * self.c(n)
            second += n * (n - 1) * self.c(n)
        k = self._horizon + 1
        q = float(self.q0(k))
        ck = float(self.c(k))
        second_tail = ck * (k * k / (1 - q) + 2 * k * q / (1 - q) ** 2 + q * (1 + q) / (1 - q) ** 3)
        if second_tail > config.MOMENT_TOLERANCE:
            raise UnsupportedCombError(
                f"Не удается удостоверить конечность Σn²cₙ для {self.name}: хвост ~ {second_tail:.3e}"
            )
        return first, second


class FactorialComb(TruncatedComb):
    """cₙ = 1/(n+1)!, S(1) = e - 1"""

    kind = CombKind.FACTORIAL

    def __init__(self, tolerance: Fraction = config.TAIL_TOLERANCE):
        super().__init__(tolerance)

    def q0(self, n: int) -> Fraction:
        return Fraction(1, n + 2)

    def c(self, n: int) -> Fraction:
        if n < 0:
            raise ValueError(f"n должно быть >= 0, получено {n}")
        return Fraction(1, math.factorial(n + 1))

    def moment_sums(self) -> Tuple[Fraction, Fraction]:
        # S'(1) = 1 и S''(1) = S(1) - 1 для (eˣ - 1)/x
        return Fraction(1), self.s1 - 1


class LogNComb(TruncatedComb):
    """cₙ = (1/3)∏_{k=1}^{n-1}(1/3 + 1/(1+k)²)"""

    kind = CombKind.LOGN

    def __init__(self, tolerance: Fraction = config.TAIL_TOLERANCE):
        super().__init__(tolerance)

    def q0(self, n: int) -> Fraction:
        if n == 0:
            return Fraction(1, 3)
        return Fraction(1, 3) + Fraction(1, (n + 1) ** 2)


class CustomComb(TruncatedComb):
    """Гребень по списку q0 (последнее значение повторяется) или по функции q0"""

    kind = CombKind.CUSTOM

    def __init__(self, q_values: Optional[Sequence[Number]] = None,
                 q_function: Optional[Callable[[int], Number]] = None,
                 tolerance: float = config.CUSTOM_TOLERANCE,
                 horizon: int = config.CUSTOM_HORIZON):
        if (q_values is None) == (q_function is None):
            raise CombError("Нужно задать ровно одно из q_values или q_function")
        if q_values is not None:
            if not q_values:
                raise CombError("Пустой список q0")
            self.exact = all(isinstance(q, (Fraction, int)) for q in q_values)
            self._q_values = [Fraction(q) if self.exact else float(q) for q in q_values]
            for n, q in enumerate(self._q_values):
                if not 0 < q < 1:
                    raise CombError(f"q0({n}) = {q} вне интервала (0, 1)")
        else:
            self._q_values = None
            self.exact = isinstance(q_function(0), Fraction)
        self._q_function = q_function
        min_horizon = len(self._q_values) if self._q_values is not None else 0
        tol = Fraction(tolerance) if self.exact else float(tolerance)
        super().__init__(tol, min_horizon=min_horizon, max_horizon=horizon)

    @property
    def q_values(self) -> Optional[List[Number]]:
        return None if self._q_values is None else list(self._q_values)

    def q0(self, n: int) -> Number:
        if self._q_values is not None:
            return self._q_values[min(n, len(self._q_values) - 1)]
        q = self._q_function(n)
        if not 0 < q < 1:
            raise CombError(f"q0({n}) = {q} вне интервала (0, 1)")
        return q

    def __repr__(self) -> str:
        return f"CustomComb(q_values={self._q_values!r})"


@lru_cache(maxsize=None)
def builtin_comb(kind: CombKind) -> CombSpec:
    kind = CombKind(kind)
    if kind is CombKind.LOGARITHMIC:
        return LogarithmicComb()
    if kind is CombKind.FACTORIAL:
        return FactorialComb()
    if kind is CombKind.LOGN:
        return LogNComb()
    raise CombError("Пользовательский гребень требует список q0")


def comb_from_selector(kind: Union[CombKind, str], q_values: Optional[Sequence[Number]] = None) -> CombSpec:
    """Восстанавливает гребень по выбору из конфигурации (в том числе в рабочем процессе)"""
    kind = CombKind(kind)
    if kind is CombKind.CUSTOM:
        if q_values is None:
            raise CombError("Пользовательский гребень требует список q0")
        return CustomComb(q_values=list(q_values))
    return builtin_comb(kind)


def pi_letters(spec: CombSpec, letters: Sequence[int]) -> Number:
    """π для последовательности букв без построения Word"""
    ones = [i for i, letter in enumerate(letters) if letter]
    if not ones:
        return remainder_r(spec, len(letters)) / spec.s1
    value = spec.c(ones[0]) * spec.c(len(letters) - 1 - ones[-1])
    for left, right in zip(ones, ones[1:]):
        value *= spec.rho(right - left)
    return value / spec.s1


def pi_word(spec: CombSpec, w: Word) -> Number:
    return pi_letters(spec, w.letters)


def log_number(value: Number) -> float:
    if isinstance(value, Fraction):
        if value <= 0:
            raise ValueError(f"Логарифм неположительного числа {value}")
        return math.log(value.numerator) - math.log(value.denominator)
    return math.log(value)


def word_surprisal(spec: CombSpec, w: Word) -> float:
    """ln(1/π(w))"""
    return -log_number(pi_word(spec, w))


def remainder_r(spec: CombSpec, n: int) -> Number:
    """rₙ = Σ_{k>=n} c_k; π(0ⁿ) = rₙ/S(1)"""
    return spec.remainder(n)


def initial_context(spec: CombSpec, rng: np.random.Generator) -> int:
    """Число нулей после последней единицы в стационарном режиме: P(k) = c_k/S(1)"""
    u = rng.random()
    if spec.exact:
        target = (1 - Fraction(u)) * spec.s1
    else:
        target = (1.0 - u) * spec.s1
    # наименьшее k с r_{k+1} < target
    if spec.remainder(1) < target:
        return 0
    lo, hi = 0, 1
    while spec.remainder(hi + 1) >= target:
        lo, hi = hi, hi * 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if spec.remainder(mid + 1) >= target:
            lo = mid
        else:
            hi = mid
    return hi


class LetterSource(ABC):
    """Расширяемый по требованию буфер букв"""

    def __init__(self):
        self._letters = bytearray()

    @abstractmethod
    def ensure(self, length: int) -> None:
        pass

    def __getitem__(self, index: int) -> int:
        if index >= len(self._letters):
            self.ensure(index + 1)
        return self._letters[index]

    def __len__(self) -> int:
        return len(self._letters)

    def take(self, n: int) -> bytes:
        self.ensure(n)
        return bytes(self._letters[:n])


class FixedLetters(LetterSource):
    """Заданное конечное слово; продлить его нельзя"""

    def __init__(self, word: Union[Word, str]):
        super().__init__()
        if isinstance(word, str):
            word = Word.parse(word)
        self._letters.extend(word.letters)

    def ensure(self, length: int) -> None:
        if length > len(self._letters):
            raise BudgetExceededError(
                f"Запрошено {length} букв, а задано только {len(self._letters)}"
            )


class LetterStream(LetterSource):
    """Стационарный поток букв гребня; генератор PCG64, блоки фиксированного размера"""

    def __init__(self, spec: CombSpec, seed: int, block: int = config.STREAM_BLOCK):
        super().__init__()
        self.spec = spec
        self.seed = seed
        self._block = block
        self._rng = np.random.Generator(np.random.PCG64(seed))
        self.initial_state = initial_context(spec, self._rng)
        self._state = self.initial_state

    def ensure(self, length: int) -> None:
        while len(self._letters) < length:
            self._extend_block()

    def _extend_block(self) -> None:
        draws = self._rng.random(self._block).tolist()
        out = bytearray(self._block)
        state = self._state
        q0 = self.spec.q0_float
        for i, u in enumerate(draws):
            if u < q0(state):
                state += 1
            else:
                out[i] = 1
                state = 0
        self._letters += out
        self._state = state


def sample_stream(spec: CombSpec, seed: int) -> LetterStream:
    return LetterStream(spec, seed)


def count_occurrences(data: bytes, needle: bytes) -> int:
    """Число вхождений с перекрытиями"""
    count = 0
    pos = data.find(needle)
    while pos != -1:
        count += 1
        pos = data.find(needle, pos + 1)
    return count


def pattern_frequency(stream: LetterSource, pattern: Word, letters: int, batches: int = 100) -> Tuple[float, float]:
    """Частота шаблона и стандартная ошибка по методу групповых средних"""
    needle = bytes(pattern.letters)
    size = letters // batches
    data = stream.take(size * batches + len(needle) - 1)
    freqs = np.empty(batches)
    for b in range(batches):
        chunk = data[b * size:(b + 1) * size + len(needle) - 1]
        freqs[b] = count_occurrences(chunk, needle) / size
    return float(freqs.mean()), float(freqs.std(ddof=1) / math.sqrt(batches))
