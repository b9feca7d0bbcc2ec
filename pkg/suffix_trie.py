import logging
from dataclasses import dataclass, field as dataclass_field
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from comb_source import CombSpec, FixedLetters, LetterSource, Word, sample_stream
from config import config
from errors import BudgetExceededError, ConsistencyError

logger = logging.getLogger(__name__)

# None - пусто, >= 0 - внутренний узел, < 0 - лист с суффиксом -value
Child = Optional[int]


class InsertionReport(NamedTuple):
    suffix: int
    leaf_depth: int
    letters_consumed: int


class FrontierExtremes(NamedTuple):
    min_depth: int
    max_depth: int
    shortest_leaf: int


@dataclass(frozen=True)
class TrieStats:
    n: int
    height: int
    saturation: int
    profile: Tuple[int, ...]
    letters_used: int = 0


class Direction:
    """Правое бесконечное слово s, вдоль которого меряется Xₙ(s)"""

    def __init__(self, label: str, prefix: Sequence[int] = (), stream: Optional[LetterSource] = None):
        self.label = label
        self._prefix = tuple(prefix)
        self._stream = stream

    @classmethod
    def spine(cls) -> "Direction":
        """10^∞"""
        return cls("10^inf", prefix=(1,))

    @classmethod
    def prefix_then_zeros(cls, prefix: Union[Word, str]) -> "Direction":
        if isinstance(prefix, str):
            prefix = Word.parse(prefix)
        return cls(f"{prefix}0^inf", prefix=prefix.letters)

    @classmethod
    def fresh_stream(cls, spec: CombSpec, seed: int) -> "Direction":
        return cls(f"stream[{seed}]", stream=sample_stream(spec, seed))

    def letter(self, depth: int) -> int:
        if self._stream is not None:
            return self._stream[depth]
        return self._prefix[depth] if depth < len(self._prefix) else 0

    def __repr__(self) -> str:
        return f"Direction({self.label})"


@dataclass
class BranchProbe:
    """Xₙ(s) по мере роста дерева и T_k(s) = min{n : Xₙ(s) >= k}"""

    direction: Direction
    X_by_n: List[int] = dataclass_field(default_factory=lambda: [0])
    T_by_k: Dict[int, int] = dataclass_field(default_factory=dict)
    node: int = 0
    depth: int = 0

    @property
    def X(self) -> int:
        return self.X_by_n[-1]


class SuffixTrie:
    """Суффиксное дерево первых n суффиксов одного растущего слова.

    Корень - внутренний узел глубины 0, узел глубины j соответствует префиксу длины j.
    Суффикс i начинается с буквы i (нумерация с 1). Узлы хранят только индексы,
    буквы читаются из общего буфера источника.
    """

    def __init__(self, source: LetterSource, letter_cap: int = config.LETTER_CAP):
        self.source = source
        self.letter_cap = letter_cap
        self._children: List[List[Child]] = [[None, None]]
        self._profile: List[int] = [1]
        self.n = 0
        self.height = 0
        self.saturation = 0
        self.letters_used = 0
        self._probes: List[BranchProbe] = []

    @classmethod
    def from_word(cls, word: Union[Word, str], letter_cap: int = config.LETTER_CAP) -> "SuffixTrie":
        return cls(FixedLetters(word), letter_cap=letter_cap)

    @property
    def profile(self) -> Tuple[int, ...]:
        return tuple(self._profile)

    def child(self, node: int, letter: int) -> Child:
        return self._children[node][letter]

    def _letter(self, index: int) -> int:
        if index >= self.letter_cap:
            raise BudgetExceededError(f"Ветвь дерева требует больше {self.letter_cap} букв")
        if index >= self.letters_used:
            self.letters_used = index + 1
        return self.source[index]

    def _new_internal(self, depth: int) -> int:
        self._children.append([None, None])
        if depth == len(self._profile):
            self._profile.append(0)
        self._profile[depth] += 1
        if depth > self.height:
            self.height = depth
        return len(self._children) - 1

    def insert_next_suffix(self) -> InsertionReport:
        """Вставляет суффикс n+1; при встрече с листом удлиняет ветвь до первого различия букв"""
        i = self.n + 1
        start = i - 1
        used_before = self.letters_used
        node, depth = 0, 0
        while True:
            letter = self._letter(start + depth)
            child = self._children[node][letter]
            if child is None:
                self._children[node][letter] = -i
                leaf_depth = depth + 1
                break
            if child >= 0:
                node, depth = child, depth + 1
                continue

            # лист другого суффикса становится внутренним узлом
            other = -child - 1
            while True:
                nxt = self._new_internal(depth + 1)
                self._children[node][letter] = nxt
                node, depth = nxt, depth + 1
                letter = self._letter(start + depth)
                theirs = self._letter(other + depth)
                if letter != theirs:
                    self._children[node][theirs] = child
                    self._children[node][letter] = -i
                    leaf_depth = depth + 1
                    break
            break

        self.n = i
        while self.saturation + 1 < len(self._profile) and \
                self._profile[self.saturation + 1] == 2 ** (self.saturation + 1):
            self.saturation += 1
        for probe in self._probes:
            self._advance_probe(probe)
        return InsertionReport(suffix=i, leaf_depth=leaf_depth, letters_consumed=self.letters_used - used_before)

    def grow(self, n: int) -> TrieStats:
        while self.n < n:
            self.insert_next_suffix()
        return self.stats()

    def stats(self) -> TrieStats:
        return TrieStats(
            n=self.n,
            height=self.height,
            saturation=self.saturation,
            profile=tuple(self._profile),
            letters_used=self.letters_used,
        )

    def _walk(self):
        """(узел, глубина) для всех внутренних узлов и (лист, глубина) для листьев"""
        internal: List[Tuple[int, int]] = []
        leaves: List[Tuple[int, int]] = []
        stack = [(0, 0)]
        while stack:
            node, depth = stack.pop()
            internal.append((node, depth))
            for child in self._children[node]:
                if child is None:
                    continue
                if child >= 0:
                    stack.append((child, depth + 1))
                else:
                    leaves.append((-child, depth + 1))
        return internal, leaves

    def recompute_stats(self) -> TrieStats:
        """Статистика полным обходом; расхождение с инкрементальной - ConsistencyError"""
        internal, leaves = self._walk()
        profile = [0] * (max(depth for _, depth in internal) + 1)
        for _, depth in internal:
            profile[depth] += 1
        saturation = 0
        while saturation + 1 < len(profile) and profile[saturation + 1] == 2 ** (saturation + 1):
            saturation += 1
        recomputed = TrieStats(
            n=len(leaves),
            height=len(profile) - 1,
            saturation=saturation,
            profile=tuple(profile),
            letters_used=self.letters_used,
        )
        if sorted(suffix for suffix, _ in leaves) != list(range(1, self.n + 1)):
            raise ConsistencyError(f"Листья дерева не совпадают с суффиксами 1..{self.n}")
        if recomputed != self.stats():
            raise ConsistencyError(f"Инкрементальная статистика {self.stats()} != {recomputed}")
        return recomputed

    def leaf_paths(self) -> Dict[int, str]:
        """Суффикс -> метка пути до его листа"""
        paths: Dict[int, str] = {}
        stack = [(0, "")]
        while stack:
            node, path = stack.pop()
            for letter, child in enumerate(self._children[node]):
                if child is None:
                    continue
                if child >= 0:
                    stack.append((child, path + str(letter)))
                else:
                    paths[-child] = path + str(letter)
        return paths

    def attach(self, direction: Direction) -> BranchProbe:
        """Подключает зонд: Xₙ(s) записывается после каждой вставки"""
        if self.n:
            raise ValueError("Зонд подключается к пустому дереву, иначе история T_k(s) неизвестна")
        probe = BranchProbe(direction=direction)
        self._probes.append(probe)
        return probe

    def _advance_probe(self, probe: BranchProbe) -> None:
        previous = probe.depth
        while True:
            child = self._children[probe.node][probe.direction.letter(probe.depth)]
            if child is None or child < 0:
                break
            probe.node, probe.depth = child, probe.depth + 1
        for k in range(previous + 1, probe.depth + 1):
            probe.T_by_k[k] = self.n
        probe.X_by_n.append(probe.depth)


def probe_X(trie: SuffixTrie, direction: Direction) -> int:
    """Глубина самого глубокого внутреннего узла на пути s (0, если это корень)"""
    node, depth = 0, 0
    while True:
        child = trie.child(node, direction.letter(depth))
        if child is None or child < 0:
            return depth
        node, depth = child, depth + 1


def probe_T(probe: BranchProbe, k: int) -> Optional[int]:
    """Первое n с Xₙ(s) >= k; None, если глубина k еще не достигнута"""
    if k < 1:
        raise ValueError(f"k должно быть >= 1, получено {k}")
    return probe.T_by_k.get(k)


def duality_violations(probe: BranchProbe) -> List[Tuple[int, int]]:
    """Пары (n, k), на которых нарушено Xₙ(s) >= k ⟺ T_k(s) <= n"""
    X = np.asarray(probe.X_by_n[1:], dtype=np.int64)
    ns = np.arange(1, len(X) + 1)
    violations: List[Tuple[int, int]] = []
    top = int(X.max()) if len(X) else 0
    for k in range(1, top + 2):
        reached = X >= k
        T = probe.T_by_k.get(k)
        expected = ns >= T if T is not None else np.zeros(len(X), dtype=bool)
        for n in ns[reached != expected]:
            violations.append((int(n), k))
    return violations


def frontier_extremes(trie: SuffixTrie) -> FrontierExtremes:
    """Перебор всех путей от корня до границы: min/max Xₙ(s) по направлениям и кратчайший лист"""
    lowest = trie.height
    shortest = None
    stack = [(0, 0)]
    while stack:
        node, depth = stack.pop()
        for child in (trie.child(node, 0), trie.child(node, 1)):
            if child is not None and child >= 0:
                stack.append((child, depth + 1))
                continue
            lowest = min(lowest, depth)
            if child is not None and (shortest is None or depth + 1 < shortest):
                shortest = depth + 1
    return FrontierExtremes(min_depth=lowest, max_depth=trie.height, shortest_leaf=shortest or 0)


@dataclass
class BatchTrie:
    stats: TrieStats
    leaf_paths: Dict[int, str]


def build_batch(letters: Union[LetterSource, Sequence[int], str], n: int) -> BatchTrie:
    """Независимая сборка: рекурсивное разбиение суффиксов 1..n по очередной букве"""
    if isinstance(letters, str):
        letters = Word.parse(letters).letters

    def letter_at(index: int) -> int:
        try:
            return letters[index]
        except IndexError:
            raise BudgetExceededError(f"Для суффиксов 1..{n} не хватает букв (нужна позиция {index + 1})")

    profile = [1]
    paths: Dict[int, str] = {}
    used = 0
    stack: List[Tuple[str, List[int]]] = [("", list(range(1, n + 1)))]
    while stack:
        path, group = stack.pop()
        depth = len(path)
        split: Dict[int, List[int]] = {0: [], 1: []}
        for suffix in group:
            split[letter_at(suffix - 1 + depth)].append(suffix)
            used = max(used, suffix + depth)
        for letter, members in split.items():
            label = path + str(letter)
            if len(members) == 1:
                paths[members[0]] = label
            elif len(members) > 1:
                if depth + 1 == len(profile):
                    profile.append(0)
                profile[depth + 1] += 1
                stack.append((label, members))

    saturation = 0
    while saturation + 1 < len(profile) and profile[saturation + 1] == 2 ** (saturation + 1):
        saturation += 1
    stats = TrieStats(n=n, height=len(profile) - 1, saturation=saturation, profile=tuple(profile), letters_used=used)
    return BatchTrie(stats=stats, leaf_paths=paths)
