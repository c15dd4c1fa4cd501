"""Free group arithmetic on words over a_1^{±1}, ..., a_k^{±1}.

A letter is a nonzero integer: ``+i`` stands for a_i and ``-i`` for its
inverse, so inversion is negation.  A :class:`Word` holds a freely reduced
tuple of letters together with the rank of the ambient free group.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Iterator

ALPHABET = "abcdefghijklmnopqrstuvwxyz"

Letter = int
ExponentVector = tuple[int, ...]


def letter(index: int, sign: int = 1) -> Letter:
    if index < 1 or sign not in (1, -1):
        raise ValueError(f"bad letter ({index}, {sign})")
    return index * sign


def generator_index(x: Letter) -> int:
    return abs(x)


def sign(x: Letter) -> int:
    return 1 if x > 0 else -1


def alphabet(k: int) -> list[Letter]:
    """All 2k letters: a_1..a_k, then their inverses."""
    return [*range(1, k + 1), *range(-1, -k - 1, -1)]


def _check_rank(k: int) -> None:
    if k < 2:
        raise ValueError(f"rank must be at least 2, got {k}")


@dataclass(frozen=True, slots=True)
class Word:
    """A freely reduced word.  Build arbitrary letter sequences with :func:`reduce`."""

    letters: tuple[Letter, ...]
    rank: int = 2

    def __len__(self) -> int:
        return len(self.letters)

    def __iter__(self) -> Iterator[Letter]:
        return iter(self.letters)

    def __mul__(self, other: Word) -> Word:
        if other.rank != self.rank:
            raise ValueError("cannot multiply words of different rank")
        a, b = self.letters, other.letters
        i = 0
        m = min(len(a), len(b))
        while i < m and a[len(a) - 1 - i] == -b[i]:
            i += 1
        return Word(a[: len(a) - i] + b[i:], self.rank)

    def __pow__(self, m: int) -> Word:
        if m < 0:
            return self.inverse() ** (-m)
        result = identity(self.rank)
        base = self
        while m:
            if m & 1:
                result = result * base
            base = base * base
            m >>= 1
        return result

    def inverse(self) -> Word:
        return Word(tuple(-x for x in reversed(self.letters)), self.rank)

    def is_identity(self) -> bool:
        return not self.letters

    def __str__(self) -> str:
        return format_word(self)


def identity(k: int = 2) -> Word:
    return Word((), k)


def reduce(letters: Iterable[Letter], k: int = 2) -> Word:
    """Freely reduce a raw letter sequence (stack cancellation)."""
    _check_rank(k)
    out: list[Letter] = []
    for x in letters:
        if x == 0 or abs(x) > k:
            raise ValueError(f"letter {x} outside the rank-{k} alphabet")
        if out and out[-1] == -x:
            out.pop()
        else:
            out.append(x)
    return Word(tuple(out), k)


def abelianize(w: Word) -> ExponentVector:
    """Exponent sum of each generator."""
    vec = [0] * w.rank
    for x in w.letters:
        if x > 0:
            vec[x - 1] += 1
        else:
            vec[-x - 1] -= 1
    return tuple(vec)


def cyclic_reduce(w: Word) -> tuple[Word, Word]:
    """Split ``w = g c g^{-1}`` with ``c`` cyclically reduced and ``g`` shortest.

    Returns ``(g, c)``.
    """
    s = w.letters
    i, j = 0, len(s) - 1
    while i < j and s[i] == -s[j]:
        i += 1
        j -= 1
    return Word(s[:i], w.rank), Word(s[i : j + 1], w.rank)


def _divisors(m: int) -> list[int]:
    small, large = [], []
    d = 1
    while d * d <= m:
        if m % d == 0:
            small.append(d)
            if d * d != m:
                large.append(m // d)
        d += 1
    return small + large[::-1]


def primitive_root(w: Word) -> tuple[Word, int]:
    """Return ``(u, t)`` with ``w = u^t`` and ``t`` maximal.

    Roots are unique in free groups, and ``u^t`` shares its conjugator with
    ``u``, so it is enough to find the shortest period of the cyclic core.
    """
    if w.is_identity():
        raise ValueError("the identity has no primitive root")
    g, c = cyclic_reduce(w)
    core = c.letters
    m = len(core)
    for d in _divisors(m):
        if core[:d] * (m // d) == core:
            root = Word(g.letters + core[:d] + tuple(-x for x in reversed(g.letters)), w.rank)
            return root, m // d
    raise AssertionError("unreachable: d = m always matches")


def is_proper_power(w: Word) -> bool:
    return not w.is_identity() and primitive_root(w)[1] > 1


def sphere_size(k: int, n: int) -> int:
    """Number of reduced words of length exactly n: 2k(2k-1)^(n-1), and 1 at n = 0."""
    _check_rank(k)
    if n < 0:
        raise ValueError("radius must be nonnegative")
    if n == 0:
        return 1
    return 2 * k * (2 * k - 1) ** (n - 1)


def ball_size(k: int, n: int) -> int:
    """Number of reduced words of length at most n."""
    _check_rank(k)
    if n < 0:
        raise ValueError("radius must be nonnegative")
    # 1 + 2k((2k-1)^n - 1)/(2k-2)
    return 1 + k * ((2 * k - 1) ** n - 1) // (k - 1)


def enumerate_sphere(k: int, n: int) -> Iterator[Word]:
    """Yield every reduced word of length n exactly once (depth-first, no backtracking)."""
    _check_rank(k)
    if n < 0:
        raise ValueError("radius must be nonnegative")
    if n == 0:
        yield Word((), k)
        return
    letters = alphabet(k)
    # successors[x]: letters allowed after x
    successors = {x: [y for y in letters if y != -x] for x in letters}
    prefix: list[Letter] = []
    stack: list[Iterator[Letter]] = [iter(letters)]
    while stack:
        nxt = next(stack[-1], None)
        if nxt is None:
            stack.pop()
            if prefix:
                prefix.pop()
            continue
        prefix.append(nxt)
        if len(prefix) == n:
            yield Word(tuple(prefix), k)
            prefix.pop()
        else:
            stack.append(iter(successors[nxt]))


def enumerate_ball(k: int, n: int) -> Iterator[Word]:
    for m in range(n + 1):
        yield from enumerate_sphere(k, m)


_TOKEN = re.compile(r"\s*([A-Za-z])(?:\^\(?(-?\d+)\)?)?")


def parse_word(text: str, k: int = 2) -> Word:
    """Parse words like ``"abAB"``, ``"a^2 b^-1"`` or ``"1"`` (identity).

    Lowercase letters are generators (a = a_1, b = a_2, ...); uppercase
    letters are inverses.
    """
    _check_rank(k)
    text = text.strip()
    if text in ("", "1"):
        return identity(k)
    raw: list[Letter] = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            if text[pos:].strip() == "":
                break
            raise ValueError(f"cannot parse word {text!r} at position {pos}")
        ch, exp = m.group(1), m.group(2)
        idx = ALPHABET.index(ch.lower()) + 1
        if idx > k:
            raise ValueError(f"letter {ch!r} outside the rank-{k} alphabet")
        x = idx if ch.islower() else -idx
        e = int(exp) if exp is not None else 1
        raw.extend([x if e > 0 else -x] * abs(e))
        pos = m.end()
    return reduce(raw, k)


def format_word(w: Word) -> str:
    if w.is_identity():
        return "1"
    if w.rank > len(ALPHABET):
        return " ".join(str(x) for x in w.letters)
    return "".join(ALPHABET[x - 1] if x > 0 else ALPHABET[-x - 1].upper() for x in w.letters)
