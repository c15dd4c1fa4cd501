"""Densities of abelianization pullbacks and of test elements in F_k.

Exact series are built from a :class:`~freevis.spectrum.CountTable`:
s(n) is the fraction of the sphere of radius n lying in the target set,
Q(n) = (s(n-1) + s(n))/2 is the annular quantity and the ball fraction
counts words of length 1..n.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable

import numpy as np

from .errors import ResourceBudgetError
from .lattice import INFINITY, GcdClass, GcdClassSet, gcd_array, gcd_class, zeta
from .spectrum import CountTable, walk_layers
from .words import Word, abelianize, enumerate_sphere, primitive_root, sphere_size

ENUMERATION_LIMIT = 14


def is_visible_word(w: Word) -> bool:
    return gcd_class(abelianize(w)) == 1


def is_t_visible_word(w: Word, t: int) -> bool:
    if t < 1:
        raise ValueError("t must be a positive integer")
    return gcd_class(abelianize(w)) == t


@dataclass(frozen=True)
class TestElementVerdict:
    is_test: bool
    reason: str  # "visible-root" (not test) or "non-visible-root" (test)
    root: Word
    exponent: int
    root_gcd: GcdClass

    def __bool__(self) -> bool:
        return self.is_test


def is_test_element_rank2(w: Word) -> TestElementVerdict:
    """Decide whether w ∈ F(a, b) is a test element.

    A word that is not a proper power is a test element exactly when the
    gcd of its exponent sums differs from 1 (gcd(0, 0) counts as infinite).
    A proper power u^t lies in a proper retract iff u does, so the verdict
    is read off the primitive root u.
    """
    if w.rank != 2:
        raise ValueError("the test-element classifier is only valid in rank 2")
    if w.is_identity():
        raise ValueError("the identity has no test-element verdict")
    root, t = primitive_root(w)
    g = gcd_class(abelianize(root))
    if g == 1:
        return TestElementVerdict(False, "visible-root", root, t, g)
    return TestElementVerdict(True, "non-visible-root", root, t, g)


# ---------------------------------------------------------------- series


@dataclass
class DensitySeries:
    """Exact sphere counts of a target set for n = 1..n_max."""

    k: int
    target: str
    hits: list[int]  # hits[n] = γ(n, X); hits[0] unused
    limit: float | None = None
    meta: dict = field(default_factory=dict)

    @property
    def n_max(self) -> int:
        return len(self.hits) - 1

    def _check(self, n: int, lo: int) -> None:
        if not lo <= n <= self.n_max:
            raise ValueError(f"n={n} outside [{lo}, {self.n_max}]")

    def s(self, n: int) -> Fraction:
        self._check(n, 1)
        return Fraction(self.hits[n], sphere_size(self.k, n))

    def Q(self, n: int) -> Fraction:
        self._check(n, 2)
        return (self.s(n - 1) + self.s(n)) / 2

    def ball(self, n: int) -> Fraction:
        self._check(n, 1)
        num = sum(self.hits[1 : n + 1])
        den = sum(sphere_size(self.k, m) for m in range(1, n + 1))
        return Fraction(num, den)

    def rows(self) -> list[dict]:
        out = []
        num = den = 0
        for n in range(1, self.n_max + 1):
            num += self.hits[n]
            den += sphere_size(self.k, n)
            out.append({
                "n": n,
                "s": self.s(n),
                "Q": self.Q(n) if n >= 2 else None,
                "ball": Fraction(num, den),
                "limit": self.limit,
            })
        return out


def _level_gcds(table: CountTable, n: int) -> np.ndarray:
    return gcd_array(table.coords(n))


def spherical_series(table: CountTable, classes: GcdClassSet, n_max: int | None = None,
                     limit: float | None = None) -> DensitySeries:
    """Exact s(n) for the pullback of ``{z : gcd_class(z) ∈ classes}``."""
    n_max = table.n_max if n_max is None else n_max
    if n_max > table.n_max:
        raise ValueError(f"table covers n <= {table.n_max}, asked for {n_max}")
    hits = [0]
    for n in range(1, n_max + 1):
        hits.append(table.masked_sum(n, classes.mask(_level_gcds(table, n))))
    return DensitySeries(table.k, f"gcd class in {classes}", hits, limit)


def visible_series(table: CountTable, t: int = 1, n_max: int | None = None) -> DensitySeries:
    series = spherical_series(table, GcdClassSet.of(t), n_max, limit=1.0 / (t**table.k * zeta(table.k)))
    series.target = "visible" if t == 1 else f"{t}-visible"
    return series


# ---------------------------------------------------------------- proper powers


def cyclically_reduced_count(k: int, m: int) -> int:
    """Cyclically reduced words of length m ≥ 1: (2k-1)^m + 1 + (k-1)(1 + (-1)^m)."""
    if m < 1:
        raise ValueError("m must be positive")
    return (2 * k - 1) ** m + 1 + (k - 1) * (1 + (-1) ** m)


def _mobius(n: int) -> int:
    result, p = 1, 2
    while p * p <= n:
        if n % p == 0:
            n //= p
            if n % p == 0:
                return 0
            result = -result
        p += 1
    return -result if n > 1 else result


def primitive_cyclic_count(k: int, m: int) -> int:
    """Cyclically reduced words of length m that are not proper powers (Möbius inversion)."""
    return sum(_mobius(m // d) * cyclically_reduced_count(k, d)
               for d in range(1, m + 1) if m % d == 0)


def _conjugator_count(k: int, j: int) -> int:
    """Reduced g of length j whose last letter avoids two fixed distinct letters."""
    return 1 if j == 0 else (2 * k - 2) * (2 * k - 1) ** (j - 1)


def _conjugated_powers(k: int, n: int, core_count: Callable[[int], int]) -> int:
    """#{g c^t g^{-1} of length n : t ≥ 2, c an admissible primitive cyclic core}.

    Each proper power has a unique such normal form with |w| = 2|g| + t|c|.
    """
    total = 0
    for t in range(2, n + 1):
        for m in range(1, n // t + 1):
            rest = n - t * m
            if rest % 2 == 0:
                total += core_count(m) * _conjugator_count(k, rest // 2)
    return total


def proper_power_count(k: int, n: int, method: str = "structural") -> int:
    """Number of proper powers among reduced words of length n."""
    if n < 1:
        raise ValueError("n must be positive")
    if method == "structural":
        return _conjugated_powers(k, n, lambda m: primitive_cyclic_count(k, m))
    if method == "enumerate":
        if n > ENUMERATION_LIMIT:
            raise ResourceBudgetError(f"enumeration limited to n <= {ENUMERATION_LIMIT}")
        return sum(1 for w in enumerate_sphere(k, n) if primitive_root(w)[1] > 1)
    raise ValueError(f"unknown method {method!r}")


def cyclic_class_counts(k: int, m_max: int, classes: GcdClassSet) -> list[int]:
    """counts[m] = #{cyclically reduced c, |c| = m, gcd_class(c̄) ∈ classes}.

    The DP runs with the first letter fixed to a_1; signed coordinate
    permutations act transitively on letters and preserve both cyclic
    reduction and gcd classes, so the total is 2k times that.
    """
    counts = [0] * (m_max + 1)
    if m_max < 1:
        return counts
    banned_last = k  # code of a_1^{-1}
    for m, layers in walk_layers(k, m_max, first=[0]):
        axis = np.arange(-m, m + 1, dtype=np.int64)
        pts = np.stack(np.meshgrid(*([axis] * k), indexing="ij"), axis=-1)
        mask = classes.mask(gcd_array(pts))
        ok = sum(int(layers[x][mask].sum()) for x in range(2 * k) if x != banned_last)
        counts[m] = 2 * k * ok
    return counts


def powers_with_visible_root(k: int, n_max: int) -> list[int]:
    """out[n] = #{proper powers of length n whose primitive root is visible}.

    A cyclic core with visible image cannot itself be a proper power, so
    every cyclically reduced visible word is an admissible core.
    """
    cores = cyclic_class_counts(k, n_max // 2, GcdClassSet.of(1))
    return [0] + [_conjugated_powers(k, n, lambda m: cores[m]) for n in range(1, n_max + 1)]


def test_element_series(n_max: int, mode: str = "hybrid", table: CountTable | None = None,
                        progress: Callable[[int], None] | None = None) -> DensitySeries:
    """Exact sphere counts of test elements in F(a, b).

    ``exact`` classifies every enumerated word (n_max ≤ 14).  ``hybrid``
    counts words with non-unit gcd from the table and removes the proper
    powers whose root is visible.
    """
    limit = 1 - 6 / math.pi**2
    if mode == "exact":
        if n_max > ENUMERATION_LIMIT:
            raise ResourceBudgetError(f"exact mode enumerates spheres; n_max must be <= {ENUMERATION_LIMIT}")
        hits = [0]
        for n in range(1, n_max + 1):
            hits.append(sum(1 for w in enumerate_sphere(2, n) if is_test_element_rank2(w).is_test))
            if progress is not None:
                progress(n)
        return DensitySeries(2, "test elements", hits, limit, {"mode": "exact"})
    if mode != "hybrid":
        raise ValueError(f"unknown mode {mode!r}")
    if table is None:
        from .spectrum import build_count_table
        table = build_count_table(2, n_max)
    if table.k != 2:
        raise ValueError("test elements are only classified in rank 2")
    base = spherical_series(table, GcdClassSet.at_least(2, infinity=True), n_max)
    subtract = powers_with_visible_root(2, n_max)
    hits = [h - s for h, s in zip(base.hits, subtract)]
    return DensitySeries(2, "test elements", hits, limit, {"mode": "hybrid"})


def compare_bounds(k: int, delta: float) -> tuple[float, float]:
    """Liminf/limsup bounds on ball density given annular density delta."""
    if not 0 <= delta <= 1:
        raise ValueError("delta must lie in [0, 1]")
    c = (4 * k - 4) / (2 * k - 1) ** 2
    return c * delta, 1 - c * (1 - delta)


def expected_gcd_series(table: CountTable, n_max: int | None = None) -> list[tuple[int, Fraction, Fraction]]:
    """``(n, T'_n, T_n)`` for n = 1..n_max, where T'_n is the mean coordinate gcd
    over the sphere (0 for the zero vector) and T_n = (T'_{n-1} + T'_n)/2."""
    n_max = table.n_max if n_max is None else n_max
    if n_max > table.n_max:
        raise ValueError(f"table covers n <= {table.n_max}, asked for {n_max}")
    out = []
    prev = Fraction(0)  # sphere 0 is the identity, T = 0
    for n in range(1, n_max + 1):
        g = _level_gcds(table, n)
        cur = Fraction(table.masked_sum(n, g > 0, g), sphere_size(table.k, n))
        out.append((n, cur, (prev + cur) / 2))
        prev = cur
    return out


def classify_sphere(n: int, k: int = 2, predicate: Callable[[Word], bool] | None = None) -> int:
    """Count words on the sphere satisfying ``predicate`` by brute force."""
    predicate = predicate or (lambda w: is_test_element_rank2(w).is_test)
    if n > ENUMERATION_LIMIT:
        raise ResourceBudgetError(f"enumeration limited to n <= {ENUMERATION_LIMIT}")
    return sum(1 for w in enumerate_sphere(k, n) if predicate(w))


def series_by_enumeration(k: int, n_max: int, predicate: Callable[[Word], bool], target: str = "") -> DensitySeries:
    hits = [0] + [classify_sphere(n, k, predicate) for n in range(1, n_max + 1)]
    return DensitySeries(k, target, hits)


def census(words: Iterable[Word]) -> dict[GcdClass, int]:
    out: dict[GcdClass, int] = {}
    for w in words:
        g = gcd_class(abelianize(w))
        out[g] = out.get(g, 0) + 1
    return out
