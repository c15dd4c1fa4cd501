"""Exact distribution of the abelianization over spheres of F_k.

``N_n(z)`` counts reduced words of length n whose exponent-sum vector is z.
Counts are Python integers held in numpy object arrays; level n lives on
the box [-n, n]^k with z stored at index z + n.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterator, Sequence, TextIO

import numpy as np

from .errors import ResourceBudgetError, default_budget
from .words import sphere_size


def _steps(k: int) -> list[tuple[int, ...]]:
    """Unit vector of each letter code: code i < k is a_{i+1}, code i + k its inverse."""
    out = []
    for sgn in (1, -1):
        for i in range(k):
            e = [0] * k
            e[i] = sgn
            out.append(tuple(e))
    return out


def _inverse_code(x: int, k: int) -> int:
    return (x + k) % (2 * k)


def estimate_cells(k: int, n_max: int) -> int:
    """Object-array cells held by a table: every marginal plus two layer generations."""
    return sum((2 * n + 1) ** k for n in range(n_max + 1)) + 4 * k * (2 * n_max + 1) ** k


def _grow(arr: np.ndarray, step: Sequence[int], n: int) -> np.ndarray:
    """Move a level-(n-1) array into the level-n box, translated by ``step``."""
    k = arr.ndim
    out = np.zeros((2 * n + 1,) * k, dtype=object)
    out[tuple(slice(1 + e, 1 + e + 2 * n - 1) for e in step)] = arr
    return out


def walk_layers(k: int, n_max: int, first: Sequence[int] | None = None) -> Iterator[tuple[int, list[np.ndarray]]]:
    """Yield ``(n, layers)`` for n = 1..n_max, where ``layers[x][z + n]`` counts
    reduced words of length n ending in letter code x with abelianization z.

    ``first`` restricts the first letter to the given codes.
    """
    steps = _steps(k)
    codes = range(2 * k)
    first = set(codes if first is None else first)
    layers = []
    for x in codes:
        a = np.zeros((3,) * k, dtype=object)
        if x in first:
            a[tuple(1 + e for e in steps[x])] = 1
        layers.append(a)
    yield 1, layers
    for n in range(2, n_max + 1):
        total = layers[0].copy()
        for a in layers[1:]:
            total += a
        # words ending in x extend any word not ending in x^{-1}
        layers = [_grow(total - layers[_inverse_code(x, k)], steps[x], n) for x in codes]
        yield n, layers


@dataclass(frozen=True)
class CountTable:
    """Marginal counts N_n(z) for 0 ≤ n ≤ n_max."""

    k: int
    n_max: int
    levels: tuple[np.ndarray, ...] = field(repr=False)

    def level(self, n: int) -> np.ndarray:
        self._check(n, 0)
        return self.levels[n]

    def _check(self, n: int, lo: int) -> None:
        if not lo <= n <= self.n_max:
            raise ValueError(f"n={n} outside [{lo}, {self.n_max}]")

    def count(self, n: int, z: Sequence[int]) -> int:
        self._check(n, 0)
        if len(z) != self.k:
            raise ValueError("dimension mismatch")
        if any(abs(c) > n for c in z):
            return 0
        return int(self.levels[n][tuple(c + n for c in z)])

    def coords(self, n: int) -> np.ndarray:
        """Integer array of shape (2n+1,)*k + (k,) holding the lattice point of each cell."""
        axis = np.arange(-n, n + 1, dtype=np.int64)
        return np.stack(np.meshgrid(*([axis] * self.k), indexing="ij"), axis=-1)

    def support(self, n: int) -> Iterator[tuple[tuple[int, ...], int]]:
        arr = self.level(n)
        for idx in zip(*np.nonzero(arr != 0)):
            yield tuple(int(i) - n for i in idx), int(arr[idx])

    def sphere_total(self, n: int) -> int:
        return int(self.level(n).sum())

    def masked_sum(self, n: int, mask: np.ndarray, weights: np.ndarray | None = None) -> int:
        """Exact Σ N_n(z)·weight(z) over cells where ``mask`` holds."""
        arr = self.level(n)
        if weights is None:
            return int(arr[mask].sum())
        return int((arr[mask] * weights[mask].astype(object)).sum())


def build_count_table(k: int, n_max: int, budget: int | None = None,
                      progress: Callable[[int], None] | None = None) -> CountTable:
    """Run the non-backtracking DP up to length ``n_max``.

    Raises ResourceBudgetError when the estimated number of stored cells
    exceeds ``budget`` (default from FREEVIS_MEMORY_BUDGET).
    """
    if k < 2:
        raise ValueError("rank must be at least 2")
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    budget = default_budget() if budget is None else budget
    cells = estimate_cells(k, n_max)
    if cells > budget:
        raise ResourceBudgetError(f"count table k={k}, n_max={n_max} needs ~{cells} cells > budget {budget}")
    identity = np.ones((1,) * k, dtype=object)
    levels = [identity]
    for n, layers in walk_layers(k, n_max):
        marginal = layers[0].copy()
        for a in layers[1:]:
            marginal += a
        levels.append(marginal)
        if progress is not None:
            progress(n)
    return CountTable(k, n_max, tuple(levels))


def histogram_by_enumeration(k: int, n: int) -> dict[tuple[int, ...], int]:
    """Abelianization histogram over the enumerated sphere; the DP's oracle."""
    from .words import abelianize, enumerate_sphere

    hist: dict[tuple[int, ...], int] = {}
    for w in enumerate_sphere(k, n):
        z = abelianize(w)
        hist[z] = hist.get(z, 0) + 1
    return hist


def dump_marginals_csv(table: CountTable, n: int, fh: TextIO) -> None:
    """Write the nonzero N_n(z) as CSV rows ``z_1,...,z_k,count``."""
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow([f"z_{i + 1}" for i in range(table.k)] + ["count"])
    for z, c in table.support(n):
        writer.writerow([*z, c])


# ---------------------------------------------------------------- p_n


def pn_value(table: CountTable, n: int, z: Sequence[int]) -> Fraction:
    """p_n at the lattice point z: half-sum of the sphere-(n-1) and sphere-n frequencies."""
    table._check(n, 2)
    k = table.k
    return (Fraction(table.count(n - 1, z), 2 * sphere_size(k, n - 1))
            + Fraction(table.count(n, z), 2 * sphere_size(k, n)))


def pn_numerators(table: CountTable, n: int) -> tuple[np.ndarray, int]:
    """Integer array A on the level-n box and denominator D with p_n(z) = A[z+n] / D."""
    table._check(n, 2)
    k = table.k
    s_prev, s_cur = sphere_size(k, n - 1), sphere_size(k, n)
    # s_cur = (2k-1) s_prev for n >= 2
    ratio = s_cur // s_prev
    prev = np.zeros((2 * n + 1,) * k, dtype=object)
    prev[(slice(1, 2 * n),) * k] = table.level(n - 1)
    return prev * ratio + table.level(n), 2 * s_cur


def pn_array(table: CountTable, n: int) -> np.ndarray:
    """Float p_n on the level-n box."""
    num, den = pn_numerators(table, n)
    return np.array([c / den for c in num.ravel()], dtype=float).reshape(num.shape)


def second_moment(table: CountTable, n: int) -> Fraction:
    """E||z||² for z the abelianization of a uniform word of length n."""
    table._check(n, 1)
    sq = (table.coords(n) ** 2).sum(axis=-1)
    return Fraction(table.masked_sum(n, table.level(n) != 0, sq), sphere_size(table.k, n))


def normal_density(k: int, x: Sequence[float] | np.ndarray, sigma2: float | None = None) -> float | np.ndarray:
    """Isotropic Gaussian density (2π σ²)^(-k/2) exp(-||x||²/(2σ²)); σ² defaults to 1/(k-1).

    ``x`` may be a single k-vector or an array whose last axis has length k.
    """
    if sigma2 is None:
        sigma2 = 1.0 / (k - 1)
    if sigma2 <= 0:
        raise ValueError("sigma2 must be positive")
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != k:
        raise ValueError("last axis of x must have length k")
    r2 = (x * x).sum(axis=-1)
    val = (2 * math.pi * sigma2) ** (-k / 2) * np.exp(-r2 / (2 * sigma2))
    return float(val) if val.ndim == 0 else val


def llt_sup_error(table: CountTable, n: int, sigma2: float | None = None) -> float:
    """max over ||z||_1 ≤ n of |n^{k/2} p_n(z) - normal_density(z/√n)|."""
    k = table.k
    pn = pn_array(table, n)
    pts = table.coords(n)
    inside = np.abs(pts).sum(axis=-1) <= n
    gauss = normal_density(k, pts / math.sqrt(n), sigma2)
    err = np.abs(n ** (k / 2) * pn - gauss)
    return float(err[inside].max())


def tail_mass(table: CountTable, n: int, c: float) -> Fraction:
    """Σ p_n(z) over lattice z with ||z/√n||_2 ≥ c, exactly."""
    if c < 0:
        raise ValueError("c must be nonnegative")
    num, den = pn_numerators(table, n)
    sq = (table.coords(n) ** 2).sum(axis=-1)
    threshold = Fraction(c) ** 2 * n
    # ||z||² is an integer, so compare against the ceiling of c² n
    far = sq >= math.ceil(threshold)
    return Fraction(int(num[far].sum()), den)
