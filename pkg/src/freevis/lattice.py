"""Visible and t-visible points of Z^k and their densities.

The gcd of the zero vector is taken to be infinite, so the origin belongs
to no U_t with finite t.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache, reduce as _fold
from typing import Callable, Iterable, Iterator, Sequence

import numpy as np

from .errors import ResourceBudgetError, default_budget

INFINITY = math.inf
ZETA2 = math.pi**2 / 6

GcdClass = int | float  # a positive int, or INFINITY for the origin


def gcd_class(z: Sequence[int]) -> GcdClass:
    g = _fold(math.gcd, (abs(int(c)) for c in z), 0)
    return INFINITY if g == 0 else g


def is_visible(z: Sequence[int]) -> bool:
    return gcd_class(z) == 1


def is_t_visible(z: Sequence[int], t: int) -> bool:
    if t < 1:
        raise ValueError("t must be a positive integer")
    return gcd_class(z) == t


def gcd_array(points: np.ndarray) -> np.ndarray:
    """Row-wise gcd of an (..., k) integer array; 0 marks the origin."""
    return np.gcd.reduce(np.abs(points), axis=-1)


@dataclass(frozen=True)
class GcdClassSet:
    """A set of gcd classes: positive integers plus optionally INFINITY.

    Three shapes: an explicit finite set ``members``; a cofinite set (all
    positive integers except ``members``, with ``cofinite=True``); or an
    arbitrary predicate ``rule``.  ``bound`` is a truncation hint for sums
    over rule-based sets.
    """

    members: frozenset[int] | None = None
    rule: Callable[[int], bool] | None = field(default=None, compare=False)
    infinity: bool = False
    cofinite: bool = False
    label: str = ""
    bound: int | None = None

    def __post_init__(self) -> None:
        if (self.members is None) == (self.rule is None):
            raise ValueError("give exactly one of members or rule")
        if self.members is not None and any(t < 1 for t in self.members):
            raise ValueError("gcd classes are positive integers")
        if self.cofinite and self.members is None:
            raise ValueError("a cofinite set is described by its excluded members")

    @classmethod
    def of(cls, *ts: int, infinity: bool = False) -> GcdClassSet:
        label = "{" + ",".join(str(t) for t in sorted(ts)) + (",inf" if infinity else "") + "}"
        return cls(members=frozenset(ts), infinity=infinity, label=label)

    @classmethod
    def all_except(cls, *ts: int, infinity: bool = False) -> GcdClassSet:
        label = "t not in {" + ",".join(str(t) for t in sorted(ts)) + "}" + (" and inf" if infinity else "")
        return cls(members=frozenset(ts), cofinite=True, infinity=infinity, label=label)

    @classmethod
    def all_finite(cls) -> GcdClassSet:
        return cls(members=frozenset(), cofinite=True, label="all t>=1")

    @classmethod
    def at_least(cls, t0: int, infinity: bool = False) -> GcdClassSet:
        return cls(members=frozenset(range(1, t0)), cofinite=True, infinity=infinity,
                   label=f"t>={t0}" + (" and inf" if infinity else ""))

    @classmethod
    def where(cls, rule: Callable[[int], bool], label: str = "custom",
              infinity: bool = False, bound: int | None = None) -> GcdClassSet:
        return cls(rule=rule, infinity=infinity, label=label, bound=bound)

    @property
    def is_finite(self) -> bool:
        return self.members is not None and not self.cofinite

    def __contains__(self, t: GcdClass) -> bool:
        if t == INFINITY:
            return self.infinity
        if self.members is not None:
            return (t in self.members) != self.cofinite
        return bool(self.rule(int(t)))

    def finite_members(self, upto: int) -> Iterator[int]:
        if self.is_finite:
            yield from sorted(t for t in self.members if t <= upto)
        else:
            yield from (t for t in range(1, upto + 1) if t in self)

    def complement(self) -> GcdClassSet:
        if self.members is not None:
            return GcdClassSet(members=self.members, cofinite=not self.cofinite,
                               infinity=not self.infinity, label=f"not {self.label}")
        inner = self
        return GcdClassSet(rule=lambda t: t not in inner, infinity=not self.infinity,
                           label=f"not {self.label}", bound=self.bound)

    def mask(self, gcds: np.ndarray) -> np.ndarray:
        """Membership of each entry of a gcd array (0 = origin = INFINITY)."""
        gcds = np.asarray(gcds)
        if self.members is not None:
            listed = np.isin(gcds, np.fromiter(self.members, dtype=np.int64, count=len(self.members)))
            out = (~listed & (gcds != 0)) if self.cofinite else listed
        else:
            values, inverse = np.unique(gcds, return_inverse=True)
            hit = np.array([v != 0 and bool(self.rule(int(v))) for v in values], dtype=bool)
            out = hit[inverse].reshape(gcds.shape)
        if self.infinity:
            out |= gcds == 0
        return out

    def __str__(self) -> str:
        return self.label


@lru_cache(maxsize=64)
def zeta(k: int, eps: float = 1e-12) -> float:
    """ζ(k) for integer k ≥ 2 with absolute error at most eps.

    Partial sum up to N plus the midpoint of the integral bounds
    [(N+1)^(1-k), N^(1-k)]/(k-1) on the tail; the half-width of that
    interval is below N^-k / 2.
    """
    if k < 2:
        raise ValueError("zeta needs an integer k >= 2")
    if eps <= 0:
        raise ValueError("eps must be positive")
    n_terms = max(1, math.ceil((2 * eps) ** (-1.0 / k)))
    partial = math.fsum(n ** -float(k) for n in range(n_terms, 0, -1))
    lo = (n_terms + 1) ** (1 - k) / (k - 1)
    hi = n_terms ** (1 - k) / (k - 1)
    return partial + (lo + hi) / 2


def theoretical_density_Ut(k: int, t: int) -> float:
    """Density 1/(t^k ζ(k)) of points whose coordinate gcd is exactly t."""
    if t < 1:
        raise ValueError("t must be a positive integer")
    return 1.0 / (t**k * zeta(k))


def gcd_class_set_density(k: int, classes: GcdClassSet, eps: float | None = None) -> float:
    """Σ_{t ∈ classes} 1/(t^k ζ(k)).  The origin (INFINITY) contributes nothing.

    Finite and cofinite sets are summed exactly (a cofinite set through
    Σ_t 1/(t^k ζ(k)) = 1).  Rule-based sets are truncated at the first T
    with tail Σ_{t>T} t^-k / ζ(k) < eps (default 1e-6).
    """
    if classes.members is not None:
        listed = math.fsum(1.0 / t**k for t in classes.members) / zeta(k)
        return 1.0 - listed if classes.cofinite else listed
    eps = 1e-6 if eps is None else eps
    if eps <= 0:
        raise ValueError("eps must be positive")
    z = zeta(k)
    # Σ_{t>T} t^-k < T^(1-k)/(k-1)
    cutoff = math.ceil(((k - 1) * z * eps) ** (-1.0 / (k - 1)))
    if classes.bound is not None:
        cutoff = max(cutoff, classes.bound)
    if cutoff > 10**7:
        raise ValueError(f"eps={eps} needs {cutoff} terms; pass a larger eps")
    return math.fsum(1.0 / t**k for t in classes.finite_members(cutoff)) / z


def truncated_tail(k: int, upto: int) -> float:
    """Density of classes t > upto, i.e. 1 - Σ_{t ≤ upto} 1/(t^k ζ(k))."""
    return 1.0 - math.fsum(1.0 / t**k for t in range(1, upto + 1)) / zeta(k)


# ---------------------------------------------------------------- counting


def _norm_mask(points: np.ndarray, p: float, r: float, strict: bool = False) -> np.ndarray:
    a = np.abs(points)
    if p == INFINITY:
        norm = a.max(axis=-1)
        return norm < r if strict else norm <= r
    if p == 1:
        norm = a.sum(axis=-1)
        return norm < r if strict else norm <= r
    if p == 2:
        sq = (a * a).sum(axis=-1)
        return sq < r * r if strict else sq <= r * r
    s = (a.astype(float) ** p).sum(axis=-1)
    return s < r**p if strict else s <= r**p


def _slices(k: int, radius: int) -> Iterator[np.ndarray]:
    """Points of [-radius, radius]^k, one hyperplane (fixed first coordinate) at a time."""
    axis = np.arange(-radius, radius + 1, dtype=np.int64)
    if k == 1:
        yield axis[:, None]
        return
    rest = np.stack(np.meshgrid(*([axis] * (k - 1)), indexing="ij"), axis=-1).reshape(-1, k - 1)
    for x in axis:
        yield np.concatenate([np.full((rest.shape[0], 1), x, dtype=np.int64), rest], axis=1)


def _check_budget(k: int, radius: int, budget: int | None) -> None:
    budget = default_budget() if budget is None else budget
    if (2 * radius + 1) ** k > budget:
        raise ResourceBudgetError(
            f"box scan of (2*{radius}+1)^{k} points exceeds budget {budget}")


def class_census(k: int, r: float, p: float = INFINITY, budget: int | None = None) -> dict[GcdClass, int]:
    """Exact number of points of each gcd class in the closed p-ball of radius r."""
    radius = math.floor(r)
    _check_budget(k, radius, budget)
    census: dict[GcdClass, int] = {}
    for pts in _slices(k, radius):
        g = gcd_array(pts[_norm_mask(pts, p, r)])
        values, counts = np.unique(g, return_counts=True)
        for v, c in zip(values.tolist(), counts.tolist()):
            key = INFINITY if v == 0 else v
            census[key] = census.get(key, 0) + c
    return census


def _scan_count(k: int, p: float, r: float, classes: GcdClassSet, budget: int | None) -> tuple[int, int]:
    radius = math.floor(r)
    _check_budget(k, radius, budget)
    hits = total = 0
    for pts in _slices(k, radius):
        inside = pts[_norm_mask(pts, p, r)]
        total += len(inside)
        hits += int(classes.mask(gcd_array(inside)).sum())
    return hits, total


def mobius_table(m: int) -> list[int]:
    """μ(0..m) by a linear sieve; index 0 unused."""
    mu = [1] * (m + 1)
    if m >= 0:
        mu[0] = 0
    is_comp = [False] * (m + 1)
    primes: list[int] = []
    for i in range(2, m + 1):
        if not is_comp[i]:
            primes.append(i)
            mu[i] = -1
        for q in primes:
            if i * q > m:
                break
            is_comp[i * q] = True
            if i % q == 0:
                mu[i * q] = 0
                break
            mu[i * q] = -mu[i]
    return mu


def visible_in_cube(k: int, radius: int, mu: Sequence[int] | None = None) -> int:
    """#{z ∈ [-R, R]^k : gcd(z) = 1} = Σ_d μ(d)((2⌊R/d⌋+1)^k - 1)."""
    if radius < 1:
        return 0
    mu = mobius_table(radius) if mu is None else mu
    return sum(mu[d] * ((2 * (radius // d) + 1) ** k - 1) for d in range(1, radius + 1) if mu[d])


def _mobius_count(k: int, r: float, classes: GcdClassSet) -> tuple[int, int]:
    radius = math.floor(r)
    total = (2 * radius + 1) ** k
    mu = mobius_table(radius)
    hits = sum(visible_in_cube(k, radius // t, mu) for t in classes.finite_members(radius))
    if classes.infinity:
        hits += 1
    return hits, total


def count_in_ball(k: int, p: float, r: float, classes: GcdClassSet, method: str = "auto",
                  budget: int | None = None) -> tuple[int, int]:
    """Exact ``(hits, total)`` over the closed ball ``||z||_p ≤ r`` in Z^k.

    ``method="scan"`` visits every point of the bounding box.  ``"mobius"``
    (sup-norm only) sums Möbius-inverted cube counts over the classes; the
    test suite checks it against the scan.  ``"auto"`` picks Möbius for the
    sup norm.
    """
    if k < 1:
        raise ValueError("k must be positive")
    if r < 1:
        raise ValueError("radius must be at least 1")
    if p < 1:
        raise ValueError("p must be in [1, inf]")
    if method == "auto":
        method = "mobius" if p == INFINITY else "scan"
    if method == "mobius":
        if p != INFINITY:
            raise ValueError("the Möbius count only handles the sup norm")
        return _mobius_count(k, r, classes)
    if method == "scan":
        return _scan_count(k, p, r, classes, budget)
    raise ValueError(f"unknown method {method!r}")


# ---------------------------------------------------------------- regions


@dataclass(frozen=True)
class Box:
    """Open axis-aligned box ∏ (lower_i, upper_i)."""

    lower: tuple[float, ...]
    upper: tuple[float, ...]

    def volume(self) -> float:
        return math.prod(max(0.0, b - a) for a, b in zip(self.lower, self.upper))


@dataclass(frozen=True)
class PBall:
    """Open p-norm ball of the given radius about the origin."""

    p: float = INFINITY
    radius: float = 1.0

    def volume(self, k: int) -> float:
        if self.p == INFINITY:
            unit = 2.0**k
        else:
            unit = (2 * math.gamma(1 + 1 / self.p)) ** k / math.gamma(1 + k / self.p)
        return unit * self.radius**k


def _region_points(k: int, region: Box | PBall, r: float) -> Iterator[np.ndarray]:
    if isinstance(region, PBall):
        radius = math.floor(r * region.radius)
        for pts in _slices(k, radius):
            yield pts[_norm_mask(pts, region.p, r * region.radius, strict=True)]
    elif isinstance(region, Box):
        if len(region.lower) != k or len(region.upper) != k:
            raise ValueError("box dimension does not match k")
        axes = []
        for a, b in zip(region.lower, region.upper):
            lo, hi = math.floor(a * r) + 1, math.ceil(b * r) - 1
            axes.append(np.arange(lo, hi + 1, dtype=np.int64))
        if any(len(ax) == 0 for ax in axes):
            return
        first, rest = axes[0], axes[1:]
        if rest:
            grid = np.stack(np.meshgrid(*rest, indexing="ij"), axis=-1).reshape(-1, k - 1)
        else:
            grid = np.empty((1, 0), dtype=np.int64)
        for x in first:
            yield np.concatenate([np.full((grid.shape[0], 1), x, dtype=np.int64), grid], axis=1)
    else:
        raise ValueError(f"unsupported region {region!r}")


def region_count(k: int, classes: GcdClassSet, r: float, region: Box | PBall,
                 budget: int | None = None) -> tuple[float, float]:
    """``(#(S ∩ rΩ)/r^k, δ·λ(Ω))`` for an open box or p-ball Ω."""
    if r <= 0:
        raise ValueError("scale must be positive")
    if not isinstance(region, (Box, PBall)):
        raise ValueError(f"unsupported region {region!r}")
    extent = r * (region.radius if isinstance(region, PBall)
                  else max(max(abs(a), abs(b)) for a, b in zip(region.lower, region.upper)))
    _check_budget(k, math.floor(extent), budget)
    hits = 0
    for pts in _region_points(k, region, r):
        hits += int(classes.mask(gcd_array(pts)).sum())
    vol = region.volume(k) if isinstance(region, PBall) else region.volume()
    return hits / r**k, gcd_class_set_density(k, classes) * vol


def even_visible_density(r: float, k: int = 2, method: str = "scan",
                         budget: int | None = None) -> tuple[Fraction, float]:
    """Fraction of points of the closed sup-ball of radius r that are visible
    with even L1 norm, and its limit 1/(3ζ(2)) = 2/π²."""
    if k != 2:
        raise ValueError("even visible density is only implemented for k = 2")
    if r < 1:
        raise ValueError("radius must be at least 1")
    radius = math.floor(r)
    _check_budget(k, radius, budget)
    hits = total = 0
    for pts in _slices(k, radius):
        total += len(pts)
        even = np.abs(pts).sum(axis=1) % 2 == 0
        hits += int(((gcd_array(pts) == 1) & even).sum())
    return Fraction(hits, total), 1.0 / (3 * ZETA2)


@dataclass(frozen=True)
class DensityRow:
    r: float
    hits: int
    total: int
    theoretical: float

    @property
    def empirical(self) -> Fraction:
        return Fraction(self.hits, self.total)

    @property
    def abs_error(self) -> float:
        return abs(float(self.empirical) - self.theoretical)


def density_rows(k: int, classes: GcdClassSet, radii: Iterable[float], p: float = INFINITY,
                 method: str = "auto", budget: int | None = None) -> list[DensityRow]:
    theory = gcd_class_set_density(k, classes)
    rows = []
    for r in radii:
        hits, total = count_in_ball(k, p, r, classes, method=method, budget=budget)
        rows.append(DensityRow(r, hits, total, theory))
    return rows
