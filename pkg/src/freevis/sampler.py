"""Uniform sampling on spheres of F_k by non-backtracking random walks.

Samples are generated in fixed-size chunks.  Chunk ``j`` of sphere ``s``
draws from ``SeedSequence(seed, spawn_key=(s, j))``, so a run is
reproducible for a given seed regardless of how many workers process the
chunks.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np

from .lattice import GcdClassSet, gcd_array, gcd_class
from .words import Word, abelianize

CHUNK = 1 << 16


def _rng(seed: int | np.random.Generator | None) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _code_to_letter(code: int, k: int) -> int:
    return code + 1 if code < k else -(code - k + 1)


def sample_codes(k: int, n: int, size: int, rng: np.random.Generator) -> np.ndarray:
    """``size`` uniform reduced words of length n as an (n, size) int8 array of letter codes.

    Code i < k is a_{i+1} and code i + k its inverse.  The first letter is
    uniform over 2k codes; each later one is uniform over the 2k - 1 codes
    that do not cancel the previous letter.
    """
    if n < 1:
        return np.empty((0, size), dtype=np.int8)
    inverse = np.array([(x + k) % (2 * k) for x in range(2 * k)], dtype=np.int8)
    codes = np.empty((n, size), dtype=np.int8)
    codes[0] = rng.integers(0, 2 * k, size=size, dtype=np.int8)
    codes[1:] = rng.integers(0, 2 * k - 1, size=(n - 1, size), dtype=np.int8)
    prev = codes[0]
    for i in range(1, n):
        row = codes[i]
        # skip over the forbidden code: r -> r + [r >= inverse(prev)]
        row += row >= inverse.take(prev)
        prev = row
    return codes


def codes_abelian(codes: np.ndarray, k: int) -> np.ndarray:
    z = np.empty((codes.shape[1], k), dtype=np.int64)
    for i in range(k):
        z[:, i] = np.count_nonzero(codes == i, axis=0) - np.count_nonzero(codes == i + k, axis=0)
    return z


def codes_to_words(codes: np.ndarray, k: int) -> list[Word]:
    table = [_code_to_letter(c, k) for c in range(2 * k)]
    return [Word(tuple(table[c] for c in col), k) for col in codes.T.tolist()]


def sample_sphere(k: int, n: int, rng: int | np.random.Generator | None = None) -> Word:
    """One uniform word of length exactly n."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    return codes_to_words(sample_codes(k, n, 1, _rng(rng)), k)[0] if n else Word((), k)


def sample_ball_experiment(k: int, n: int, rng: int | np.random.Generator | None = None) -> Word:
    """Pick a length m uniformly from 0..n, then a uniform word of length m.

    A word of length m is drawn with probability 1/((n+1)·sphere_size(k, m)),
    which is not the uniform distribution on the ball.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    gen = _rng(rng)
    m = int(gen.integers(0, n + 1))
    return sample_sphere(k, m, gen)


@dataclass(frozen=True)
class AbelianPredicate:
    """Word predicate that depends only on the gcd class of the abelianization.

    Such predicates are evaluated on whole batches of exponent vectors.
    """

    classes: GcdClassSet
    name: str

    def __call__(self, w: Word) -> bool:
        return gcd_class(abelianize(w)) in self.classes

    def on_vectors(self, z: np.ndarray) -> np.ndarray:
        return self.classes.mask(gcd_array(z))


VISIBLE = AbelianPredicate(GcdClassSet.of(1), "visible")


def t_visible(t: int) -> AbelianPredicate:
    return AbelianPredicate(GcdClassSet.of(t), f"{t}-visible")


@dataclass(frozen=True)
class SampleEstimate:
    estimate: float
    samples: int
    standard_error: float
    target: str
    n: int
    seed: int | None
    spheres: tuple[int, ...]
    hits: int

    def to_json(self) -> dict:
        d = asdict(self)
        d["se"] = d.pop("standard_error")
        d["predicate"] = d.pop("target")
        d["spheres"] = list(self.spheres)
        return d


def _chunk_hits(args: tuple) -> int:
    k, n, size, seed, key, predicate = args
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))
    codes = sample_codes(k, n, size, rng)
    if hasattr(predicate, "on_vectors"):
        return int(np.count_nonzero(predicate.on_vectors(codes_abelian(codes, k))))
    return sum(1 for w in codes_to_words(codes, k) if predicate(w))


def _sphere_tasks(k: int, n: int, count: int, seed: int, tag: int, predicate, chunk: int) -> list[tuple]:
    tasks = []
    for j, start in enumerate(range(0, count, chunk)):
        tasks.append((k, n, min(chunk, count - start), seed, (tag, j), predicate))
    return tasks


def mc_sphere_estimate(k: int, n: int, predicate: Callable[[Word], bool], samples: int,
                       seed: int = 0, workers: int = 1, chunk: int = CHUNK, name: str | None = None) -> SampleEstimate:
    """Monte Carlo frequency of ``predicate`` on the sphere of radius n."""
    if samples < 1:
        raise ValueError("samples must be positive")
    tasks = _sphere_tasks(k, n, samples, seed, 0, predicate, chunk)
    hits = _run(tasks, workers)
    p = hits / samples
    return SampleEstimate(p, samples, math.sqrt(p * (1 - p) / samples),
                          name or getattr(predicate, "name", getattr(predicate, "__name__", "predicate")),
                          n, seed, (n,), hits)


def mc_annular_estimate(k: int, n: int, predicate: Callable[[Word], bool], samples: int,
                        seed: int = 0, workers: int = 1, chunk: int = CHUNK,
                        name: str | None = None) -> SampleEstimate:
    """Estimate Q(n): half the samples on sphere n-1, half on sphere n.

    With equal allocation the average of the two sphere frequencies is the
    pooled frequency; the reported standard error is sqrt(p(1-p)/samples).
    """
    if n < 2:
        raise ValueError("the annular estimate needs n >= 2")
    if samples < 2 or samples % 2:
        raise ValueError("samples must be a positive even number")
    half = samples // 2
    tasks = (_sphere_tasks(k, n - 1, half, seed, 0, predicate, chunk)
             + _sphere_tasks(k, n, half, seed, 1, predicate, chunk))
    hits = _run(tasks, workers)
    p = hits / samples
    return SampleEstimate(p, samples, math.sqrt(p * (1 - p) / samples),
                          name or getattr(predicate, "name", getattr(predicate, "__name__", "predicate")),
                          n, seed, (n - 1, n), hits)


def _run(tasks: list[tuple], workers: int) -> int:
    if workers <= 1 or len(tasks) == 1:
        return sum(_chunk_hits(t) for t in tasks)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return sum(pool.map(_chunk_hits, tasks))
