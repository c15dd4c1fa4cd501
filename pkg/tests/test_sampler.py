import json
from collections import Counter

import numpy as np
import pytest
from scipy import stats

from freevis.densities import is_visible_word, visible_series
from freevis.sampler import (VISIBLE, AbelianPredicate, codes_abelian, codes_to_words,
                             mc_annular_estimate, mc_sphere_estimate, sample_ball_experiment,
                             sample_codes, sample_sphere, t_visible)
from freevis.lattice import GcdClassSet
from freevis.words import abelianize, enumerate_sphere, identity, sphere_size


def test_sample_sphere_reduced_and_exact_length():
    rng = np.random.default_rng(1)
    for n in (1, 2, 5, 17):
        for _ in range(50):
            x = sample_sphere(2, n, rng)
            assert len(x) == n
            assert all(a != -b for a, b in zip(x.letters, x.letters[1:]))
    assert sample_sphere(3, 0, rng) == identity(3)


@pytest.mark.parametrize("k,n", [(2, 1), (2, 3), (3, 2)])
def test_uniform_on_enumerable_sphere(k, n):
    size = 1000 * sphere_size(k, n)
    words = codes_to_words(sample_codes(k, n, size, np.random.default_rng(11)), k)
    counts = Counter(words)
    support = list(enumerate_sphere(k, n))
    assert set(counts) == set(support)
    observed = [counts[x] for x in support]
    _, pvalue = stats.chisquare(observed)
    assert pvalue > 1e-6
    # every cell within 5 sigma of its expectation
    p = 1 / len(support)
    sigma = (size * p * (1 - p)) ** 0.5
    assert all(abs(c - size * p) <= 5 * sigma for c in observed)


def test_codes_abelian_matches_words():
    codes = sample_codes(3, 9, 200, np.random.default_rng(3))
    z = codes_abelian(codes, 3)
    for row, x in zip(z, codes_to_words(codes, 3)):
        assert tuple(row) == abelianize(x)


def test_ball_experiment_distribution():
    rng = np.random.default_rng(5)
    n, draws = 3, 48_000
    counts = Counter(sample_ball_experiment(2, n, rng) for _ in range(draws))
    by_length = Counter()
    for x, c in counts.items():
        by_length[len(x)] += c
    _, p_len = stats.chisquare([by_length[m] for m in range(n + 1)])
    assert p_len > 1e-6
    # a fixed word of length 2 has probability 1/((n+1)·12) = 1/48
    length2 = [counts[x] for x in enumerate_sphere(2, 2)]
    assert abs(np.mean(length2) / draws - 1 / 48) < 0.002
    assert sample_ball_experiment(2, 0, rng) == identity(2)


def test_ball_experiment_is_not_uniform_on_ball():
    rng = np.random.default_rng(9)
    n = 8
    top = sum(len(sample_ball_experiment(2, n, rng)) == n for _ in range(9000))
    assert abs(top / 9000 - 1 / (n + 1)) < 0.02  # uniform ball would give about 2/3


def test_always_true_predicate():
    est = mc_annular_estimate(2, 20, AbelianPredicate(GcdClassSet.all_except(infinity=True), "all"), 1000)
    assert est.estimate == 1 and est.standard_error == 0
    est = mc_annular_estimate(2, 6, lambda x: True, 100)
    assert est.estimate == 1


def test_reproducible_across_workers():
    a = mc_annular_estimate(2, 30, VISIBLE, 40_000, seed=123, workers=1, chunk=5000)
    b = mc_annular_estimate(2, 30, VISIBLE, 40_000, seed=123, workers=2, chunk=5000)
    c = mc_annular_estimate(2, 30, VISIBLE, 40_000, seed=124, workers=1, chunk=5000)
    assert a == b
    assert a.hits != c.hits


def test_word_and_vector_paths_agree():
    a = mc_annular_estimate(2, 12, VISIBLE, 6000, seed=4, chunk=1000)
    b = mc_annular_estimate(2, 12, is_visible_word, 6000, seed=4, chunk=1000, name="visible")
    assert a.hits == b.hits


def test_mc_against_exact(small_table2):
    exact = float(visible_series(small_table2).Q(14))
    est = mc_annular_estimate(2, 14, VISIBLE, 200_000, seed=1)
    assert abs(est.estimate - exact) <= 4 * est.standard_error
    exact2 = float(visible_series(small_table2, 2).s(14))
    est2 = mc_sphere_estimate(2, 14, t_visible(2), 100_000, seed=2)
    assert abs(est2.estimate - exact2) <= 4 * est2.standard_error


def test_json_payload():
    est = mc_annular_estimate(2, 10, VISIBLE, 1000, seed=3)
    d = est.to_json()
    json.dumps(d)
    assert {"n", "samples", "estimate", "se", "seed", "predicate"} <= set(d)
    assert d["se"] == pytest.approx((est.estimate * (1 - est.estimate) / 1000) ** 0.5)


def test_argument_checks():
    with pytest.raises(ValueError):
        mc_annular_estimate(2, 10, VISIBLE, 999)
    with pytest.raises(ValueError):
        mc_annular_estimate(2, 1, VISIBLE, 1000)
