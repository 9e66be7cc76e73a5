import math
from collections import Counter
from fractions import Fraction
from itertools import permutations

import numpy as np
import pytest

from affine_swor.design import build_design
from affine_swor.sampler import (
    PreconditionError,
    StratifiedPopulation,
    StratifiedSampler,
    bound_c,
    check_population,
    compositions,
    expand_sample,
    f_pmf,
    factorial_ratio_bounds,
    g_pmf,
    labelled_pmf,
    log_f,
    log_factorial_ratio_bounds,
    log_falling_ratio,
    log_h,
    valid_counts,
)
from affine_swor.verification import random_stratified

F = Fraction
MC_POP = StratifiedPopulation((F(1, 20), F(7, 60)), (6, 6))


def test_compositions():
    assert list(compositions(2, 2)) == [(0, 2), (1, 1), (2, 0)]
    for n in range(1, 6):
        for k in range(1, 5):
            got = list(compositions(n, k))
            assert len(got) == math.comb(n + k - 1, k - 1)
            assert len(set(got)) == len(got)


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_f_normalizes(k, rng):
    for n in range(2, 7):
        sizes = tuple(int(s) for s in rng.integers(n, n + 5, size=k))
        if sum(sizes) <= n:
            continue
        pop = random_stratified(rng, sizes, n)
        check_population(pop, n)
        assert sum(f_pmf(pop, n, m) for m in valid_counts(pop, n)) == 1


def test_single_stratum():
    pop = StratifiedPopulation.from_values(["1/7"], [7])
    assert f_pmf(pop, 3, (3,)) == 1
    assert g_pmf(pop, 3, (3,)) == 1


def _brute_counts(pop, n):
    d = build_design(pop.expanded(), n)
    out = Counter()
    for tup in permutations(range(1, pop.n_pop + 1), n):
        m = [0] * pop.k
        for label in tup:
            m[pop.stratum_of(label)] += 1
        out[tuple(m)] += d.joint_pmf(tup)
    return out


@pytest.mark.parametrize(
    "probs,sizes,n",
    [
        ((F(1, 10), F(7, 40)), (3, 4), 2),
        ((F(1, 8), F(5, 32)), (3, 4), 3),
        ((F(1, 10), F(1, 8), F(13, 80)), (3, 3, 2), 2),
    ],
)
def test_f_matches_design(probs, sizes, n):
    pop = StratifiedPopulation(probs, sizes)
    check_population(pop, n)
    brute = _brute_counts(pop, n)
    for m in valid_counts(pop, n):
        assert f_pmf(pop, n, m) == brute[m]


def test_labelled_pmf_matches_design():
    pop = StratifiedPopulation((F(1, 8), F(5, 32)), (3, 4))
    d = build_design(pop.expanded(), 3)
    for tup in permutations(range(1, 8), 3):
        assert labelled_pmf(pop, 3, tup) == d.joint_pmf(tup)
    assert labelled_pmf(pop, 3, (1, 1, 2)) == 0


def test_float_population_close_to_exact():
    exact = StratifiedPopulation((F(1, 10), F(7, 40)), (3, 4))
    approx = StratifiedPopulation.from_values([0.1, 0.175], [3, 4])
    assert not approx.exact
    for m in valid_counts(exact, 2):
        assert f_pmf(approx, 2, m) == pytest.approx(float(f_pmf(exact, 2, m)), rel=1e-12)


def test_g_examples():
    pop = StratifiedPopulation((F(1, 8), F(1, 8)), (4, 4))
    assert g_pmf(pop, 2, (1, 1)) == F(1, 2)
    assert g_pmf(pop, 2, (2, 0)) == F(1, 4)
    assert math.exp(log_h(pop, 2, (1, 1))) == pytest.approx(float(f_pmf(pop, 2, (1, 1)) / F(1, 2)))


def test_zero_mass_on_facet():
    # two light units sum exactly to (n-1)/(N-1)
    pop = StratifiedPopulation((F(1, 14), F(5, 28)), (4, 4))
    check_population(pop, 2)
    assert f_pmf(pop, 2, (2, 0)) == 0
    assert log_f(pop, 2, (2, 0)) == -math.inf
    assert log_f(pop, 2, (1, 1)) > -math.inf
    assert log_h(pop, 2, (0, 5)) == -math.inf


def test_envelope_dominates(rng):
    for sizes in [(4, 5), (5, 5, 6), (8, 12), (4, 4, 4, 4)]:
        for n in range(2, min(sizes)):
            if sum(sizes) <= n + 2:
                continue
            for _ in range(5):
                pop = random_stratified(rng, sizes, n)
                log_c = bound_c(pop, n).log_value
                assert max(log_h(pop, n, m) for m in valid_counts(pop, n)) <= log_c


def test_rough_bound_for_large_strata(rng):
    for sizes in [(50, 50), (100, 200), (60, 80, 100), (200, 200, 200)]:
        for n in (2, 3, 5):
            pop = random_stratified(rng, sizes, n)
            b = bound_c(pop, n)
            assert b.value <= 3 * b.approx


def test_bound_preconditions():
    pop = StratifiedPopulation((F(1, 6),), (6,))
    with pytest.raises(PreconditionError):
        bound_c(pop, 6)
    with pytest.raises(PreconditionError):
        bound_c(StratifiedPopulation((F(1, 5), F(1, 5)), (2, 3)), 2)
    assert bound_c(StratifiedPopulation((F(1, 5),), (5,)), 3).value == 1.0


class TestFactorialRatio:
    def test_equal_arguments(self):
        lo, hi = log_factorial_ratio_bounds(1, 1)
        assert lo < log_falling_ratio(1, 1) == 0 < hi

    def test_example(self):
        lo, hi = factorial_ratio_bounds(2, 5)
        assert lo < F(1, 20) < hi
        assert math.exp(log_falling_ratio(2, 5)) == pytest.approx(1 / 20)

    def test_grid(self):
        for s in range(1, 120):
            for r in range(1, s + 1):
                lo, hi = log_factorial_ratio_bounds(r, s)
                assert lo < log_falling_ratio(r, s) < hi

    def test_domain(self):
        with pytest.raises(ValueError):
            log_factorial_ratio_bounds(3, 2)


class TestPreconditions:
    def test_sample_too_large_for_stratum(self):
        with pytest.raises(PreconditionError, match="min N_j"):
            check_population(MC_POP, 7)

    def test_infeasible(self):
        pop = StratifiedPopulation((F(1, 4), F(1, 12)), (3, 3))
        with pytest.raises(PreconditionError, match="infeasible"):
            check_population(pop, 2)

    def test_sample_size_range(self):
        with pytest.raises(PreconditionError):
            check_population(MC_POP, 1)

    def test_bad_population(self):
        with pytest.raises(ValueError):
            StratifiedPopulation((F(1, 4), F(1, 4)), (3, 3))
        with pytest.raises(ValueError):
            StratifiedPopulation((F(1, 6),), (6, 1))
        with pytest.raises(ValueError):
            StratifiedPopulation((F(0), F(1, 3)), (3, 3))


class TestSampling:
    def test_expand_sample(self, rng):
        for _ in range(200):
            sample = expand_sample(MC_POP, (1, 1), rng)
            assert len(set(sample)) == 2
            assert sorted(MC_POP.stratum_of(s) for s in sample) == [0, 1]
        with pytest.raises(ValueError):
            expand_sample(MC_POP, (7, 0), rng)

    def test_count_frequencies(self):
        sampler = StratifiedSampler(MC_POP, 2, seed=7)
        draws = 20000
        freq = Counter(sampler.draw_counts(draws))
        for m in valid_counts(MC_POP, 2):
            p = float(f_pmf(MC_POP, 2, m))
            se = math.sqrt(p * (1 - p) / draws)
            assert abs(freq[m] / draws - p) <= 4 * se

    def test_iterations_track_bound(self):
        sampler = StratifiedSampler(MC_POP, 2, seed=11)
        sampler.draw_counts(5000)
        c = sampler.stats.bound_c
        se = math.sqrt(c * (c - 1) / sampler.stats.accepted)
        assert abs(sampler.stats.empirical_iterations_per_accept - c) <= 4 * se

    def test_single_stratum(self):
        pop = StratifiedPopulation((F(1, 4),), (4,))
        sampler = StratifiedSampler(pop, 3, seed=1)
        samples = sampler.draw(200)
        assert all(len(set(s)) == 3 and all(1 <= x <= 4 for x in s) for s in samples)
        assert sampler.stats.proposals == sampler.stats.accepted == 200

    def test_determinism(self):
        a = StratifiedSampler(MC_POP, 2, seed=5).draw(300)
        b = StratifiedSampler(MC_POP, 2, seed=5).draw(300)
        c = StratifiedSampler(MC_POP, 2, seed=6).draw(300)
        assert a == b
        assert a != c

    def test_successive_calls_differ(self):
        sampler = StratifiedSampler(MC_POP, 2, seed=5)
        assert sampler.draw(50) != sampler.draw(50)
