"""Oracle suites run by ``affine-swor verify``.

Each suite returns a list of ``Check`` rows (property name, passed, total).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations, combinations_with_replacement

import numpy as np

from . import polytope
from .coeffs import verify_identities
from .design import ProbabilityVector, build_design, existence_check
from .sampler import (
    StratifiedPopulation,
    bound_c,
    check_population,
    log_factorial_ratio_bounds,
    log_falling_ratio,
    log_h,
    valid_counts,
)
from .variance import PopulationValues, variance_without_replacement


@dataclass
class Check:
    name: str
    passed: int = 0
    total: int = 0

    def record(self, ok: bool) -> None:
        self.total += 1
        self.passed += bool(ok)

    @property
    def ok(self) -> bool:
        return self.passed == self.total


def random_feasible_p(rng: np.random.Generator, n_pop: int, n: int, denom: int = 1000) -> ProbabilityVector:
    """Random rational point of T(N, n): a Dirichlet draw shrunk toward uniform until feasible."""
    raw = [Fraction(int(v)) + 1 for v in rng.integers(0, denom, size=n_pop)]
    total = sum(raw)
    d = [v / total for v in raw]
    t = Fraction(int(rng.integers(1, 101)), 100)
    while True:
        p = ProbabilityVector(tuple(t * v + (1 - t) * Fraction(1, n_pop) for v in d), exact=True)
        if existence_check(p, n)[0]:
            return p
        t /= 2


def random_stratified(rng: np.random.Generator, sizes: tuple[int, ...], n: int) -> StratifiedPopulation:
    n_pop = sum(sizes)
    raw = [Fraction(int(v)) + 1 for v in rng.integers(0, 100, size=len(sizes))]
    scale = sum(r * s for r, s in zip(raw, sizes))
    base = [r / scale for r in raw]
    t = Fraction(1)
    while True:
        probs = tuple(t * b + (1 - t) * Fraction(1, n_pop) for b in base)
        pop = StratifiedPopulation(probs, sizes, exact=True)
        if pop.smallest_sum(n) >= Fraction(n - 1, n_pop - 1):
            return pop
        t /= 2


def identities_suite(max_n: int = 12) -> list[Check]:
    checks = [Check(f"identity {i}") for i in range(1, 6)]
    for n_pop in range(3, max_n + 1):
        for k in range(2, n_pop):
            for check, result in zip(checks, verify_identities(n_pop, k)):
                if result is not None:
                    check.record(result)
    return checks


def variance_oracle_suite(
    sizes=(4, 5, 6), samples=(2, 3), n_p: int = 50, n_x: int = 10, seed: int = 0, atol: float = 1e-10
) -> list[Check]:
    rng = np.random.default_rng(seed)
    check = Check("enumeration variance == matrix-form variance")
    for n_pop in sizes:
        for n in samples:
            for _ in range(n_p):
                p = random_feasible_p(rng, n_pop, n)
                d = build_design(p, n)
                for _ in range(n_x):
                    pv = PopulationValues.of(p, rng.normal(size=n_pop))
                    a = variance_without_replacement(pv, d, "matrix")
                    b = variance_without_replacement(pv, d, "enumerate")
                    check.record(abs(a - b) <= atol)
    return [check]


def polytope_oracle_suite(max_brute: int = 6, max_n: int = 8) -> list[Check]:
    counts = Check("vertex count (2N, or N at n=N-1)")
    brute = Check("brute-force vertices == closed-form vertices")
    facet_count = Check("facet count C(N,n)")
    incidence = Check("facet incidence matches {p(i,0): i in F} + {p(i,1/n): i not in F}")
    adjacency = Check("adjacency rules == facet-intersection adjacency")
    for n_pop in range(4, max_n + 1):
        for n in range(2, n_pop):
            verts = polytope.vertices(n_pop, n)
            counts.record(len(verts) == (n_pop if n == n_pop - 1 else 2 * n_pop))
            if n_pop <= max_brute:
                found = polytope.brute_force_vertices(n_pop, n)
                brute.record(found == sorted(v.coords for v in verts))
            fl = polytope.facets(n_pop, n)
            facet_count.record(len(fl) == math.comb(n_pop, n))
            if n < n_pop - 1:
                for f in fl:
                    expect = {
                        v
                        for v in verts
                        if (v.kind is polytope.VertexKind.ZERO) == (v.pivot in f.subset)
                    }
                    incidence.record(set(f.vertex_set) == expect)
            if n_pop <= 7:
                for u, v in combinations(verts, 2):
                    adjacency.record(
                        polytope.adjacent(u, v, n_pop, n) == polytope.face_adjacent(u, v, fl)
                    )
    return [counts, brute, facet_count, incidence, adjacency]


def factorial_bracket_suite(max_s: int = 500) -> list[Check]:
    check = Check("lower <= (s-r)!/s! <= upper")
    for s in range(1, max_s + 1):
        for r in range(1, s + 1):
            exact = log_falling_ratio(r, s)
            lo, hi = log_factorial_ratio_bounds(r, s)
            check.record(lo < exact < hi)
    return [check]


def envelope_configs(max_k: int = 3, max_pop: int = 30, max_n: int = 5):
    for n in range(2, max_n + 1):
        for k in range(1, max_k + 1):
            for sizes in combinations_with_replacement(range(n + 1, max_pop + 1), k):
                n_pop = sum(sizes)
                if n_pop <= max_pop and n_pop > n + 2:
                    yield n, sizes


def envelope_suite(max_k: int = 3, max_pop: int = 30, max_n: int = 5, seed: int = 0) -> list[Check]:
    rng = np.random.default_rng(seed)
    check = Check("max_m f(m)/g(m) <= C")
    for n, sizes in envelope_configs(max_k, max_pop, max_n):
        pop = random_stratified(rng, sizes, n)
        check_population(pop, n)
        log_c = bound_c(pop, n).log_value
        worst = max(log_h(pop, n, m) for m in valid_counts(pop, n))
        check.record(worst <= log_c + 1e-12)  # log-space rounding
    return [check]


SUITES = {
    "identities": identities_suite,
    "variance-oracle": variance_oracle_suite,
    "polytope-oracle": polytope_oracle_suite,
    "lemma2": factorial_bracket_suite,
    "theorem8": envelope_suite,
}
