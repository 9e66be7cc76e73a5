"""Acceptance criteria, one test per criterion.

Each test prints a single ``[PASS]``/``[FAIL]`` line with its runtime, even
when output capture is on.  Run with ``pytest tests/test_acceptance.py -s``
for the lines alone.
"""

import math
import subprocess
import sys
import time
from collections import Counter
from contextlib import contextmanager
from fractions import Fraction
from itertools import permutations
from pathlib import Path

import numpy as np
import pytest

from affine_swor import polytope
from affine_swor.design import ProbabilityVector, build_design
from affine_swor.polytope import VertexKind
from affine_swor.sampler import StratifiedPopulation, StratifiedSampler, f_pmf, valid_counts
from affine_swor.variance import (
    PopulationValues,
    gamma_det_n3,
    gamma_matrix,
    jacobi_eigh,
    psi_matrix,
    sufficient_threshold,
    symmetric_eigenvalues,
    variance_with_replacement,
    variance_without_replacement,
)
from affine_swor.verification import identities_suite, factorial_bracket_suite, envelope_suite, variance_oracle_suite

F = Fraction
DATA = Path(__file__).resolve().parents[1] / "data"


@pytest.fixture
def criterion(capsys):
    @contextmanager
    def run(number, title, budget=None):
        start = time.perf_counter()
        status, detail = "PASS", ""
        try:
            yield
            elapsed = time.perf_counter() - start
            if budget is not None and elapsed >= budget:
                status, detail = "FAIL", f" over the {budget:g} s budget"
        except BaseException as exc:
            elapsed = time.perf_counter() - start
            status, detail = "FAIL", f" ({type(exc).__name__}: {str(exc).splitlines()[0] if str(exc) else ''})"
            raise
        finally:
            with capsys.disabled():
                print(f"\n[{status}] criterion {number}: {title} [{elapsed:.2f} s]{detail}")
        assert status == "PASS", f"criterion {number}{detail}"

    return run


def test_criterion_1_worked_example(criterion):
    with criterion(1, "N=4 worked example: pairwise pmf and four variances", budget=1):
        p = ProbabilityVector.from_values(["0.415", "0.25", "0.25", "0.085"])
        d = build_design(p, 2)
        scaled = [[0, 199, 199, 100], [199, 0, 100, 1], [199, 100, 0, 1], [100, 1, 1, 0]]
        assert d.pairwise_matrix() == [[F(v, 1200) for v in row] for row in scaled]

        witness = symmetric_eigenvalues(psi_matrix(p)).witness
        witness = witness / witness[np.argmax(np.abs(witness))]
        cases = [(witness, 0.450, 0.485), ([1, 0, 0, 1], 0.318, 0.341)]
        for x, want_with, want_without in cases:
            pv = PopulationValues.of(p, x)
            assert abs(variance_with_replacement(pv, 2) - want_with) <= 5e-4
            assert abs(variance_without_replacement(pv, d) - want_without) <= 5e-4


def test_criterion_2_negative_eigenvalue(criterion):
    with criterion(2, "min eigenvalue of psi at the N=4 example", budget=1):
        p = ProbabilityVector.from_values(["0.415", "0.25", "0.25", "0.085"])
        expected = 4 / 3 - 22 * math.sqrt(15890) / 1411
        values, _ = jacobi_eigh(psi_matrix(p))
        assert abs(values[0] - expected) <= 1e-9


def test_criterion_3_identities(criterion):
    with criterion(3, "coefficient identities 1-5 for 3 <= N <= 12", budget=1):
        checks = identities_suite(12)
        assert all(c.ok and c.total > 0 for c in checks), [(c.name, c.passed, c.total) for c in checks]


def test_criterion_4_variance_oracle(criterion):
    with criterion(4, "enumeration variance equals matrix-form variance (3000 cases)", budget=60):
        (check,) = variance_oracle_suite(sizes=(4, 5, 6), samples=(2, 3), n_p=50, n_x=10, atol=1e-10)
        assert check.total == 3000
        assert check.ok, f"{check.passed}/{check.total}"


def _sufficient_points(rng, n_pop, count):
    """Points meeting the two-smallest threshold; every other one sits on its boundary."""
    t_star = float(sufficient_threshold(n_pop))
    uniform_pair = 2 / n_pop
    out = []
    while len(out) < count:
        d = rng.dirichlet(np.ones(n_pop))
        pair = float(np.sort(d)[:2].sum())
        # the two smallest entries of t*d + (1-t)/N are linear in t
        t_max = 1.0 if pair >= t_star else (uniform_pair - t_star) / (uniform_pair - pair)
        t = t_max if len(out) % 2 == 0 else rng.uniform(0, t_max)
        p = t * d + (1 - t) / n_pop
        p = p / p.sum()
        if np.sort(p)[:2].sum() >= t_star:
            out.append(p)
    return out


def test_criterion_5_sufficient_condition(criterion):
    with criterion(5, "sufficient condition is sound for N=3 and N=4..8", budget=30):
        rng = np.random.default_rng(2024)
        for n_pop in range(4, 9):
            for p in _sufficient_points(rng, n_pop, 1000):
                pv = ProbabilityVector(tuple(float(v) for v in p), exact=False)
                values, _ = jacobi_eigh(psi_matrix(pv))
                assert values[0] >= -1e-9, (n_pop, list(p), values[0])
        for p in _sufficient_points(rng, 3, 1000):
            order = np.sort(p)
            det = gamma_det_n3(order[0], order[1])
            assert det >= -1e-12
            g = gamma_matrix(ProbabilityVector(tuple(float(v) for v in order), exact=False))
            assert np.trace(g) >= 0
            assert det == pytest.approx(np.linalg.det(g), abs=1e-12)


def _cube_isomorphic(verts, edges):
    cube = [(a, b, c) for a in (0, 1) for b in (0, 1) for c in (0, 1)]
    target = {frozenset((u, v)) for u in cube for v in cube if sum(x != y for x, y in zip(u, v)) == 1}
    return any(
        {frozenset((m[u], m[v])) for u, v in edges} == target
        for m in (dict(zip(verts, perm)) for perm in permutations(cube))
    )


def test_criterion_6_polytope(criterion):
    with criterion(6, "polytope vertices, facets, cube graph, vertex spectra, counterexamples", budget=30):
        for n_pop in range(4, 9):
            for n in range(2, n_pop):
                verts = polytope.vertices(n_pop, n)
                assert len(verts) == (n_pop if n == n_pop - 1 else 2 * n_pop)
                for v in verts:
                    zero = v.kind is VertexKind.ZERO
                    at = F(0) if zero else F(1, n)
                    rest = F(1, n_pop - 1) if zero else F(n - 1, n * (n_pop - 1))
                    assert v.coords == tuple(at if i == v.pivot else rest for i in range(1, n_pop + 1))
                if n_pop <= 6:
                    assert polytope.brute_force_vertices(n_pop, n) == sorted(v.coords for v in verts)
                fl = polytope.facets(n_pop, n)
                assert len(fl) == math.comb(n_pop, n)
                if n < n_pop - 1:
                    for f in fl:
                        want = {v for v in verts if (v.kind is VertexKind.ZERO) == (v.pivot in f.subset)}
                        assert set(f.vertex_set) == want
                if n_pop > 3:
                    for v in verts:
                        spectrum = polytope.vertex_spectral(n_pop, n, v)
                        closed = np.array([float(c) for c in spectrum.closed_form])
                        assert np.max(np.abs(spectrum.report.eigenvalues - closed)) <= 1e-10

        verts = polytope.vertices(4, 2)
        edges = polytope.adjacency_edges(4, 2)
        assert len(edges) == 12 and _cube_isomorphic(verts, edges)

        for n_pop in range(4, 13):
            ce = polytope.boundary_counterexample(n_pop)
            assert ce.gamma_report.min_eigenvalue < 0
            assert abs(ce.gamma_report.min_eigenvalue - ce.closed_form_eigenvalue) <= 1e-9


def test_criterion_7_sampler(criterion):
    with criterion(7, "stratified sampler: 1e5 draws, envelope checks, factorial bracket", budget=120):
        pop = StratifiedPopulation((F(1, 20), F(7, 60)), (6, 6))
        n, draws = 2, 100_000
        sampler = StratifiedSampler(pop, n, seed=20240601)
        samples = sampler.draw(draws)

        def within(count, prob):
            se = math.sqrt(prob * (1 - prob) / draws)
            return abs(count / draws - prob) <= 4 * se

        counts = Counter(tuple(sum(pop.stratum_of(x) == j for x in s) for j in range(pop.k)) for s in samples)
        for m in valid_counts(pop, n):
            assert within(counts[m], float(f_pmf(pop, n, m))), m

        expanded = pop.expanded()
        design = build_design(expanded, n)
        for pos in range(n):
            freq = Counter(s[pos] for s in samples)
            for label in range(1, pop.n_pop + 1):
                assert within(freq[label], float(expanded[label])), (pos, label)

        pairs = Counter(tuple(s) for s in samples)
        for u, v in permutations(range(1, pop.n_pop + 1), 2):
            assert within(pairs[(u, v)], float(design.bivariate_marginal(u, v))), (u, v)

        stats = sampler.stats
        c = stats.bound_c
        se = math.sqrt(c * (c - 1) / stats.accepted)
        assert stats.empirical_iterations_per_accept <= c + 4 * se

        (envelope,) = envelope_suite(max_k=3, max_pop=30, max_n=5)
        assert envelope.ok, f"{envelope.passed}/{envelope.total}"
        (bracket,) = factorial_bracket_suite(500)
        assert bracket.ok and bracket.total == 500 * 501 // 2


def test_criterion_8_determinism(criterion, tmp_path):
    with criterion(8, "sample command is byte-identical across two runs"):
        cmd = [sys.executable, "-m", "affine_swor.cli", "sample", str(DATA / "stratified_k2.json"), "--draws", "500"]
        runs = [subprocess.run(cmd, capture_output=True, check=True).stdout for _ in range(2)]
        assert runs[0] == runs[1] and len(runs[0].splitlines()) == 500
