"""The feasibility polytope T(N, n) of probability vectors.

T(N, n) holds the points of the simplex whose n smallest coordinates sum to at
least (n-1)/(N-1), i.e. exactly the vectors admitting an affine design of
sample size n.  Vertices, facets and adjacency are computed in exact
rationals; spectra in floating point.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations

import numpy as np

from .design import ProbabilityVector, existence_check
from .variance import SpectralReport, gamma_matrix, psi_matrix, symmetric_eigenvalues


class VertexKind(str, enum.Enum):
    ZERO = "ZERO"
    ONE_OVER_N = "ONE_OVER_N"


@dataclass(frozen=True)
class PolytopeVertex:
    kind: VertexKind
    pivot: int
    coords: tuple[Fraction, ...]

    @property
    def label(self) -> str:
        return f"p({self.pivot},{'0' if self.kind is VertexKind.ZERO else '1/n'})"

    def probability_vector(self) -> ProbabilityVector:
        return ProbabilityVector(self.coords, exact=True)


@dataclass(frozen=True)
class Facet:
    subset: tuple[int, ...]
    vertex_set: tuple[PolytopeVertex, ...]


@dataclass(frozen=True)
class ConeVertex:
    j: int
    a: Fraction
    b: Fraction | None
    coords: tuple[Fraction, ...]


def _check(n_pop: int, n: int) -> None:
    if n_pop < 3 or not 2 <= n < n_pop:
        raise ValueError(f"need N >= 3 and 2 <= n < N, got N={n_pop}, n={n}")


def threshold(n_pop: int, n: int) -> Fraction:
    return Fraction(n - 1, n_pop - 1)


def membership(p: ProbabilityVector, n: int) -> bool:
    return existence_check(p, n)[0]


def _random_simplex_point(rng: np.random.Generator, n_pop: int) -> ProbabilityVector:
    raw = rng.dirichlet(np.ones(n_pop))
    t = rng.uniform()
    mixed = t * raw + (1 - t) / n_pop
    fr = [Fraction(float(v)) for v in mixed]
    total = sum(fr)
    return ProbabilityVector(tuple(v / total for v in fr), exact=True)


def nesting_check(n_pop: int, samples: int = 1000, seed: int = 0) -> bool:
    """Sample the simplex and confirm membership for n+1 implies membership for n."""
    if n_pop < 4:
        raise ValueError("nesting needs N >= 4")
    rng = np.random.default_rng(seed)
    for _ in range(samples):
        p = _random_simplex_point(rng, n_pop)
        member = [membership(p, n) for n in range(2, n_pop)]
        if any(member[i + 1] and not member[i] for i in range(len(member) - 1)):
            return False
    return True


def vertex_coords(n_pop: int, n: int, kind: VertexKind, pivot: int) -> tuple[Fraction, ...]:
    if kind is VertexKind.ZERO:
        at, rest = Fraction(0), Fraction(1, n_pop - 1)
    else:
        at, rest = Fraction(1, n), Fraction(n - 1, n * (n_pop - 1))
    return tuple(at if j == pivot else rest for j in range(1, n_pop + 1))


def vertices(n_pop: int, n: int) -> list[PolytopeVertex]:
    """All vertices: 2N of them for n < N-1, the N zero-kind ones for n = N-1."""
    _check(n_pop, n)
    kinds = [VertexKind.ZERO] if n == n_pop - 1 else [VertexKind.ZERO, VertexKind.ONE_OVER_N]
    return [
        PolytopeVertex(kind, i, vertex_coords(n_pop, n, kind, i))
        for kind in kinds
        for i in range(1, n_pop + 1)
    ]


def facets(n_pop: int, n: int) -> list[Facet]:
    """One facet per n-subset F, with the vertices saturating sum_F p = (n-1)/(N-1)."""
    _check(n_pop, n)
    t = threshold(n_pop, n)
    verts = vertices(n_pop, n)
    out = []
    for subset in combinations(range(1, n_pop + 1), n):
        incident = tuple(v for v in verts if sum(v.coords[j - 1] for j in subset) == t)
        out.append(Facet(subset, incident))
    return out


def adjacent(v1: PolytopeVertex, v2: PolytopeVertex, n_pop: int, n: int) -> bool:
    """Whether two vertices span an edge of T(N, n)."""
    _check(n_pop, n)
    if v1 == v2:
        return False
    if n == n_pop - 1:
        return True  # simplex
    if v1.pivot == v2.pivot:
        return False
    if v1.kind is not v2.kind:
        return True
    if v1.kind is VertexKind.ZERO:
        return n > 2
    return n < n_pop - 2


def adjacency_edges(n_pop: int, n: int) -> list[tuple[PolytopeVertex, PolytopeVertex]]:
    verts = vertices(n_pop, n)
    return [(u, v) for u, v in combinations(verts, 2) if adjacent(u, v, n_pop, n)]


def face_adjacent(v1: PolytopeVertex, v2: PolytopeVertex, facet_list: list[Facet]) -> bool:
    """Adjacency read off facet incidence: the smallest face containing both
    vertices must have no other vertices."""
    common = [set(f.vertex_set) for f in facet_list if v1 in f.vertex_set and v2 in f.vertex_set]
    if not common:
        return False
    return set.intersection(*common) == {v1, v2}


# ---------------------------------------------------------------------------
# Brute-force vertex enumeration


def _exact_rank(rows: list[list[Fraction]]) -> int:
    m = [list(r) for r in rows]
    rank = 0
    cols = len(m[0]) if m else 0
    for c in range(cols):
        pivot = next((r for r in range(rank, len(m)) if m[r][c] != 0), None)
        if pivot is None:
            continue
        m[rank], m[pivot] = m[pivot], m[rank]
        for r in range(len(m)):
            if r != rank and m[r][c] != 0:
                f = m[r][c] / m[rank][c]
                m[r] = [a - f * b for a, b in zip(m[r], m[rank])]
        rank += 1
    return rank


def enumerate_vertices(a_rows: list[list[Fraction]], b: list[Fraction]) -> list[tuple[Fraction, ...]]:
    """Vertices of {x : A x >= b, sum(x) = 1} by trying every basis of N-1 tight rows.

    Candidates are solved in floating point, snapped to nearby rationals and
    then re-verified exactly: feasibility plus a tight set of full rank.
    """
    a_f = np.array([[float(v) for v in row] for row in a_rows])
    b_f = np.array([float(v) for v in b])
    dim = a_f.shape[1]
    combos = np.array(list(combinations(range(len(a_rows)), dim - 1)), dtype=int)
    systems = np.empty((len(combos), dim, dim))
    systems[:, : dim - 1, :] = a_f[combos]
    systems[:, dim - 1, :] = 1.0
    rhs = np.empty((len(combos), dim))
    rhs[:, : dim - 1] = b_f[combos]
    rhs[:, dim - 1] = 1.0
    ok = np.abs(np.linalg.det(systems)) > 1e-9
    sols = np.linalg.solve(systems[ok], rhs[ok][..., None])[..., 0]
    feasible = np.all(sols @ a_f.T >= b_f - 1e-9, axis=1)
    candidates = {tuple(np.round(s, 9)) for s in sols[feasible]}
    found = set()
    for cand in candidates:
        x = tuple(Fraction(c).limit_denominator(10**6) for c in cand)
        if sum(x) != 1:
            continue
        values = [sum(ai * xi for ai, xi in zip(row, x)) for row in a_rows]
        if any(v < bi for v, bi in zip(values, b)):
            continue
        tight = [list(row) for row, v, bi in zip(a_rows, values, b) if v == bi]
        if tight and _exact_rank(tight + [[Fraction(1)] * dim]) == dim:
            found.add(x)
    return sorted(found)


def polytope_constraints(n_pop: int, n: int) -> tuple[list[list[Fraction]], list[Fraction]]:
    """Facet inequalities plus (redundant) nonnegativity, as rows of A x >= b."""
    t = threshold(n_pop, n)
    rows, rhs = [], []
    for subset in combinations(range(n_pop), n):
        rows.append([Fraction(1 if i in subset else 0) for i in range(n_pop)])
        rhs.append(t)
    for i in range(n_pop):
        rows.append([Fraction(1 if k == i else 0) for k in range(n_pop)])
        rhs.append(Fraction(0))
    return rows, rhs


def brute_force_vertices(n_pop: int, n: int) -> list[tuple[Fraction, ...]]:
    _check(n_pop, n)
    return enumerate_vertices(*polytope_constraints(n_pop, n))


def sorted_cone_constraints(n_pop: int, n: int) -> tuple[list[list[Fraction]], list[Fraction]]:
    """T(N, n) intersected with 0 <= x_1 <= ... <= x_N."""
    rows = [[Fraction(1 if k == 0 else 0) for k in range(n_pop)]]
    rhs = [Fraction(0)]
    for i in range(n_pop - 1):
        row = [Fraction(0)] * n_pop
        row[i], row[i + 1] = Fraction(-1), Fraction(1)
        rows.append(row)
        rhs.append(Fraction(0))
    rows.append([Fraction(1 if k < n else 0) for k in range(n_pop)])
    rhs.append(threshold(n_pop, n))
    return rows, rhs


# ---------------------------------------------------------------------------
# Vertices of the sorted cone


def cone_vertices(n_pop: int, n: int) -> list[ConeVertex]:
    """The N vertices w(j) = (a_j repeated j times, b_j repeated N-j times)."""
    _check(n_pop, n)
    out = []
    for j in range(1, n_pop + 1):
        if j == n_pop:
            a, b = Fraction(1, n_pop), None
        elif j <= n:
            a, b = Fraction(j - 1, j * (n_pop - 1)), Fraction(1, n_pop - 1)
        else:
            a = Fraction(n - 1, n * (n_pop - 1))
            b = Fraction(n * (n_pop - 1) - j * (n - 1), n * (n_pop - j) * (n_pop - 1))
        coords = (a,) * j + ((b,) * (n_pop - j) if b is not None else ())
        out.append(ConeVertex(j, a, b, coords))
    return out


def cone_vertex_average(n_pop: int, n: int, j: int) -> tuple[Fraction, ...]:
    """Rebuild w(j) as an average of permuted copies of w(1) or w(N-1).

    For j <= n (and j = N) average the copies of w(1) with the zero moved to
    positions 1..j; for n <= j <= N-1 average the copies of w(N-1) with the
    large entry moved to positions j+1..N.
    """
    cones = cone_vertices(n_pop, n)
    if j <= n or j == n_pop:
        base = cones[0]
        copies = [
            tuple(base.a if pos == k else base.b for pos in range(n_pop)) for k in range(j)
        ]
    else:
        base = cones[n_pop - 2]
        copies = [
            tuple(base.b if pos == k else base.a for pos in range(n_pop))
            for k in range(j, n_pop)
        ]
    return tuple(sum(col) / len(copies) for col in zip(*copies))


# ---------------------------------------------------------------------------
# Spectra on the boundary


@dataclass(frozen=True)
class VertexSpectrum:
    vertex: PolytopeVertex
    report: SpectralReport
    closed_form: tuple[Fraction, ...]


def _pivot_last(coords: tuple, pivot: int) -> tuple:
    rest = [c for i, c in enumerate(coords, 1) if i != pivot]
    return tuple(rest) + (coords[pivot - 1],)


def vertex_closed_form(n_pop: int, n: int, kind: VertexKind) -> tuple[Fraction, ...]:
    if kind is VertexKind.ZERO:
        vals = [Fraction(0)] + [Fraction(1, (n_pop - 1) * (n_pop - 2))] * (n_pop - 2)
    else:
        vals = [Fraction(n_pop**2, (n_pop - 1) * n * n)] + [
            Fraction(n - 2, (n_pop - 2) * (n_pop - 1) * n)
        ] * (n_pop - 2)
    return tuple(sorted(vals))


def vertex_spectral(n_pop: int, n: int, v: PolytopeVertex, tol: float = 1e-9) -> VertexSpectrum:
    """Spectrum of gamma at a vertex, with the pivot placed in the last coordinate."""
    if n_pop <= 3:
        raise ValueError("vertex spectra need N > 3")
    p = ProbabilityVector(_pivot_last(v.coords, v.pivot), exact=True)
    report = symmetric_eigenvalues(gamma_matrix(p), tol)
    return VertexSpectrum(v, report, vertex_closed_form(n_pop, n, v.kind))


@dataclass(frozen=True)
class Counterexample:
    p: ProbabilityVector
    gamma_report: SpectralReport
    psi_report: SpectralReport
    closed_form_eigenvalue: float


def counterexample_point(n_pop: int) -> ProbabilityVector:
    """Midpoint of p(1, 1/2) and p(N, 0) in T(N, 2)."""
    a = vertex_coords(n_pop, 2, VertexKind.ONE_OVER_N, 1)
    b = vertex_coords(n_pop, 2, VertexKind.ZERO, n_pop)
    return ProbabilityVector(tuple((x + y) / 2 for x, y in zip(a, b)), exact=True)


def counterexample_quadratic(n_pop: int) -> tuple[Fraction, Fraction, Fraction]:
    """Coefficients of the quadratic whose root gives the negative eigenvector (x, 1, ..., 1)."""
    big = Fraction(n_pop)
    f_x = big**2 / (16 * (big - 1) ** 2) + 1 / (2 * (big - 1))
    f_1 = big * (big - 2) / (8 * (big - 1) ** 2) - 1 / (2 * (big - 1))
    g_x = big / (8 * (big - 1) ** 2) - 1 / (2 * (big - 1) * (big - 2))
    g_1 = (big - 2) / (4 * (big - 1) ** 2) - (big - 3) / (2 * (big - 1) * (big - 2))
    # f = g x  <=>  g_x x^2 + (g_1 - f_x) x - f_1 = 0
    return g_x, g_1 - f_x, -f_1


def counterexample_discriminant(n_pop: int) -> Fraction:
    big = n_pop
    num = big**6 + 36 * big**5 - 204 * big**4 + 336 * big**3 - 96 * big**2 - 128 * big + 64
    return Fraction(num, 256 * (big - 2) ** 2 * (big - 1) ** 4)


def counterexample_eigenvalue(n_pop: int) -> float:
    big = n_pop
    disc = counterexample_discriminant(n_pop)
    return (1 + 8 / (big - 2) - 3 / (big - 1) ** 2 - 2 / (big - 1) - math.sqrt(256 * disc)) / 32


def boundary_counterexample(n_pop: int, tol: float = 1e-9) -> Counterexample:
    """Boundary point of T(N, 2) where psi has a negative eigenvalue."""
    if n_pop <= 3:
        raise ValueError("the boundary counterexample needs N > 3")
    p = counterexample_point(n_pop)
    return Counterexample(
        p=p,
        gamma_report=symmetric_eigenvalues(gamma_matrix(p), tol),
        psi_report=symmetric_eigenvalues(psi_matrix(p), tol),
        closed_form_eigenvalue=counterexample_eigenvalue(n_pop),
    )
