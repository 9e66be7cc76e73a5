"""Horvitz-Thompson variance under the affine design versus i.i.d. draws.

Sampling without replacement never loses to sampling with replacement, for
every attribute vector x, exactly when the matrix

    psi[u, v] = 1 - delta[u, v] / (p_u p_v)

is positive semidefinite.  ``gamma_matrix`` is the (N-1) x (N-1) reduction
that stays defined when some weights are zero.
"""

from __future__ import annotations

import enum
import math
from collections.abc import Sequence
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .coeffs import coeff_pair
from .design import AffineDesign, ProbabilityVector

DEFAULT_PSD_TOL = 1e-9
JACOBI_MAX_SWEEPS = 50
JACOBI_RTOL = 1e-14


class ConvergenceError(RuntimeError):
    pass


class Verdict(str, enum.Enum):
    PSD = "PSD"
    INDEFINITE = "INDEFINITE"
    INCONCLUSIVE = "INCONCLUSIVE"


class Guarantee(str, enum.Enum):
    GUARANTEED_PSD = "GUARANTEED_PSD"
    UNDECIDED = "UNDECIDED"


@dataclass(frozen=True)
class PopulationValues:
    p: ProbabilityVector
    x: tuple[float, ...]

    def __post_init__(self):
        if len(self.x) != self.p.n_pop:
            raise ValueError(f"x has length {len(self.x)}, population has N={self.p.n_pop}")
        if not all(math.isfinite(v) for v in self.x):
            raise ValueError("x entries must be finite")

    @classmethod
    def of(cls, p: ProbabilityVector, x: Sequence[float]) -> "PopulationValues":
        return cls(p, tuple(float(v) for v in x))


@dataclass(frozen=True)
class SpectralReport:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    min_eigenvalue: float
    verdict: Verdict
    tol: float
    witness: np.ndarray | None = None

    def to_dict(self) -> dict:
        return {
            "eigenvalues": [float(v) for v in self.eigenvalues],
            "min_eigenvalue": float(self.min_eigenvalue),
            "verdict": self.verdict.value,
            "tol": self.tol,
            "witness": None if self.witness is None else [float(v) for v in self.witness],
        }


# ---------------------------------------------------------------------------
# Estimator and variances


def ht_estimate(pv: PopulationValues, sample: Sequence[int]) -> float:
    n_pop = pv.p.n_pop
    total = 0.0
    for label in sample:
        w = float(pv.p[label])
        if w <= 0:
            raise ValueError(f"label {label} has zero selection probability")
        total += pv.x[label - 1] / (n_pop * w)
    return total / len(sample)


def _scaled_values(pv: PopulationValues) -> tuple[np.ndarray, np.ndarray]:
    p = np.array(pv.p.as_floats())
    x = np.array(pv.x)
    y = np.zeros_like(x)
    pos = p > 0
    y[pos] = x[pos] / (pv.p.n_pop * p[pos])
    return p, y


def variance_with_replacement(pv: PopulationValues, n: int) -> float:
    if n < 1:
        raise ValueError("n must be >= 1")
    p, y = _scaled_values(pv)
    mean = float(p @ y)
    return (float(p @ (y * y)) - mean * mean) / n


def variance_without_replacement(pv: PopulationValues, d: AffineDesign, method: str = "matrix") -> float:
    """Variance of the estimator under the affine design.

    ``method="matrix"`` uses the with-replacement variance minus the psi
    quadratic form; ``method="enumerate"`` takes the expectation over the full
    support of the design (small N only).
    """
    if d.p != pv.p:
        raise ValueError("design and population values use different probability vectors")
    n = d.n_sample
    n_pop = pv.p.n_pop
    if method == "matrix":
        psi = psi_matrix(pv.p)
        x = np.array(pv.x)
        form = float(x @ psi @ x)
        return variance_with_replacement(pv, n) - (n - 1) / n * form / n_pop**2
    if method == "enumerate":
        p, y = _scaled_values(pv)
        mean = float(p @ y)
        second = 0.0
        for tup, prob in d.enumerate_support():
            est = sum(y[u - 1] for u in tup) / n
            second += float(prob) * est * est
        return second - mean * mean
    raise ValueError(f"unknown method {method!r}")


# ---------------------------------------------------------------------------
# Matrices


def _pair_coeffs(p: ProbabilityVector):
    c = coeff_pair(p.n_pop, 2)
    return (c.a, c.b) if p.exact else c.as_float()


def _finish(rows: list[list], exact: bool):
    if exact:
        return rows
    return np.array(rows, dtype=float)


def psi_matrix(p: ProbabilityVector, exact: bool = False):
    """N x N matrix 1 - delta_uv/(p_u p_v); float array, or nested Fractions if ``exact``."""
    if any(w <= 0 for w in p.weights):
        raise ValueError("psi needs strictly positive weights; use gamma_matrix instead")
    a, b = _pair_coeffs(p)
    w = p.weights
    n_pop = p.n_pop
    rows = [
        [1 if i == j else 1 - (a + b * (w[i] + w[j])) / (w[i] * w[j]) for j in range(n_pop)]
        for i in range(n_pop)
    ]
    if exact and not p.exact:
        raise ValueError("exact matrix requested for a float probability vector")
    return _finish(rows, exact)


def omega_matrix(p: ProbabilityVector, exact: bool = False):
    """psi after the substitution y = x / p; its rows sum to zero."""
    a, b = _pair_coeffs(p)
    w = p.weights
    n_pop = p.n_pop
    rows = [
        [w[i] * w[i] if i == j else w[i] * w[j] - (a + b * (w[i] + w[j])) for j in range(n_pop)]
        for i in range(n_pop)
    ]
    if exact and not p.exact:
        raise ValueError("exact matrix requested for a float probability vector")
    return _finish(rows, exact)


def gamma_matrix(p: ProbabilityVector, exact: bool = False):
    """(N-1) x (N-1) reduction of omega onto the hyperplane sum(y) = 0.

    Defined for any probability vector, including ones with zero weights.
    The last label plays the role of the eliminated coordinate.
    """
    n_pop = p.n_pop
    w = p.weights
    one = Fraction(1) if p.exact else 1.0
    k1 = one / ((n_pop - 1) * (n_pop - 2))
    k2 = one / (n_pop - 2)
    last = w[-1]
    rows = []
    for i in range(n_pop - 1):
        row = []
        for j in range(n_pop - 1):
            if i == j:
                row.append((w[i] - last) ** 2 - 2 * k1 + 2 * (w[i] + last) * k2)
            else:
                row.append((w[i] - last) * (w[j] - last) - k1 + 2 * last * k2)
        rows.append(row)
    if exact and not p.exact:
        raise ValueError("exact matrix requested for a float probability vector")
    return _finish(rows, exact)


# ---------------------------------------------------------------------------
# Eigensolver


def jacobi_eigh(m, rtol: float = JACOBI_RTOL, max_sweeps: int = JACOBI_MAX_SWEEPS):
    """Cyclic Jacobi eigendecomposition of a small dense symmetric matrix.

    Returns ``(eigenvalues, eigenvectors)`` sorted ascending; column ``k`` of
    the second array is the unit eigenvector for ``eigenvalues[k]``.
    """
    a = np.array(m, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("expected a square matrix")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    a = 0.5 * (a + a.T)
    size = a.shape[0]
    v = np.eye(size)
    scale = np.linalg.norm(a)
    for _ in range(max_sweeps + 1):
        off = float(np.linalg.norm(a - np.diag(np.diag(a))))
        if off <= rtol * scale:
            break
        for i in range(size - 1):
            for j in range(i + 1, size):
                aij = a[i, j]
                if aij == 0.0:
                    continue
                if abs(aij) <= 1e-18 * (abs(a[i, i]) + abs(a[j, j])):
                    a[i, j] = a[j, i] = 0.0
                    continue
                theta = (a[j, j] - a[i, i]) / (2.0 * aij)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                col_i = a[:, i].copy()
                col_j = a[:, j].copy()
                a[:, i] = c * col_i - s * col_j
                a[:, j] = s * col_i + c * col_j
                row_i = a[i, :].copy()
                row_j = a[j, :].copy()
                a[i, :] = c * row_i - s * row_j
                a[j, :] = s * row_i + c * row_j
                a[i, j] = a[j, i] = 0.0
                vec_i = v[:, i].copy()
                vec_j = v[:, j].copy()
                v[:, i] = c * vec_i - s * vec_j
                v[:, j] = s * vec_i + c * vec_j
    else:
        raise ConvergenceError(f"Jacobi did not converge in {max_sweeps} sweeps")
    values = np.diag(a).copy()
    order = np.argsort(values, kind="stable")
    return values[order], v[:, order]


def exact_quadratic_form(m, x) -> Fraction:
    """x^T M x evaluated without rounding on the given float entries."""
    xs = [Fraction(float(t)) for t in x]
    arr = np.asarray(m, dtype=float)
    total = Fraction(0)
    for i, xi in enumerate(xs):
        if xi == 0:
            continue
        row = sum((Fraction(float(arr[i, j])) * xj for j, xj in enumerate(xs) if xj != 0), Fraction(0))
        total += xi * row
    return total


def symmetric_eigenvalues(m, tol: float = DEFAULT_PSD_TOL) -> SpectralReport:
    """Spectrum plus a PSD verdict.

    An eigenvalue counts as nonnegative when it is at least
    ``-tol * max(1, ||M||_inf)``.  Indefinite verdicts carry the eigenvector
    of the smallest eigenvalue, whose quadratic form is re-checked exactly.
    """
    arr = np.asarray(m, dtype=float)
    values, vectors = jacobi_eigh(arr)
    lam = float(values[0])
    norm_inf = float(np.max(np.sum(np.abs(arr), axis=1))) if arr.size else 0.0
    cutoff = tol * max(1.0, norm_inf)
    if lam >= -cutoff:
        return SpectralReport(values, vectors, lam, Verdict.PSD, tol)
    witness = vectors[:, 0].copy()
    if exact_quadratic_form(arr, witness) < 0:
        return SpectralReport(values, vectors, lam, Verdict.INDEFINITE, tol, witness)
    return SpectralReport(values, vectors, lam, Verdict.INCONCLUSIVE, tol)


# ---------------------------------------------------------------------------
# Sufficient conditions


def sufficient_threshold(n_pop: int) -> Fraction:
    """Bound on the two smallest weights that guarantees a PSD psi."""
    if n_pop < 3:
        raise ValueError("N must be >= 3")
    if n_pop == 3:
        return Fraction(1, 2)
    return Fraction(3 * n_pop - 2, 2 * n_pop * (n_pop - 1))


def sufficient_condition(p: ProbabilityVector) -> tuple[Guarantee, Fraction]:
    """GUARANTEED_PSD when the two smallest weights clear the threshold.

    UNDECIDED says nothing about indefiniteness; check the spectrum.
    """
    threshold = sufficient_threshold(p.n_pop)
    a, b = sorted(p.weights)[:2]
    met = (a + b >= threshold) if p.exact else (a + b >= float(threshold) - 1e-15)
    return (Guarantee.GUARANTEED_PSD if met else Guarantee.UNDECIDED), threshold


def gamma_det_n3(p1, p2):
    """Closed-form determinant of gamma for N = 3 in terms of p_1, p_2."""
    half = Fraction(1, 2) if isinstance(p1, Fraction) else 0.5
    return 18 * (p1 - half) * (p2 - half) * (p1 + p2 - half)


def psd_report(p: ProbabilityVector, tol: float = DEFAULT_PSD_TOL) -> tuple[str, SpectralReport]:
    """Spectral verdict via psi when all weights are positive, via gamma otherwise."""
    if all(w > 0 for w in p.weights):
        return "psi", symmetric_eigenvalues(psi_matrix(p), tol)
    return "gamma", symmetric_eigenvalues(gamma_matrix(p), tol)
