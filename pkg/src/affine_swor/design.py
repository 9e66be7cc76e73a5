"""Affine sampling-without-replacement designs.

A design for a probability vector ``p`` over labels ``1..N`` and sample size
``n`` assigns every ordered tuple of ``n`` distinct labels the probability
``A + B * sum(p over the tuple)`` (repeats get zero).  It exists exactly when
the ``n`` smallest weights sum to at least ``(n-1)/(N-1)``.

Labels are 1-based throughout the public API.
"""

from __future__ import annotations

import math
from collections.abc import Iterator, Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, permutations
from numbers import Real

from .coeffs import CoeffPair, coeff_pair

FLOAT_SUM_TOL = 1e-12
FLOAT_CLAMP_TOL = 1e-10
DEFAULT_SUPPORT_CAP = 10**7


class InfeasibleDesign(ValueError):
    """The n smallest weights fall short of (n-1)/(N-1)."""

    def __init__(self, message: str, subset: tuple[int, ...], subset_sum, threshold):
        super().__init__(message)
        self.subset = subset
        self.subset_sum = subset_sum
        self.threshold = threshold


class SupportTooLarge(RuntimeError):
    pass


def parse_weight(value) -> Fraction | float:
    """Turn a JSON-ish scalar into a Fraction when it can be exact.

    Strings ("3/8", "0.415") and ints become Fractions; floats stay floats.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("boolean is not a probability")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    if isinstance(value, Real):
        return float(value)
    raise TypeError(f"cannot interpret {value!r} as a probability")


@dataclass(frozen=True)
class ProbabilityVector:
    weights: tuple
    exact: bool = field(default=True)

    def __post_init__(self):
        n_pop = len(self.weights)
        if n_pop < 3:
            raise ValueError(f"population size must be >= 3, got N={n_pop}")
        if any(w < 0 for w in self.weights):
            bad = next(i for i, w in enumerate(self.weights, 1) if w < 0)
            raise ValueError(f"weight of label {bad} is negative")
        total = sum(self.weights)
        if self.exact:
            if total != 1:
                raise ValueError(f"weights sum to {total}, not 1")
        elif abs(total - 1.0) > FLOAT_SUM_TOL:
            raise ValueError(f"weights sum to {total!r}, not 1 within {FLOAT_SUM_TOL}")

    @classmethod
    def from_values(cls, values: Sequence) -> "ProbabilityVector":
        """Exact when every entry is exact (int, Fraction, string); float otherwise."""
        parsed = [parse_weight(v) for v in values]
        if all(isinstance(w, Fraction) for w in parsed):
            return cls(tuple(parsed), exact=True)
        return cls(tuple(float(w) for w in parsed), exact=False)

    @classmethod
    def uniform(cls, n_pop: int) -> "ProbabilityVector":
        return cls(tuple(Fraction(1, n_pop) for _ in range(n_pop)), exact=True)

    @property
    def n_pop(self) -> int:
        return len(self.weights)

    def __len__(self) -> int:
        return len(self.weights)

    def __getitem__(self, label: int):
        """Weight of a 1-based label."""
        return self.weights[label - 1]

    def to_float(self) -> "ProbabilityVector":
        if not self.exact:
            return self
        return ProbabilityVector(tuple(float(w) for w in self.weights), exact=False)

    def as_floats(self) -> list[float]:
        return [float(w) for w in self.weights]

    def smallest_labels(self, n: int) -> tuple[int, ...]:
        # sort by value, then label
        order = sorted(range(1, self.n_pop + 1), key=lambda i: (self.weights[i - 1], i))
        return tuple(order[:n])


def _check_sample_size(n_pop: int, n: int) -> None:
    if not 2 <= n < n_pop:
        raise ValueError(f"sample size must satisfy 2 <= n < N, got n={n}, N={n_pop}")


def existence_check(p: ProbabilityVector, n: int) -> tuple[bool, Fraction | float]:
    """Feasibility of the affine design and its margin (smallest n-sum minus threshold)."""
    _check_sample_size(p.n_pop, n)
    labels = p.smallest_labels(n)
    total = sum(p[i] for i in labels)
    threshold = Fraction(n - 1, p.n_pop - 1)
    if p.exact:
        margin = total - threshold
        return margin >= 0, margin
    margin = total - float(threshold)
    return margin >= -FLOAT_SUM_TOL, margin


@dataclass(frozen=True)
class SubsetWeight:
    subset: frozenset
    q: Fraction | float


@dataclass(frozen=True)
class AffineDesign:
    p: ProbabilityVector
    n_sample: int
    coeffs: CoeffPair

    @property
    def n_pop(self) -> int:
        return self.p.n_pop

    @property
    def exact(self) -> bool:
        return self.p.exact

    def _coefficients(self, k: int):
        c = self.coeffs if k == self.n_sample else coeff_pair(self.n_pop, k)
        return (c.a, c.b) if self.exact else c.as_float()

    def _affine(self, k: int, labels: Sequence[int]):
        a, b = self._coefficients(k)
        value = a + b * sum(self.p[u] for u in labels)
        if not self.exact and -FLOAT_CLAMP_TOL <= value < 0:
            value = 0.0
        return value

    def _check_labels(self, labels: Sequence[int]) -> None:
        for u in labels:
            if not (isinstance(u, int) and 1 <= u <= self.n_pop):
                raise ValueError(f"label {u!r} outside 1..{self.n_pop}")

    def _zero(self):
        return Fraction(0) if self.exact else 0.0

    def joint_pmf(self, indices: Sequence[int]):
        if len(indices) != self.n_sample:
            raise ValueError(f"expected {self.n_sample} labels, got {len(indices)}")
        self._check_labels(indices)
        if len(set(indices)) < len(indices):
            return self._zero()
        return self._affine(self.n_sample, indices)

    def bivariate_marginal(self, u: int, v: int):
        """P[I_i = u, I_j = v] for any i != j; uses the (N, 2) coefficients."""
        self._check_labels((u, v))
        if u == v:
            return self._zero()
        return self._affine(2, (u, v))

    def k_marginal(self, k: int, indices: Sequence[int]):
        """Probability of the first k draws being ``indices``.

        For k >= 2 this is the closed form with the (N, k) coefficients.  For
        k = 1 it is obtained by summing the bivariate marginal over the
        second label, which recovers p_u.
        """
        if not 1 <= k <= self.n_sample:
            raise ValueError(f"k must satisfy 1 <= k <= n={self.n_sample}, got {k}")
        if len(indices) != k:
            raise ValueError(f"expected {k} labels, got {len(indices)}")
        self._check_labels(indices)
        if k == 1:
            (u,) = indices
            return sum(self.bivariate_marginal(u, v) for v in range(1, self.n_pop + 1))
        if len(set(indices)) < k:
            return self._zero()
        return self._affine(k, indices)

    def pairwise_matrix(self) -> list[list]:
        """N x N table of bivariate marginals, row u / column v (0-based positions)."""
        labels = range(1, self.n_pop + 1)
        return [[self.bivariate_marginal(u, v) for v in labels] for u in labels]

    def subset_weights(self) -> list[SubsetWeight]:
        """Unordered-sample probabilities Q(F) = n! * pmf of any ordering of F."""
        scale = math.factorial(self.n_sample)
        out = []
        for subset in combinations(range(1, self.n_pop + 1), self.n_sample):
            out.append(SubsetWeight(frozenset(subset), scale * self._affine(self.n_sample, subset)))
        return out

    def support_size(self) -> int:
        return math.perm(self.n_pop, self.n_sample)

    def enumerate_support(self, cap: int = DEFAULT_SUPPORT_CAP) -> Iterator[tuple[tuple[int, ...], object]]:
        """Yield every ordered tuple with positive probability, with its probability."""
        if self.support_size() > cap:
            raise SupportTooLarge(
                f"{self.support_size()} ordered tuples exceed the enumeration cap {cap}"
            )
        for subset, weight in ((w.subset, w.q) for w in self.subset_weights()):
            if weight <= 0:
                continue
            prob = weight / math.factorial(self.n_sample)
            for tup in permutations(sorted(subset)):
                yield tup, prob


def build_design(p: ProbabilityVector, n: int) -> AffineDesign:
    ok, margin = existence_check(p, n)
    if not ok:
        labels = p.smallest_labels(n)
        subset_sum = sum(p[i] for i in labels)
        threshold = Fraction(n - 1, p.n_pop - 1)
        raise InfeasibleDesign(
            f"weights of labels {list(labels)} sum to {subset_sum}, below (n-1)/(N-1) = {threshold}",
            labels,
            subset_sum,
            threshold,
        )
    return AffineDesign(p=p, n_sample=n, coeffs=coeff_pair(p.n_pop, n))
