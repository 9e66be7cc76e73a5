"""Exact coefficients of the affine sampling-without-replacement pmf.

For a population of size ``N`` and tuple length ``k`` the pmf on distinct
tuples is ``A + B * (sum of selected weights)`` with

    A = -(k - 1) (N - k - 1)! / (N - 1)!
    B = (N - k - 1)! / (N - 2)!

Everything here is exact rational arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb, factorial


class DomainError(ValueError):
    """Raised when (N, k) lies outside the range where the coefficients exist."""


def _check_range(n_pop: int, k: int) -> None:
    if n_pop < 3:
        raise DomainError(f"population size must be >= 3, got N={n_pop}")
    if not 2 <= k <= n_pop - 1:
        raise DomainError(f"tuple length must satisfy 2 <= k <= N-1, got k={k}, N={n_pop}")


@dataclass(frozen=True)
class CoeffPair:
    a: Fraction
    b: Fraction
    n_pop: int
    k: int

    @property
    def a_tilde(self) -> Fraction:
        return factorial(self.k) * self.a

    @property
    def b_tilde(self) -> Fraction:
        return factorial(self.k) * self.b

    @property
    def threshold(self) -> Fraction:
        """Smallest weight sum ``s`` with ``a + b*s >= 0``; equals (k-1)/(N-1)."""
        return -self.a / self.b

    def as_float(self) -> tuple[float, float]:
        """The single point where coefficients leave exact arithmetic."""
        return float(self.a), float(self.b)


def coeff_pair(n_pop: int, k: int) -> CoeffPair:
    _check_range(n_pop, k)
    a = Fraction(-(k - 1) * factorial(n_pop - k - 1), factorial(n_pop - 1))
    b = Fraction(factorial(n_pop - k - 1), factorial(n_pop - 2))
    return CoeffPair(a=a, b=b, n_pop=n_pop, k=k)


def verify_identities(n_pop: int, k: int) -> list[bool | None]:
    """Check the five coefficient identities exactly.

    Returns one entry per identity; ``None`` marks identities 4 and 5 as not
    applicable when ``k == 2`` (they relate k to k - 1, which needs k - 1 >= 2).
    """
    c = coeff_pair(n_pop, k)
    at, bt = c.a_tilde, c.b_tilde
    n = n_pop
    results: list[bool | None] = [
        at * comb(n, k) + bt * comb(n - 1, k - 1) == 1,
        at * comb(n - 1, k - 1) + bt * comb(n - 2, k - 2) == 0,
        bt * comb(n - 2, k - 1) == k,
    ]
    if k >= 3:
        prev = coeff_pair(n_pop, k - 1)
        results.append(c.b * (n - k) == prev.b)
        results.append(c.a * (n - k + 1) + c.b == prev.a)
    else:
        results.extend([None, None])
    return results
