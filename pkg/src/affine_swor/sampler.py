"""Rejection sampler for the affine design on a stratified population.

When every individual in stratum j has the same weight p_j, the design only
needs the stratum counts M = (M_1, ..., M_K): given M, take a simple random
sample of size M_j inside each stratum and shuffle the n labels.  M is drawn
by rejection from a Multinomial(n; N_j / N) proposal with the envelope
constant C from ``bound_c``.
"""

from __future__ import annotations

import math
from collections.abc import Iterator, Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .coeffs import coeff_pair
from .design import ProbabilityVector, parse_weight

SAFETY_FACTOR = 10**6
PROPOSAL_BATCH = 4096


class PreconditionError(ValueError):
    """A stratified configuration violates a sampler precondition."""


@dataclass(frozen=True)
class StratifiedPopulation:
    stratum_probs: tuple
    stratum_sizes: tuple[int, ...]
    exact: bool = True

    def __post_init__(self):
        if len(self.stratum_probs) != len(self.stratum_sizes) or not self.stratum_probs:
            raise ValueError("need one probability per stratum and at least one stratum")
        if any(s < 1 for s in self.stratum_sizes):
            raise ValueError("stratum sizes must be positive")
        if any(q <= 0 for q in self.stratum_probs):
            raise ValueError("stratum probabilities must be positive")
        total = sum(q * s for q, s in zip(self.stratum_probs, self.stratum_sizes))
        if self.exact and total != 1:
            raise ValueError(f"sum of size * probability is {total}, not 1")
        if not self.exact and abs(total - 1) > 1e-12:
            raise ValueError(f"sum of size * probability is {total!r}, not 1 within 1e-12")

    @classmethod
    def from_values(cls, probs: Sequence, sizes: Sequence[int]) -> "StratifiedPopulation":
        parsed = [parse_weight(v) for v in probs]
        sizes = tuple(int(s) for s in sizes)
        if all(isinstance(v, Fraction) for v in parsed):
            return cls(tuple(parsed), sizes, exact=True)
        return cls(tuple(float(v) for v in parsed), sizes, exact=False)

    @property
    def k(self) -> int:
        return len(self.stratum_sizes)

    @property
    def n_pop(self) -> int:
        return sum(self.stratum_sizes)

    @property
    def offsets(self) -> tuple[int, ...]:
        out, acc = [], 0
        for s in self.stratum_sizes:
            out.append(acc)
            acc += s
        return tuple(out)

    def expanded(self) -> ProbabilityVector:
        weights = tuple(q for q, s in zip(self.stratum_probs, self.stratum_sizes) for _ in range(s))
        return ProbabilityVector(weights, exact=self.exact)

    def stratum_of(self, label: int) -> int:
        """0-based stratum index of a 1-based label."""
        for j, (off, size) in enumerate(zip(self.offsets, self.stratum_sizes)):
            if off < label <= off + size:
                return j
        raise ValueError(f"label {label} outside 1..{self.n_pop}")

    def smallest_sum(self, n: int):
        """Sum of the n smallest individual weights."""
        total, left = 0, n
        for q, s in sorted(zip(self.stratum_probs, self.stratum_sizes)):
            take = min(left, s)
            total += take * q
            left -= take
            if not left:
                break
        return total


def check_population(pop: StratifiedPopulation, n: int) -> None:
    if not 2 <= n < pop.n_pop:
        raise PreconditionError(f"need 2 <= n < N, got n={n}, N={pop.n_pop}")
    if n > min(pop.stratum_sizes):
        raise PreconditionError(f"need n <= min N_j, got n={n} > {min(pop.stratum_sizes)}")
    t = Fraction(n - 1, pop.n_pop - 1)
    s = pop.smallest_sum(n)
    if (s < t) if pop.exact else (s < float(t) - 1e-12):
        raise PreconditionError(
            f"infeasible: n smallest weights sum to {s}, below (n-1)/(N-1) = {t}"
        )


def _check_counts(pop: StratifiedPopulation, n: int, m: Sequence[int]) -> None:
    if len(m) != pop.k:
        raise ValueError(f"counts have length {len(m)}, expected K={pop.k}")
    if any(c < 0 for c in m) or sum(m) != n:
        raise ValueError(f"counts {list(m)} must be nonnegative and sum to n={n}")
    if any(c > s for c, s in zip(m, pop.stratum_sizes)):
        raise ValueError(f"counts {list(m)} exceed stratum sizes {list(pop.stratum_sizes)}")


def compositions(n: int, k: int) -> Iterator[tuple[int, ...]]:
    """All k-tuples of nonnegative integers summing to n, in lexicographic order."""
    if k == 1:
        yield (n,)
        return
    for first in range(n + 1):
        for rest in compositions(n - first, k - 1):
            yield (first,) + rest


def valid_counts(pop: StratifiedPopulation, n: int) -> list[tuple[int, ...]]:
    return [m for m in compositions(n, pop.k) if all(c <= s for c, s in zip(m, pop.stratum_sizes))]


# ---------------------------------------------------------------------------
# pmfs


def f_pmf(pop: StratifiedPopulation, n: int, m: Sequence[int]):
    """Probability that the design puts m_j draws in stratum j.

    Exact Fraction for exact populations; floats through log space otherwise.
    """
    _check_counts(pop, n, m)
    if pop.exact:
        c = coeff_pair(pop.n_pop, n)
        affine = c.a + c.b * sum(mj * q for mj, q in zip(m, pop.stratum_probs))
        ways = math.factorial(n) * math.prod(math.comb(s, mj) for s, mj in zip(pop.stratum_sizes, m))
        return ways * affine
    return math.exp(log_f(pop, n, m))


def log_f(pop: StratifiedPopulation, n: int, m: Sequence[int]) -> float:
    n_pop = pop.n_pop
    excess = sum(mj * float(q) for mj, q in zip(m, pop.stratum_probs)) - (n - 1) / (n_pop - 1)
    if excess <= 0:
        return -math.inf
    log_b = math.lgamma(n_pop - n) - math.lgamma(n_pop - 1)
    log_ways = math.lgamma(n + 1) + sum(
        math.lgamma(s + 1) - math.lgamma(mj + 1) - math.lgamma(s - mj + 1)
        for s, mj in zip(pop.stratum_sizes, m)
    )
    return log_ways + log_b + math.log(excess)


def g_pmf(pop: StratifiedPopulation, n: int, m: Sequence[int]):
    """Multinomial(n; N_j / N) mass of m."""
    if len(m) != pop.k or any(c < 0 for c in m) or sum(m) != n:
        raise ValueError(f"counts {list(m)} must be nonnegative and sum to n={n}")
    coef = math.factorial(n) // math.prod(math.factorial(c) for c in m)
    return coef * math.prod(Fraction(s, pop.n_pop) ** c for s, c in zip(pop.stratum_sizes, m))


def log_g(pop: StratifiedPopulation, n: int, m: Sequence[int]) -> float:
    out = math.lgamma(n + 1)
    for s, c in zip(pop.stratum_sizes, m):
        out += c * math.log(s / pop.n_pop) - math.lgamma(c + 1)
    return out


def log_h(pop: StratifiedPopulation, n: int, m: Sequence[int]) -> float:
    """log f(m)/g(m); -inf where f vanishes."""
    if any(c > s for c, s in zip(m, pop.stratum_sizes)):
        return -math.inf
    return log_f(pop, n, m) - log_g(pop, n, m)


# ---------------------------------------------------------------------------
# Bounds


@dataclass(frozen=True)
class EnvelopeBound:
    value: float
    log_value: float
    approx: float


def bound_c(pop: StratifiedPopulation, n: int) -> EnvelopeBound:
    """Envelope C >= f(m)/g(m) for every m, plus the rough n*omega*exp(n^2/N)."""
    n_pop = pop.n_pop
    if any(s <= n for s in pop.stratum_sizes):
        raise PreconditionError(f"bound needs n < N_j for every stratum (n={n})")
    if pop.k == 1:
        # f = g = 1: the proposal is the target, so the tight envelope is 1
        return EnvelopeBound(1.0, 0.0, n * math.exp(n * n / n_pop))
    if n_pop <= n + 2:
        raise PreconditionError(f"bound needs N > n + 2 (N={n_pop}, n={n})")
    per_stratum = sum(
        n**3 / (s * (s - n)) + n / (s - n) + 1 / (144 * s * s) for s in pop.stratum_sizes
    )
    overall = (n * n + 1 / 12) / (n_pop - n - 2) + 1.5 * n / (n_pop - 2)
    probs = [float(q) for q in pop.stratum_probs]
    linear = n_pop * (n * max(probs) - (n - 1) / (n_pop - 1))
    log_value = per_stratum + overall + math.log(linear)
    omega = max(probs) / min(probs)
    return EnvelopeBound(math.exp(log_value), log_value, n * omega * math.exp(n * n / n_pop))


def log_falling_ratio(r: int, s: int) -> float:
    """log((s-r)!/s!) by direct summation."""
    return -math.fsum(math.log(k) for k in range(s - r + 1, s + 1))


def log_factorial_ratio_bounds(r: int, s: int) -> tuple[float, float]:
    """Log-space lower and upper bounds on (s-r)!/s! for 1 <= r <= s."""
    if not 1 <= r <= s:
        raise ValueError(f"need 1 <= r <= s, got r={r}, s={s}")
    base = -r * math.log(s)
    if r == s:
        return -math.inf, math.inf
    gap = s - r
    lower = base - r**3 / (s * gap) - 0.5 * r / gap - 1 / (144 * s * s)
    upper = base + (r * r + 1 / 12) / gap - 0.5 * r / s
    return lower, upper


def factorial_ratio_bounds(r: int, s: int) -> tuple[float, float]:
    lo, hi = log_factorial_ratio_bounds(r, s)
    return math.exp(lo), math.exp(hi)


# ---------------------------------------------------------------------------
# Sampling


@dataclass
class RejectionStats:
    bound_c: float
    accepted: int = 0
    proposals: int = 0

    @property
    def empirical_iterations_per_accept(self) -> float:
        return self.proposals / self.accepted if self.accepted else math.nan

    def to_dict(self) -> dict:
        return {
            "accepted": self.accepted,
            "proposals": self.proposals,
            "bound_C": self.bound_c,
            "empirical_iterations_per_accept": self.empirical_iterations_per_accept,
        }


class _Proposals:
    """Buffered multinomial proposals and uniforms from one generator."""

    def __init__(self, rng: np.random.Generator, n: int, lam: np.ndarray):
        self.rng, self.n, self.lam = rng, n, lam
        self._m = np.empty((0, len(lam)), dtype=np.int64)
        self._u = np.empty(0)
        self._i = 0

    def next(self) -> tuple[tuple[int, ...], float]:
        if self._i == len(self._u):
            self._m = self.rng.multinomial(self.n, self.lam, size=PROPOSAL_BATCH)
            self._u = self.rng.random(PROPOSAL_BATCH)
            self._i = 0
        m, u = self._m[self._i], self._u[self._i]
        self._i += 1
        return tuple(int(c) for c in m), float(u)


def draw_stratum_counts(
    pop: StratifiedPopulation,
    n: int,
    rng: np.random.Generator,
    stats: RejectionStats | None = None,
    *,
    _proposals: _Proposals | None = None,
) -> tuple[tuple[int, ...], RejectionStats]:
    """One accepted draw of the stratum counts.

    Accepts a proposal M when U <= f(M) / (C g(M)).
    """
    if stats is None:
        check_population(pop, n)
        stats = RejectionStats(bound_c(pop, n).value)
    source = _proposals or _Proposals(rng, n, np.array(pop.stratum_sizes) / pop.n_pop)
    log_c = math.log(stats.bound_c)
    cap = SAFETY_FACTOR * max(stats.bound_c, 1.0)
    tries = 0
    while True:
        m, u = source.next()
        stats.proposals += 1
        tries += 1
        if u <= math.exp(_cached_log_h(pop, n, m) - log_c):
            stats.accepted += 1
            return m, stats
        if tries > cap:
            raise RuntimeError(f"no acceptance after {tries} proposals; bound C={stats.bound_c:.3g}")


@lru_cache(maxsize=1 << 16)
def _cached_log_h(pop: StratifiedPopulation, n: int, m: tuple[int, ...]) -> float:
    return log_h(pop, n, m)


def expand_sample(pop: StratifiedPopulation, counts: Sequence[int], rng: np.random.Generator) -> list[int]:
    """Turn stratum counts into an ordered sample of distinct 1-based labels."""
    if len(counts) != pop.k or any(c < 0 or c > s for c, s in zip(counts, pop.stratum_sizes)):
        raise ValueError(f"invalid counts {list(counts)}")
    labels = []
    for off, size, c in zip(pop.offsets, pop.stratum_sizes, counts):
        if c:
            picked = rng.choice(size, size=c, replace=False)
            labels.extend(int(off + 1 + i) for i in picked)
    order = rng.permutation(len(labels))
    return [labels[i] for i in order]


def labelled_pmf(pop: StratifiedPopulation, n: int, sample: Sequence[int]):
    """Probability of an ordered labelled sample under counts-then-expand."""
    if len(set(sample)) < len(sample):
        return Fraction(0) if pop.exact else 0.0
    m = [0] * pop.k
    for label in sample:
        m[pop.stratum_of(label)] += 1
    ways = math.factorial(n) * math.prod(math.comb(s, c) for s, c in zip(pop.stratum_sizes, m))
    return f_pmf(pop, n, m) / ways


@dataclass
class StratifiedSampler:
    """Owns a seeded generator; each ``draw`` call consumes one spawned child stream."""

    pop: StratifiedPopulation
    n: int
    seed: int | None = None
    stats: RejectionStats = field(init=False)

    def __post_init__(self):
        check_population(self.pop, self.n)
        self.bound = bound_c(self.pop, self.n)
        self.stats = RejectionStats(self.bound.value)
        self._seeds = np.random.SeedSequence(self.seed)

    def draw_counts(self, count: int) -> list[tuple[int, ...]]:
        rng = np.random.default_rng(self._seeds.spawn(1)[0])
        return self._counts(rng, count)

    def _counts(self, rng: np.random.Generator, count: int) -> list[tuple[int, ...]]:
        source = _Proposals(rng, self.n, np.array(self.pop.stratum_sizes) / self.pop.n_pop)
        return [
            draw_stratum_counts(self.pop, self.n, rng, self.stats, _proposals=source)[0]
            for _ in range(count)
        ]

    def draw(self, count: int) -> list[list[int]]:
        """``count`` independent labelled samples."""
        rng = np.random.default_rng(self._seeds.spawn(1)[0])
        counts = self._counts(rng, count)
        return [expand_sample(self.pop, m, rng) for m in counts]
