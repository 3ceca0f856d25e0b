"""Fan averaging: stratification bounds, level sampling, and collapse.

A level is a finite set of positive-width primes.  A fan D(m, k, X)
collects the levels with m primes, total width k, and j-th smallest
norm below the stratification bound L_j(X), where the bounds grow by
the recursion

    L_1 = R(X),    L_{n+1} = max(R(L_1 * ... * L_n), X * L_n)

for a convergence-rate function R.  Averaging the rank distribution
over a fan and letting X grow collapses onto the k-th power of the
governing operator applied to the empty-level distribution; in this
synthetic model the one-step kernels are exact, so the collapse is an
algebraic identity in exact mode and a measurable residual in
sampled mode.

Norm products overflow any fixed-width float for modest m, so bounds
and norms are compared in the log domain throughout.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Literal

import numpy as np

from .distributions import (
    BandedOperator,
    Density,
    _density_unchecked,
    apply,
    l1_distance,
    power,
)
from .errors import (
    EmptyFan,
    InfeasibleFan,
    NotSubset,
    ValidationError,
)
from .lagrangian import LagrangianParams, build_lagrangian
from .twists import PrimeSite, TStepSampler, exact_step_kernel, simulate_walks

__all__ = [
    "ConvergenceRate",
    "FanSpec",
    "Level",
    "make_level",
    "strat_bounds",
    "level_membership",
    "width_pattern",
    "sample_levels",
    "enumerate_levels",
    "level_rank_distribution",
    "fan_distribution",
    "fan_collapse_residual",
    "mixture_bound_check",
    "fan_union_distribution",
    "step_average_gap",
]

Mode = Literal["exact_kernel", "sampled_at_Y"]

_PROPOSAL_CAP = 500_000
_ENUMERATION_CAP = 2_000_000


@dataclass(frozen=True)
class ConvergenceRate:
    """A nondecreasing function R with R(Y) >= Y, evaluated in log domain.

    Families: ``power`` is R(Y) = C * Y**a and ``exponential`` is
    R(Y) = C * exp(a * Y); both require C >= 1 and a >= 1 so the lower
    bound R(Y) >= Y holds on [1, inf).
    """

    family: Literal["power", "exponential"]
    coeff: float = 1.0
    exponent: float = 1.0

    def __post_init__(self) -> None:
        if self.family not in ("power", "exponential"):
            raise ValidationError(f"unknown rate family {self.family!r}")
        if self.coeff < 1.0 or self.exponent < 1.0:
            raise ValidationError(
                f"rate requires C >= 1 and a >= 1, got C={self.coeff}, a={self.exponent}"
            )

    def log_value(self, log_y: float) -> float:
        """log R(Y) as a function of log Y (log Y >= 0)."""
        if log_y < 0:
            raise ValidationError(f"rate is defined on Y >= 1, got log Y = {log_y}")
        if self.family == "power":
            return math.log(self.coeff) + self.exponent * log_y
        value = math.log(self.coeff) + self.exponent * math.exp(log_y)
        if math.isinf(value):
            raise OverflowError("exponential rate overflows the log domain")
        return value


def strat_bounds(rate: ConvergenceRate, m: int, X: float) -> tuple[float, ...]:
    """Log-domain stratification bounds (log L_1, ..., log L_{m+1}).

    One extra bound beyond the m slots is kept so a further prime can
    be appended to a full level in the averaging experiments.
    """
    if X < 1.0:
        raise ValidationError(f"X must be >= 1, got {X}")
    if m < 0 or m > 1000:
        raise ValidationError(f"m must be in 0..1000, got {m}")
    log_x = math.log(X)
    logs = [rate.log_value(log_x)]
    for n in range(1, m + 1):
        logs.append(max(rate.log_value(sum(logs[:n])), log_x + logs[n - 1]))
    return tuple(logs)


@dataclass(frozen=True)
class FanSpec:
    """(m, k, X) plus the log-domain bounds L_1..L_{m+1}."""

    m: int
    k: int
    X: float
    log_bounds: tuple[float, ...]

    def __post_init__(self) -> None:
        if self.m < 0 or self.k < 0:
            raise ValidationError(f"m and k must be >= 0, got m={self.m}, k={self.k}")
        if len(self.log_bounds) != self.m + 1:
            raise ValidationError(
                f"expected {self.m + 1} bounds, got {len(self.log_bounds)}"
            )
        if any(b > a for a, b in zip(self.log_bounds[1:], self.log_bounds)):
            raise ValidationError("stratification bounds must be nondecreasing")

    @classmethod
    def from_rate(cls, rate: ConvergenceRate, m: int, k: int, X: float) -> "FanSpec":
        return cls(m, k, float(X), strat_bounds(rate, m, X))


@dataclass(frozen=True)
class Level:
    """A set of distinct positive-width sites, stored sorted by norm."""

    sites: tuple[PrimeSite, ...]

    @property
    def width(self) -> int:
        return sum(site.width for site in self.sites)

    @property
    def log_norm(self) -> float:
        return sum(math.log(site.norm) for site in self.sites)


def make_level(sites) -> Level:
    """Canonicalize and validate a collection of sites as a level."""
    ordered = tuple(sorted(sites, key=lambda s: (s.norm, s.id)))
    if any(site.width == 0 for site in ordered):
        raise ValidationError("levels contain only positive-width sites")
    if len({site.id for site in ordered}) != len(ordered):
        raise ValidationError("level sites must be distinct")
    return Level(ordered)


def level_membership(level: Level, spec: FanSpec) -> bool:
    """Sorted-slot test: j-th smallest norm below L_j, shape (m, k) exact."""
    if len(level.sites) != spec.m or level.width != spec.k:
        return False
    for site, log_bound in zip(level.sites, spec.log_bounds):
        if not math.log(site.norm) < log_bound:
            return False
    return True


def width_pattern(m: int, k: int) -> tuple[int, int]:
    """Counts (n1, n2) of width-1 and width-2 sites realizing (m, k).

    Solving n1 + n2 = m, n1 + 2 n2 = k forces n1 = 2m - k and
    n2 = k - m, so the shape is feasible iff m <= k <= 2m.
    """
    n1, n2 = 2 * m - k, k - m
    if n1 < 0 or n2 < 0:
        raise InfeasibleFan(f"(m, k) = ({m}, {k}) needs m <= k <= 2m")
    return n1, n2


def _greedy_minimal(pool1, n1, pool2, n2) -> Level:
    return make_level(pool1[:n1] + pool2[:n2])


def _sample_levels_stats(stream, spec, count, rng):
    """Rejection-sample levels; also return proposal statistics.

    Proposals draw n1 width-1 sites and n2 width-2 sites uniformly from
    the pools below the largest bound, so acceptance is uniform over the
    fan; (levels, proposals, superset_size) supports estimating the fan
    size as superset_size * accepted / proposals.
    """
    if count < 0:
        raise ValidationError(f"count must be >= 0, got {count}")
    n1, n2 = width_pattern(spec.m, spec.k)
    if spec.m == 0:
        return [make_level(())] * count, count, 1
    all1 = [s for s in stream if s.width == 1]
    all2 = [s for s in stream if s.width == 2]
    if len(all1) < n1 or len(all2) < n2:
        raise InfeasibleFan(
            f"stream has {len(all1)} width-1 and {len(all2)} width-2 sites; "
            f"(m, k) = ({spec.m}, {spec.k}) needs {n1} and {n2}"
        )
    cutoff = spec.log_bounds[spec.m - 1]
    pool1 = sorted(
        (s for s in all1 if math.log(s.norm) < cutoff), key=lambda s: s.norm
    )
    pool2 = sorted(
        (s for s in all2 if math.log(s.norm) < cutoff), key=lambda s: s.norm
    )
    if (
        len(pool1) < n1
        or len(pool2) < n2
        or not level_membership(_greedy_minimal(pool1, n1, pool2, n2), spec)
    ):
        raise EmptyFan(
            f"no level in this stream satisfies (m, k, X) = "
            f"({spec.m}, {spec.k}, {spec.X})"
        )
    superset = math.comb(len(pool1), n1) * math.comb(len(pool2), n2)
    levels: list[Level] = []
    proposals = 0
    while len(levels) < count:
        proposals += 1
        if proposals > _PROPOSAL_CAP:
            raise EmptyFan(
                f"acceptance below {count / _PROPOSAL_CAP:.2e} sampling "
                f"(m, k) = ({spec.m}, {spec.k}); fan is effectively empty"
            )
        picks = []
        if n1:
            picks.extend(pool1[j] for j in rng.choice(len(pool1), size=n1, replace=False))
        if n2:
            picks.extend(pool2[j] for j in rng.choice(len(pool2), size=n2, replace=False))
        candidate = make_level(picks)
        if level_membership(candidate, spec):
            levels.append(candidate)
    return levels, proposals, superset


def sample_levels(stream, spec: FanSpec, count: int, rng: np.random.Generator) -> list[Level]:
    """Draw ``count`` levels uniformly from the fan (with replacement)."""
    levels, _, _ = _sample_levels_stats(stream, spec, count, rng)
    return levels


def enumerate_levels(stream, spec: FanSpec) -> list[Level]:
    """All members of the fan, for small streams (<= 200 sites)."""
    from itertools import combinations

    if len(stream) > 200:
        raise ValidationError(
            f"enumeration is limited to streams of <= 200 sites, got {len(stream)}"
        )
    n1, n2 = width_pattern(spec.m, spec.k)
    if spec.m == 0:
        return [make_level(())]
    pool1 = [s for s in stream if s.width == 1]
    pool2 = [s for s in stream if s.width == 2]
    total = math.comb(len(pool1), n1) * math.comb(len(pool2), n2)
    if total > _ENUMERATION_CAP:
        raise ValidationError(f"enumeration would visit {total} candidates")
    out = []
    for ones in combinations(pool1, n1):
        for twos in combinations(pool2, n2):
            candidate = make_level(ones + twos)
            if level_membership(candidate, spec):
                out.append(candidate)
    return out


@lru_cache(maxsize=None)
def _cached_kernel(i: int, p: int, N: int) -> BandedOperator:
    return exact_step_kernel(i, p, N)


@lru_cache(maxsize=None)
def _cached_power(p: int, N: int, k: int) -> BandedOperator:
    return power(build_lagrangian(LagrangianParams(p, N)), k)


def level_rank_distribution(
    level: Level,
    initial: Density,
    mode: Mode,
    p: int,
    rng: np.random.Generator | None = None,
    *,
    walks: int = 10_000,
    sampler: TStepSampler | None = None,
) -> Density:
    """Rank distribution after twisting through every site of the level.

    Exact mode composes the one-step kernels (order-independent, since
    they are all powers of the same operator).  Sampled mode runs
    ``walks`` Monte Carlo walks, optionally through a cutoff-perturbed
    sampler, and returns the empirical density.
    """
    if mode == "exact_kernel":
        out = initial
        for site in level.sites:
            out = apply(_cached_kernel(site.width, p, initial.N), out)
        return out
    if mode == "sampled_at_Y":
        if rng is None:
            raise ValidationError("sampled mode needs an rng")
        widths = [site.width for site in level.sites]
        return simulate_walks(widths, initial, p, walks, rng, sampler)
    raise ValidationError(f"unknown mode {mode!r}")


def fan_distribution(
    levels: list[Level],
    initial: Density,
    mode: Mode,
    p: int,
    rng: np.random.Generator | None = None,
    *,
    walks: int = 100_000,
    sampler: TStepSampler | None = None,
    threads: int = 1,
) -> Density:
    """Equal-weight average of the level distributions.

    Equal weights are correct because every level of a fixed fan has
    the same number of sites, hence the same twist-fiber cardinality.
    In sampled mode the walk budget is split evenly across levels and
    each level gets its own spawned RNG substream, so the result does
    not depend on thread count or scheduling.
    """
    if not levels:
        raise EmptyFan("fan average over an empty list of levels")
    if mode == "exact_kernel":
        stack = [level_rank_distribution(lv, initial, mode, p).values for lv in levels]
        return _density_unchecked(np.mean(stack, axis=0))
    if rng is None:
        raise ValidationError("sampled mode needs an rng")
    walks_per_level = max(1, walks // len(levels))
    substreams = rng.spawn(len(levels))
    def one(job):
        level, child = job
        return level_rank_distribution(
            level, initial, mode, p, child, walks=walks_per_level, sampler=sampler
        ).values
    jobs = list(zip(levels, substreams))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            stack = list(pool.map(one, jobs))
    else:
        stack = [one(job) for job in jobs]
    return _density_unchecked(np.mean(stack, axis=0))


def fan_collapse_residual(
    spec: FanSpec,
    stream,
    initial: Density,
    mode: Mode,
    p: int,
    rng: np.random.Generator,
    *,
    levels: int = 30,
    walks: int = 100_000,
    y: float | None = None,
    sampler: TStepSampler | None = None,
    threads: int = 1,
) -> float:
    """l1 gap between the fan average and the governed power M_L**k.

    The fan side goes through the twist-process kernels (or sampled
    walks); the target side is the k-th matrix power of the Lagrangian
    operator, so the two sides are independent constructions.  Exact
    mode should sit at rounding level; sampled mode shrinks as the
    cutoff y grows.
    """
    sampled = sample_levels(stream, spec, levels, rng)
    if mode == "sampled_at_Y" and sampler is None:
        sampler = TStepSampler(p, y, seed=int(rng.integers(2**62)))
    fan = fan_distribution(
        sampled, initial, mode, p, rng, walks=walks, sampler=sampler, threads=threads
    )
    target = apply(_cached_power(p, initial.N, spec.k), initial)
    return l1_distance(fan, target)


def mixture_bound_check(
    B: list[Level],
    B_prime: list[Level],
    initial: Density,
    p: int,
) -> tuple[float, float]:
    """Compare |E_B - E_B'| with its mixture bound 2 |B' - B| / |B|.

    B must be a sub-multiset of B' and all levels must have the same
    number of sites (equal twist-fiber weights).  Distributions are
    computed in exact mode; returns (lhs, rhs).
    """
    from collections import Counter

    if not B:
        raise ValidationError("B must be nonempty")
    counts_b, counts_bp = Counter(B), Counter(B_prime)
    if counts_b - counts_bp:
        raise NotSubset("B is not a sub-multiset of B'")
    if len({len(level.sites) for level in B_prime}) > 1:
        raise ValidationError("levels must all have the same number of sites")
    e_b = fan_distribution(B, initial, "exact_kernel", p)
    e_bp = fan_distribution(B_prime, initial, "exact_kernel", p)
    rhs = 2.0 * (len(B_prime) - len(B)) / len(B)
    return l1_distance(e_b, e_bp), rhs


def fan_union_distribution(
    stream,
    m_max: int,
    k: int,
    X: float,
    rate: ConvergenceRate,
    initial: Density,
    mode: Mode,
    p: int,
    rng: np.random.Generator,
    *,
    levels_per_slice: int = 30,
    walks: int = 100_000,
    y: float | None = None,
    threads: int = 1,
) -> Density:
    """Average over the union of fans with fixed total width k.

    Feasible slice sizes are ceil(k/2) <= m <= min(k, m_max); slices the
    stream cannot realize are skipped.  Slices are weighted by their
    estimated fan sizes (proposal superset size times acceptance rate).
    In exact mode every slice gives the same distribution, so the
    weights are irrelevant there, which is part of the point being
    verified.
    """
    sampler = None
    if mode == "sampled_at_Y":
        sampler = TStepSampler(p, y, seed=int(rng.integers(2**62)))
    slices = []
    for m in range((k + 1) // 2, min(k, m_max) + 1) if k > 0 else [0]:
        spec = FanSpec.from_rate(rate, m, k, X)
        try:
            levels, proposals, superset = _sample_levels_stats(
                stream, spec, levels_per_slice, rng
            )
        except (InfeasibleFan, EmptyFan):
            continue
        weight = superset * (len(levels) / proposals)
        slices.append((levels, weight))
    if not slices:
        raise EmptyFan(f"no feasible fan slice for k = {k} with m <= {m_max}")
    walks_per_slice = max(1, walks // len(slices))
    total = np.zeros(initial.N)
    total_weight = 0.0
    for levels, weight in slices:
        dist = fan_distribution(
            levels, initial, mode, p, rng,
            walks=walks_per_slice, sampler=sampler, threads=threads,
        )
        total = total + weight * dist.as_float()
        total_weight += weight
    return _density_unchecked(total / total_weight)


def step_average_gap(
    level: Level,
    i: int,
    initial: Density,
    p: int,
    y: float,
    rng: np.random.Generator,
    *,
    walks: int = 4000,
) -> tuple[float, float, float]:
    """One appended-prime trial against the one-step averaging bound.

    Starting from the exact distribution E over the given level, append
    one width-i step sampled at cutoff y and measure the l1 gap to the
    governed target M_L**i applied to E.  Returns (measured, bias_bound,
    mc_halfwidth) where bias_bound = (b+1)/y with b the top of E's
    support, and mc_halfwidth is the summed per-cell binomial standard
    error of the Monte Carlo estimate.
    """
    base = level_rank_distribution(level, initial, "exact_kernel", p)
    target = apply(_cached_power(p, initial.N, i), base)
    sampler = TStepSampler(p, y, seed=int(rng.integers(2**62)))
    empirical = simulate_walks([i], base, p, walks, rng, sampler)
    b = int(np.nonzero(base.as_float())[0].max())
    bias_bound = (b + 1) / y
    t = target.as_float()
    mc_halfwidth = float(np.sqrt(t * (1.0 - t) / walks).sum())
    return l1_distance(empirical, target), bias_bound, mc_halfwidth
