"""Synthetic twist process: prime stream, t-sampler, and rank updates.

The model replaces number-field arithmetic with three ingredients that
keep exactly the statistics that matter:

* a stream of synthetic primes, each with a norm and a width in
  {0, 1, 2} (the width is how much the rank can move when twisting at
  that prime);
* the distribution of the localization dimension t at a prime of width
  i given the current rank r, with rows

      i = 1:  (p**-r,  1 - p**-r)                          over t in {0, 1}
      i = 2:  (p**-2r, (p+1)(p**-r - p**-2r),
               1 - (p+1)p**-r + p**(1-2r))                 over t in {0, 1, 2};

* the rank update given (i, t): width 1 moves rank -1 on t = 1 and +1
  on t = 0; width 2 moves -2 on t = 2, stays on t = 1, and on t = 0
  moves +2 for exactly p-1 of the p(p-1) fiber characters (probability
  1/p) staying put otherwise.

Composing the two laws gives the exact one-step kernels: width 1
reproduces the Lagrangian operator M_L and width 2 reproduces M_L**2.
That identity is the whole point, and it is built here by an
independent route (table times conditional law, never a matrix power)
so the two constructions can be compared.

Sampling at a finite cutoff Y is modeled by perturbing each t-row once
per (i, r) by at most 1/Y in l1, which realizes the convergence-rate
inequality the averaging bounds assume.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .distributions import (
    BandedOperator,
    Density,
    _density_unchecked,
    _freeze,
)
from .errors import (
    DegenerateConfig,
    InvalidPrime,
    InvalidT,
    TruncationMismatch,
    ValidationError,
)
from .lagrangian import _is_prime

__all__ = [
    "S3_WIDTH_DENSITIES",
    "PrimeSite",
    "StreamConfig",
    "RankWalkState",
    "synth_prime_stream",
    "t_distribution",
    "sample_t",
    "twist_step",
    "exact_step_kernel",
    "TStepSampler",
    "sample_transitions",
    "step_ranks",
    "simulate_walks",
]

# Width frequencies for the generic Galois-image case: proportions of
# group elements acting with 1, 2, or 0 fixed lines among the three
# two-element classes of S3 permutations (order 3, order 2, identity).
S3_WIDTH_DENSITIES = (1.0 / 3.0, 1.0 / 2.0, 1.0 / 6.0)


@dataclass(frozen=True)
class PrimeSite:
    """One synthetic prime: unique id, norm > 1, width in {0, 1, 2}."""

    id: int
    norm: float
    width: int

    def __post_init__(self) -> None:
        if not self.norm > 1.0:
            raise ValidationError(f"site norm must be > 1, got {self.norm}")
        if self.width not in (0, 1, 2):
            raise ValidationError(f"site width must be 0, 1 or 2, got {self.width}")


@dataclass(frozen=True)
class StreamConfig:
    """Width densities (d0, d1, d2), expected sites per unit norm, seed.

    d2 must be positive: the width-2 primes are the ones that always
    exist in the arithmetic being modeled, and several feasibility
    statements assume them.
    """

    width_densities: tuple[float, float, float] = S3_WIDTH_DENSITIES
    growth_rate: float = 1.0
    seed: int = 0

    def __post_init__(self) -> None:
        d = self.width_densities
        if len(d) != 3 or any(x < 0 for x in d):
            raise DegenerateConfig(f"width densities must be 3 non-negative values, got {d}")
        if abs(sum(d) - 1.0) > 1e-12:
            raise DegenerateConfig(f"width densities sum to {sum(d)}, not 1")
        if not d[2] > 0:
            raise DegenerateConfig("d_2 must be positive (width-2 primes always exist)")

    def to_json_dict(self) -> dict:
        return {
            "densities": list(self.width_densities),
            "growth_rate": self.growth_rate,
            "seed": self.seed,
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "StreamConfig":
        known = {"densities", "growth_rate", "seed"}
        unknown = set(data) - known
        if unknown:
            raise ValidationError(f"unknown stream fields: {sorted(unknown)}")
        return cls(
            width_densities=tuple(data.get("densities", S3_WIDTH_DENSITIES)),
            growth_rate=float(data.get("growth_rate", 1.0)),
            seed=int(data.get("seed", 0)),
        )


@dataclass(frozen=True)
class RankWalkState:
    """Current rank plus its parity, tracked redundantly as a cross-check."""

    rank: int
    parity_check: int

    def __post_init__(self) -> None:
        if self.rank < 0:
            raise ValidationError(f"rank must be >= 0, got {self.rank}")
        if self.parity_check != self.rank % 2:
            raise ValidationError(
                f"parity_check {self.parity_check} disagrees with rank {self.rank}"
            )

    @classmethod
    def at(cls, rank: int) -> "RankWalkState":
        return cls(rank, rank % 2)


def synth_prime_stream(config: StreamConfig, X: float) -> list[PrimeSite]:
    """Generate the synthetic primes of norm < X, sorted by norm.

    Norms follow a unit-free point process with the configured expected
    number of sites per unit norm (exponential spacings), so the count
    below X grows linearly in X.  Widths are i.i.d. from the configured
    densities.  Deterministic given the config seed, and consistent
    across cutoffs: two calls with the same config agree on every site
    below the smaller X.
    """
    if config.growth_rate <= 0:
        raise DegenerateConfig(f"growth_rate must be > 0, got {config.growth_rate}")
    rng = np.random.default_rng(config.seed)
    sites: list[PrimeSite] = []
    position = 1.0
    # Fixed block size: the rng consumption per block never depends on
    # X, which is what makes the streams prefix-consistent.
    block = 4096
    while position < X:
        spacings = rng.exponential(1.0 / config.growth_rate, size=block)
        widths = rng.choice(3, size=block, p=list(config.width_densities))
        for s, w in zip(spacings, widths):
            position += s
            if position >= X:
                break
            sites.append(PrimeSite(len(sites), float(position), int(w)))
    return sites


def t_distribution(i: int, r: int, p: int, *, exact: bool = False):
    """Distribution of the localization dimension t over {0, ..., i}.

    Returns a float array, or a tuple of Fractions with ``exact=True``
    (rows then sum to 1 exactly).  The rows put no mass on t > r, so
    the rank floor is automatic.
    """
    if i not in (1, 2):
        raise ValidationError(f"width i must be 1 or 2, got {i}")
    if r < 0:
        raise ValidationError(f"rank r must be >= 0, got {r}")
    if not _is_prime(p):
        raise InvalidPrime(f"p = {p} is not prime")
    q = Fraction(1, p**r)
    if i == 1:
        row = (q, 1 - q)
    else:
        row = (q * q, (p + 1) * (q - q * q), 1 - (p + 1) * q + p * q * q)
    if exact:
        return row
    return np.array([float(x) for x in row])


def sample_t(i: int, r: int, p: int, rng: np.random.Generator) -> int:
    """One draw of t from the exact row."""
    return int(rng.choice(i + 1, p=t_distribution(i, r, p)))


def twist_step(
    state: RankWalkState,
    i: int,
    t: int,
    p: int,
    rng: np.random.Generator | None = None,
) -> RankWalkState:
    """Rank update after twisting at one prime of width i with drawn t.

    Width 1 always flips the parity, width 2 never does; both facts are
    carried through parity_check.  The only random branch is width 2
    with t = 0, where the rank rises by 2 with probability 1/p (the p-1
    rank-raising characters among the p(p-1) in the fiber).
    """
    if t < 0 or t > i:
        raise InvalidT(f"t = {t} outside 0..{i}")
    if t > state.rank:
        raise InvalidT(f"t = {t} exceeds current rank {state.rank}")
    if i == 1:
        new_rank = state.rank - 1 if t == 1 else state.rank + 1
        return RankWalkState(new_rank, (state.parity_check + 1) % 2)
    if i == 2:
        if t == 2:
            new_rank = state.rank - 2
        elif t == 1:
            new_rank = state.rank
        else:
            if rng is None:
                raise ValidationError("width-2 step with t = 0 needs an rng")
            new_rank = state.rank + 2 if rng.random() < 1.0 / p else state.rank
        return RankWalkState(new_rank, state.parity_check)
    raise ValidationError(f"width i must be 1 or 2, got {i}")


def _kernel_row(i: int, r: int, p: int) -> list[tuple[int, Fraction]]:
    # Compose the t-row with the conditional rank law; this is the
    # independent route to the one-step kernel (no matrix powers).
    row = t_distribution(i, r, p, exact=True)
    if i == 1:
        return [(r - 1, row[1]), (r + 1, row[0])]
    up = row[0] * Fraction(1, p)
    stay = row[1] + row[0] * Fraction(p - 1, p)
    return [(r - 2, row[2]), (r, stay), (r + 2, up)]


def exact_step_kernel(i: int, p: int, N: int, *, exact: bool = False) -> BandedOperator:
    """The one-step rank kernel for a width-i prime, on the rank window.

    Built by composing the t-distribution with the conditional rank
    update, so it is independent of the Lagrangian construction; the
    governing identities (width 1 gives M_L, width 2 gives M_L**2)
    are theorems to check, not definitions.  Out-of-window mass at the
    top rows folds down two ranks (width 1: the same fold as the
    Lagrangian; width 2: onto the diagonal), keeping parity behavior.
    """
    if exact:
        matrix = np.full((N, N), Fraction(0), dtype=object)
    else:
        matrix = np.zeros((N, N))
    for r in range(N):
        for target, mass in _kernel_row(i, r, p):
            if mass == 0:
                continue
            while target >= N:
                target -= 2
            value = mass if exact else float(mass)
            matrix[r, target] += value
    return BandedOperator(_freeze(matrix), bandwidth=2 * i, p=p)


class TStepSampler:
    """Draws t values, exactly or with a fixed per-row bias of size <= 1/y.

    With ``y=None`` the sampler uses the exact rows.  With a finite y it
    models sampling the stream below a cutoff: every (i, r) row gets one
    perturbation, drawn deterministically from (seed, i, r), whose total
    l1 size is at most 1/y and which keeps the row a distribution with
    support inside {0, ..., min(i, r)}.  The perturbation is systematic
    (cached, not redrawn), so it behaves like the finite-cutoff bias the
    convergence-rate contract describes rather than extra noise.
    """

    def __init__(self, p: int, y: float | None = None, seed: int = 0):
        if y is not None and y < 2.0:
            raise ValidationError(f"cutoff y must be >= 2, got {y}")
        self.p = p
        self.y = y
        self.seed = seed
        self._rows: dict[tuple[int, int], np.ndarray] = {}

    def row(self, i: int, r: int) -> np.ndarray:
        key = (i, r)
        cached = self._rows.get(key)
        if cached is None:
            cached = self._build_row(i, r)
            self._rows[key] = cached
        return cached

    def _build_row(self, i: int, r: int) -> np.ndarray:
        row = t_distribution(i, r, self.p)
        if self.y is None:
            return row
        support = [t for t in range(i + 1) if t <= r]
        if len(support) < 2:
            return row
        rng = np.random.default_rng([self.seed, i, r])
        direction = rng.normal(size=len(support))
        direction -= direction.mean()
        norm = np.abs(direction).sum()
        if norm == 0.0:
            return row
        direction /= norm
        eps = rng.uniform(0.5, 1.0) / self.y
        # Shrink so no entry goes negative; the perturbation stays a
        # valid bias of l1 size eps <= 1/y.
        for t, d in zip(support, direction):
            if d < 0:
                eps = min(eps, row[t] / (-d))
        out = row.copy()
        for t, d in zip(support, direction):
            out[t] += eps * d
        out = np.clip(out, 0.0, None)
        out /= out.sum()
        return out


def _update_ranks(
    i: int, r: int, ts: np.ndarray, p: int, rng: np.random.Generator
) -> np.ndarray:
    ranks = np.full(len(ts), r, dtype=np.int64)
    if i == 1:
        ranks[ts == 1] -= 1
        ranks[ts == 0] += 1
        return ranks
    ranks[ts == 2] -= 2
    zero = ts == 0
    n0 = int(zero.sum())
    if n0:
        rises = rng.random(n0) < 1.0 / p
        bump = np.zeros(n0, dtype=np.int64)
        bump[rises] = 2
        ranks[zero] += bump
    return ranks


def sample_transitions(
    i: int,
    r: int,
    p: int,
    count: int,
    rng: np.random.Generator,
    sampler: TStepSampler | None = None,
) -> np.ndarray:
    """``count`` one-step outcomes from fixed rank r (vectorized)."""
    row = sampler.row(i, r) if sampler is not None else t_distribution(i, r, p)
    ts = rng.choice(i + 1, size=count, p=row)
    return _update_ranks(i, r, ts, p, rng)


def step_ranks(
    ranks: np.ndarray,
    i: int,
    p: int,
    rng: np.random.Generator,
    sampler: TStepSampler | None = None,
) -> np.ndarray:
    """Advance every walk by one width-i step, grouped by current rank."""
    out = np.empty_like(ranks)
    for r in np.unique(ranks):
        mask = ranks == r
        out[mask] = sample_transitions(i, int(r), p, int(mask.sum()), rng, sampler)
    return out


def simulate_walks(
    widths: list[int],
    initial: Density,
    p: int,
    walks: int,
    rng: np.random.Generator,
    sampler: TStepSampler | None = None,
) -> Density:
    """Empirical rank distribution after stepping through ``widths``.

    Starting ranks are drawn from ``initial``; each width-i entry is one
    twist step for every walk.  The result is the bin-count density on
    the same rank window.
    """
    pvals = initial.as_float()
    pvals = pvals / pvals.sum()
    ranks = rng.choice(initial.N, size=walks, p=pvals)
    ceiling = int(np.nonzero(pvals)[0].max()) + sum(widths)
    if ceiling >= initial.N:
        raise TruncationMismatch(
            f"walk ceiling {ceiling} would leave the rank window N = {initial.N}"
        )
    for i in widths:
        ranks = step_ranks(ranks, i, p, rng, sampler)
    counts = np.bincount(ranks, minlength=initial.N).astype(float)
    return _density_unchecked(counts / walks)
