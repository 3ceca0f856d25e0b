"""The mod-p Lagrangian operator and its equilibrium distributions.

The operator M_L is the banded birth-death kernel with

    m[r, r-1] = 1 - p**-r   (r >= 1),
    m[r, r+1] = p**-r       (r >= 0),

and zeros elsewhere.  It reverses parity, so M_L**2 preserves parity
and has a fixed probability vector on each parity class: E+ supported
on even ranks and E- on odd ranks, with entries

    c_n = prod_{j>=1} (1 + p**-j)**-1 * prod_{j=1}^{n} p / (p**j - 1).

Each parity class of the c_n sums to 1, so E+ and E- are genuine
densities, and iterating M_L**2 from any start converges to the mixture
determined by the start's parity mass.  This module constructs the
operator, evaluates the constants (exactly, then rounded once), and
realizes the convergence claim both predictively and by iteration.

Truncation: everything lives on ranks {0, ..., N-1}; the out-of-window
mass of the last row is folded two steps down so rows stay stochastic.
Since c_n decays like p**(-n(n+1)/2), the fold is far below double
rounding for the default N = 64.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .distributions import (
    TOL_TAIL,
    BandedOperator,
    Density,
    Side,
    _density_unchecked,
    _freeze,
    apply,
    l1_distance,
    make_density,
    rho_parity,
)
from .errors import InvalidPrime, NoConvergence

__all__ = [
    "LagrangianParams",
    "EquilibriumPair",
    "build_lagrangian",
    "c_constants",
    "c_partial_products",
    "equilibrium",
    "iterate_limit",
    "predicted_limit",
]


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    d = 2
    while d * d <= n:
        if n % d == 0:
            return False
        d += 1
    return True


@dataclass(frozen=True)
class LagrangianParams:
    """Prime modulus, rank-window size, and tail length for the c_n product."""

    p: int
    N: int = 64
    tail_terms: int = 200

    def __post_init__(self) -> None:
        if not _is_prime(self.p):
            raise InvalidPrime(f"p = {self.p} is not prime")
        if self.N < 2:
            raise ValueError(f"N must be >= 2, got {self.N}")
        if self.tail_terms < 50:
            raise ValueError(f"tail_terms must be >= 50, got {self.tail_terms}")


@dataclass(frozen=True)
class EquilibriumPair:
    """The even- and odd-supported equilibrium densities and their c_n."""

    e_plus: Density
    e_minus: Density
    c: np.ndarray = field(repr=False)


def build_lagrangian(params: LagrangianParams, *, exact: bool = False) -> BandedOperator:
    """Construct M_L on the rank window, with the boundary fold at r = N-1.

    With ``exact=True`` the entries are Fractions and row sums are 1
    exactly; otherwise float64.
    """
    p, N = params.p, params.N
    if exact:
        matrix = np.full((N, N), Fraction(0), dtype=object)
        one = Fraction(1)
    else:
        matrix = np.zeros((N, N))
        one = 1.0

    for r in range(N):
        up = Fraction(1, p**r) if exact else float(p) ** (-r)
        down = one - up
        if r >= 1:
            matrix[r, r - 1] = down
        if r + 1 < N:
            matrix[r, r + 1] = up
        else:
            # Fold the out-of-window mass from rank N down to rank N-2
            # so the row stays stochastic and parity-reversing.
            matrix[r, r - 1] += up
    # Entries sit on |r - s| = 1 only; the boundary fold lands on r - 1.
    return BandedOperator(_freeze(matrix), 1, p)


def _exact_prefactor(p: int, tail_terms: int) -> Fraction:
    # prod_{j=1}^{J} (1 + p**-j)**-1 == prod p**j / (p**j + 1), kept as
    # an exact rational; the dropped tail is below exp(p**-J) - 1.
    pref = Fraction(1)
    power_of_p = 1
    for _ in range(tail_terms):
        power_of_p *= p
        pref *= Fraction(power_of_p, power_of_p + 1)
    return pref


def c_partial_products(p: int, N: int) -> list[Fraction]:
    """Exact partial products prod_{j=1}^{n} p/(p**j - 1) for n < N.

    These are the c_n up to the common prefactor, so ratios and the
    fixed-point identity can be checked in exact arithmetic.
    """
    out = [Fraction(1)]
    power_of_p = 1
    for _ in range(1, N):
        power_of_p *= p
        out.append(out[-1] * Fraction(p, power_of_p - 1))
    return out


def c_constants(params: LagrangianParams) -> np.ndarray:
    """The constants c_0, ..., c_{N-1}, each rounded once from an exact rational."""
    pref = _exact_prefactor(params.p, params.tail_terms)
    partials = c_partial_products(params.p, params.N)
    return np.array([float(pref * q) for q in partials])


def equilibrium(params: LagrangianParams) -> EquilibriumPair:
    """The even/odd equilibrium pair (E+, E-) on the rank window.

    Each side keeps its own parity class of the c_n and zeros elsewhere.
    Normalization error is pure truncation tail, so N must be large
    enough that the tail is below ``TOL_TAIL`` (N >= 12 covers p >= 2).
    """
    c = c_constants(params)
    plus = c.copy()
    plus[1::2] = 0.0
    minus = c.copy()
    minus[0::2] = 0.0
    e_plus = _density_unchecked(plus, TOL_TAIL)
    e_minus = _density_unchecked(minus, TOL_TAIL)
    return EquilibriumPair(e_plus, e_minus, c)


def iterate_limit(
    M: BandedOperator,
    f: Density,
    max_steps: int = 10_000,
    tol_stop: float = 1e-10,
) -> tuple[Density, int]:
    """Iterate M two applications at a time until successive even
    iterates are within ``tol_stop`` in l1.

    Returns the final density and the number of double steps taken
    (0 when ``f`` is already a fixed point of M**2).  The even-step
    subsampling matters: a parity-reversing M never converges pointwise
    from a parity-impure start, but its square does.
    """
    current = f
    for step in range(max_steps + 1):
        after = apply(M, apply(M, current))
        if l1_distance(after, current) < tol_stop:
            return current, step
        current = after
    raise NoConvergence(
        f"no fixed point of M^2 within {max_steps} double steps at tol {tol_stop}"
    )


def predicted_limit(f: Density, power_parity: Side, params: LagrangianParams) -> Density:
    """The limit (1-rho)E+ + rho E- of even powers, swapped for odd powers."""
    if power_parity not in ("even", "odd"):
        raise ValueError(f"power_parity must be 'even' or 'odd', got {power_parity!r}")
    rho = rho_parity(f)
    pair = equilibrium(params)
    if power_parity == "odd":
        rho = 1.0 - rho
    values = (1.0 - rho) * pair.e_plus.values + rho * pair.e_minus.values
    return make_density(values, params.N, tol=TOL_TAIL)
