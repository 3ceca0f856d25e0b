"""Probability densities on ranks and banded Markov operators.

A :class:`Density` is a probability distribution on the rank window
``{0, ..., N-1}``.  A :class:`BandedOperator` is a row-stochastic matrix
acting on densities from the right,

    (M f)(s) = sum_r m[r, s] f(r),

so applying M is a vector-matrix product.  Both types come in two
arithmetic backends behind one interface: float64 arrays for iteration
and simulation, and ``fractions.Fraction`` object arrays when an
identity has to hold exactly.

Parity is the mass a density puts on odd ranks.  The parity functional
:func:`rho_parity`, the projections onto even and odd support, and the
zero-pattern classification of operators as parity preserving or
reversing are the pieces the equilibrium arguments downstream rely on.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Literal

import numpy as np

from .errors import NegativeEntry, NotNormalized, TruncationMismatch

__all__ = [
    "TOL_NORM",
    "TOL_TAIL",
    "Density",
    "BandedOperator",
    "ParityClass",
    "make_density",
    "make_operator",
    "identity_operator",
    "l1_distance",
    "rho_parity",
    "project_parity",
    "apply",
    "power",
    "classify_parity",
]

# |sum - 1| tolerance for anything that claims to be a probability
# vector, and the looser tolerance for quantities that carry truncation
# tail error (equilibrium sums, limit comparisons).
TOL_NORM = 1e-12
TOL_TAIL = 1e-10

Side = Literal["even", "odd"]


def _is_exact(array: np.ndarray) -> bool:
    return array.dtype == object


def _freeze(array: np.ndarray) -> np.ndarray:
    array.flags.writeable = False
    return array


def _coerce_vector(raw) -> np.ndarray:
    values = list(raw)
    if any(isinstance(v, Fraction) for v in values):
        return np.array([Fraction(v) for v in values], dtype=object)
    return np.asarray(values, dtype=float)


def _validate_probability_vector(values: np.ndarray, tol: float, what: str) -> None:
    if any(v < 0 for v in values.tolist()):
        raise NegativeEntry(f"{what} has a negative entry")
    total = values.sum()
    if abs(float(total) - 1.0) > tol:
        raise NotNormalized(f"{what} sums to {float(total)!r}, not 1 within {tol}")


@dataclass(frozen=True, eq=False)
class Density:
    """Probability distribution on the rank window {0, ..., N-1}.

    Entries are non-negative and sum to 1 within the tolerance the
    constructor was given (``TOL_NORM`` by default).  Construct through
    :func:`make_density`; the array is frozen read-only.
    """

    values: np.ndarray

    @property
    def N(self) -> int:
        return int(len(self.values))

    @property
    def exact(self) -> bool:
        return _is_exact(self.values)

    def as_float(self) -> np.ndarray:
        return self.values.astype(float)

    def to_json(self) -> str:
        return json.dumps({"N": self.N, "values": [float(v) for v in self.values]})

    @classmethod
    def from_json(cls, text: str) -> "Density":
        data = json.loads(text)
        return make_density(data["values"], data["N"])


def make_density(raw, N: int | None = None, *, tol: float = TOL_NORM) -> Density:
    """Build a validated Density, zero-padding ``raw`` up to length ``N``.

    Raises ``NegativeEntry`` or ``NotNormalized`` when the entries are
    not a probability vector within ``tol``, and ``TruncationMismatch``
    when ``raw`` is longer than ``N``.
    """
    values = _coerce_vector(raw)
    if N is None:
        N = len(values)
    if len(values) > N:
        raise TruncationMismatch(f"raw has length {len(values)} > N = {N}")
    if len(values) < N:
        pad = np.zeros(N - len(values), dtype=values.dtype)
        if _is_exact(values):
            pad = np.array([Fraction(0)] * (N - len(values)), dtype=object)
        values = np.concatenate([values, pad])
    _validate_probability_vector(values, tol, "density")
    return Density(_freeze(values))


def _density_unchecked(values: np.ndarray, tol: float = TOL_NORM) -> Density:
    # Internal: entries are non-negative by construction, only the mass
    # drift needs asserting.
    _validate_probability_vector(values, tol, "density")
    return Density(_freeze(values))


class ParityClass(enum.Enum):
    PRESERVING = "preserving"
    REVERSING = "reversing"
    NEITHER = "neither"


@dataclass(frozen=True, eq=False)
class BandedOperator:
    """Row-stochastic matrix with entries confined to |r - s| <= bandwidth.

    ``p`` is an optional prime tag recording which modulus the operator
    was built for; it is metadata only and is not serialized.
    """

    matrix: np.ndarray
    bandwidth: int
    p: int | None = None

    @property
    def N(self) -> int:
        return int(self.matrix.shape[0])

    @property
    def exact(self) -> bool:
        return _is_exact(self.matrix)

    def as_float(self) -> np.ndarray:
        return self.matrix.astype(float)

    def to_json(self) -> str:
        rows = []
        for r in range(self.N):
            entries = {
                str(s): float(self.matrix[r, s])
                for s in range(self.N)
                if self.matrix[r, s] != 0
            }
            rows.append({"r": r, "entries": entries})
        return json.dumps({"N": self.N, "rows": rows})

    @classmethod
    def from_json(cls, text: str) -> "BandedOperator":
        data = json.loads(text)
        N = data["N"]
        matrix = np.zeros((N, N), dtype=float)
        for row in data["rows"]:
            r = row["r"]
            for s, value in row["entries"].items():
                matrix[r, int(s)] = value
        return make_operator(matrix)


def _matrix_bandwidth(matrix: np.ndarray) -> int:
    rows, cols = np.nonzero(matrix != 0)
    if len(rows) == 0:
        return 0
    return int(np.abs(rows - cols).max())


def make_operator(matrix, p: int | None = None, *, tol: float = TOL_NORM) -> BandedOperator:
    """Validate a square row-stochastic matrix and wrap it.

    The bandwidth is measured from the zero pattern.  Raises
    ``NegativeEntry`` / ``NotNormalized`` on invalid rows.
    """
    matrix = np.array(matrix, dtype=object if _has_fraction(matrix) else float)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise TruncationMismatch(f"operator matrix must be square, got {matrix.shape}")
    for r in range(matrix.shape[0]):
        _validate_probability_vector(matrix[r], tol, f"operator row {r}")
    return BandedOperator(_freeze(matrix), _matrix_bandwidth(matrix), p)


def _has_fraction(matrix) -> bool:
    arr = np.asarray(matrix)
    if arr.dtype == object:
        return True
    return False


def identity_operator(N: int, *, exact: bool = False) -> BandedOperator:
    if exact:
        matrix = np.array(
            [[Fraction(1) if r == s else Fraction(0) for s in range(N)] for r in range(N)],
            dtype=object,
        )
    else:
        matrix = np.eye(N)
    return BandedOperator(_freeze(matrix), 0, None)


def l1_distance(f: Density, g: Density) -> float:
    """Total variation norm of the difference, sum_n |f(n) - g(n)|."""
    if f.N != g.N:
        raise TruncationMismatch(f"densities have N = {f.N} and {g.N}")
    return float(np.abs(f.values - g.values).sum())


def rho_parity(f: Density) -> float:
    """Parity of f: total mass on odd ranks."""
    return float(f.values[1::2].sum())


def project_parity(f: Density, side: Side) -> np.ndarray:
    """Zero out the complementary-parity entries; no renormalization.

    The result is generally not a probability vector, so it is returned
    as a plain array.  ``project_parity(f, "even") +
    project_parity(f, "odd")`` reproduces ``f.values`` exactly.
    """
    if side not in ("even", "odd"):
        raise ValueError(f"side must be 'even' or 'odd', got {side!r}")
    out = f.values.copy()
    zero = Fraction(0) if f.exact else 0.0
    start = 1 if side == "even" else 0
    out[start::2] = zero
    return out


def apply(M: BandedOperator, f: Density) -> Density:
    """Act on a density from the right: (M f)(s) = sum_r m[r, s] f(r)."""
    if M.N != f.N:
        raise TruncationMismatch(f"operator N = {M.N}, density N = {f.N}")
    values = np.dot(f.values, M.matrix)
    return _density_unchecked(values)


def power(M: BandedOperator, k: int) -> BandedOperator:
    """k-th composition power; k = 0 gives the identity."""
    if k < 0 or k != int(k):
        raise ValueError(f"power requires an integer k >= 0, got {k!r}")
    if k == 0:
        return identity_operator(M.N, exact=M.exact)
    if M.exact:
        result = np.array(
            [[Fraction(1) if r == s else Fraction(0) for s in range(M.N)] for r in range(M.N)],
            dtype=object,
        )
        base = M.matrix
        e = int(k)
        while e > 0:
            if e & 1:
                result = np.dot(result, base)
            base = np.dot(base, base)
            e >>= 1
        matrix = result
    else:
        matrix = np.linalg.matrix_power(M.matrix, int(k))
    return BandedOperator(
        _freeze(matrix), min(M.bandwidth * int(k), M.N - 1), M.p
    )


def classify_parity(M: BandedOperator) -> ParityClass:
    """Zero-pattern test: preserving, reversing, or neither.

    Entries are compared to zero exactly; this is a structural property
    of the matrix, not a numeric one.
    """
    idx = np.arange(M.N)
    same_parity = (idx[:, None] - idx[None, :]) % 2 == 0
    nonzero = M.matrix != 0
    has_same = bool(np.any(nonzero & same_parity))
    has_diff = bool(np.any(nonzero & ~same_parity))
    if not has_diff:
        return ParityClass.PRESERVING
    if not has_same:
        return ParityClass.REVERSING
    return ParityClass.NEITHER
