"""Geometric weight sequences and weighted l1 logarithmic norms.

The l1 logarithmic norm of a matrix is the largest column value of
``b_jj + sum_{i != j} |b_ij|``. A negative value certifies exponential
contraction of ``dx/dt = B x`` in the chosen norm. Two weightings are used:

* a decreasing diagonal weighting ``delta`` of the forward operator A, whose
  contraction rate shows mass leaving every finite set (null ergodicity);
* an increasing weighting ``d`` of the reduced system B, applied through the
  upper-triangular matrix with row ``i`` equal to ``d_i`` on and right of the
  diagonal, whose contraction rate bounds convergence to stationarity.

Weights grow or shrink geometrically, so they are handled in log space.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .model import SystemParams, TruncatedGenerator

__all__ = [
    "NullWeights",
    "ErgWeights",
    "lognorm_null_analytic",
    "lognorm_erg_analytic",
    "erg_alphas",
    "lognorm_numeric",
    "column_lognorms",
]

BOUNDARY_COLUMNS = 3
MIN_NUMERIC_SIZE = 8


def _check_ab(a, b):
    if not (a > 0 and b > 0) or not np.isfinite(a) or not np.isfinite(b):
        raise ValueError(f"weight parameters must be positive and finite, got a={a!r}, b={b!r}")


@dataclass(frozen=True)
class NullWeights:
    """``delta_1 = 1``, ``delta_{2k} = b delta_{2k-1}``, ``delta_{2k+1} = a delta_{2k}``."""

    a: float
    b: float

    def __post_init__(self):
        _check_ab(self.a, self.b)

    @property
    def decreasing(self) -> bool:
        return self.a < 1 and self.b < 1

    def log_delta(self, k):
        k = np.asarray(k)
        if np.any(k < 1):
            raise ValueError("weight index must be >= 1")
        la, lb = np.log(self.a), np.log(self.b)
        half = k // 2
        return np.where(k % 2 == 1, half * (la + lb), (half - 1) * la + half * lb)

    def delta(self, k):
        return np.exp(self.log_delta(k))

    def ratio(self, i, j):
        """``delta_i / delta_j`` without forming either weight."""
        return np.exp(self.log_delta(i) - self.log_delta(j))


@dataclass(frozen=True)
class ErgWeights:
    """``d_2 = 1``, ``d_{2k+1} = b d_{2k}``, ``d_{2k+2} = a d_{2k+1}``; ``g_i = sum_{n=2}^{i} d_n``.

    Theorem-grade certificates need ``a * b > 1``; other positive values are
    accepted so the log norms can be probed anywhere.
    """

    a: float
    b: float

    def __post_init__(self):
        _check_ab(self.a, self.b)

    @property
    def increasing(self) -> bool:
        return self.a * self.b > 1

    def log_d(self, i):
        i = np.asarray(i)
        if np.any(i < 2):
            raise ValueError("weight index must be >= 2")
        la, lb = np.log(self.a), np.log(self.b)
        level = (i - 2) // 2
        return level * (la + lb) + np.where(i % 2 == 1, lb, 0.0)

    def d(self, i):
        return np.exp(self.log_d(i))

    def log_g_upto(self, imax: int) -> np.ndarray:
        """``log g_i`` for ``i = 2..imax`` (entry 0 is ``i = 2``)."""
        return np.logaddexp.accumulate(self.log_d(np.arange(2, imax + 1)))

    def g_upto(self, imax: int) -> np.ndarray:
        return np.exp(self.log_g_upto(imax))


def lognorm_null_analytic(params: SystemParams, a: float, b: float) -> float:
    """Closed-form log norm of A in the delta-weighted l1 space.

    The three column types (state 1, busy states, idle states with a
    nonempty orbit) give ``-lam(1-b)``, ``-(lam(1-ab) - mu(1/b-1))`` and
    ``-(lam(1-b) - mu0(1/a-1))``. For ``a <= 1`` the first never dominates.
    """
    _check_ab(a, b)
    lam, mu, mu0 = params.lam, params.mu, params.mu0
    first = lam * (1 - b)
    busy = lam * (1 - a * b) - mu * (1 / b - 1)
    idle = lam * (1 - b) - mu0 * (1 / a - 1)
    return -min(first, busy, idle)


def erg_alphas(params: SystemParams, a: float, b: float) -> tuple[float, float, float]:
    """Column decay rates ``(alpha_2, alpha_odd, alpha_even)`` of the weighted B.

    ``alpha_2`` exceeds ``alpha_even`` by ``mu0 / a`` and is reported only
    for completeness.
    """
    _check_ab(a, b)
    lam, mu, mu0 = params.lam, params.mu, params.mu0
    alpha2 = lam + mu - lam * (b + a * b)
    alpha_odd = lam + mu0 - mu / b
    alpha_even = alpha2 - mu0 / a
    return alpha2, alpha_odd, alpha_even


def lognorm_erg_analytic(params: SystemParams, a: float, b: float) -> float:
    """Closed-form log norm of B in the d-weighted l1 space, ``-inf_i alpha_i``."""
    return -min(erg_alphas(params, a, b))


def _weighted(gen: TruncatedGenerator, weights) -> np.ndarray:
    n = gen.size
    if weights is None:
        return gen.toarray()
    if isinstance(weights, NullWeights):
        if gen.kind != "A":
            raise ValueError(f"null weights apply to kind A, got kind {gen.kind}")
        ld = weights.log_delta(np.arange(1, n + 1))
        coo = gen.matrix.tocoo()
        data = coo.data * np.exp(ld[coo.row] - ld[coo.col])
        return sp.coo_matrix((data, (coo.row, coo.col)), shape=(n, n)).toarray()
    if isinstance(weights, ErgWeights):
        if gen.kind != "B":
            raise ValueError(f"ergodic weights apply to kind B, got kind {gen.kind}")
        B = gen.toarray()
        # U B U^{-1} with U the all-ones upper triangle: tail sums, then column differences
        UB = np.cumsum(B[::-1], axis=0)[::-1]
        X = UB.copy()
        X[:, 1:] -= UB[:, :-1]
        ld = weights.log_d(np.arange(2, n + 2))
        expo = ld[:, None] - ld[None, :]
        with np.errstate(over="ignore", invalid="ignore"):
            scaled = X * np.exp(np.where(X != 0, expo, 0.0))
        return scaled
    raise TypeError(f"unsupported weights {type(weights).__name__}")


def column_lognorms(matrix) -> np.ndarray:
    """``b_jj + sum_{i != j} |b_ij|`` for every column of a dense matrix."""
    S = np.asarray(matrix)
    diag = np.diag(S)
    return diag + np.abs(S).sum(axis=0) - np.abs(diag)


def lognorm_numeric(gen: TruncatedGenerator, weights=None) -> float:
    """Weighted l1 log norm of a truncated matrix, over interior columns.

    Parameters
    ----------
    gen : TruncatedGenerator
        Kind A for :class:`NullWeights`, kind B for :class:`ErgWeights`, any
        kind when ``weights`` is None.
    weights : NullWeights, ErgWeights or None

    Returns
    -------
    float
        Maximum column value over columns ``1..size-3``; the last three
        columns are shaped by the truncation and are excluded.
    """
    if gen.size < MIN_NUMERIC_SIZE:
        raise ValueError(f"matrix size must be >= {MIN_NUMERIC_SIZE}, got {gen.size}")
    cols = column_lognorms(_weighted(gen, weights))
    return float(cols[: gen.size - BOUNDARY_COLUMNS].max())
