"""Transient and stationary distributions of the truncated chain.

The forward equation ``dp/dt = A p`` is integrated with classical RK4 under
step doubling: each step is taken once with ``h`` and twice with ``h/2``; the
difference estimates the local error and the Richardson combination is kept.
Step sizes never exceed ``0.1 / ||A||``, where ``||A|| = 2 lam + 2 max(mu, mu0)``.

The stationary distribution is computed by GTH state reduction on the banded
generator. The reduction uses only additions, multiplications and divisions
of non-negative numbers, so even tail probabilities far below machine epsilon
(relative to the head) come out with full relative accuracy. Weighted sums
with geometrically growing weights depend on that.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .ergodicity import Regime, classify
from .errors import ConvergenceError, IntegrationError, RegimeError, TruncationError
from .model import SystemParams, build_generator, generator_norm

__all__ = [
    "DistributionSnapshot",
    "transient",
    "stationary",
    "l1_distance",
    "point_mass",
    "write_snapshots_csv",
    "read_snapshots_csv",
]

DEFAULT_M = 400
MAX_M = 25600
LEAK_TOL = 1e-6
BOUNDARY_STATES = 4
NEG_CLIP = 1e-12


@dataclass(frozen=True)
class DistributionSnapshot:
    """State probabilities over ``1..M`` at time ``t``.

    ``leak`` is the mass on the top four states for transient snapshots and
    the corresponding tail mass for the stationary distribution.
    """

    t: float
    probs: np.ndarray
    leak: float

    @property
    def size(self) -> int:
        return self.probs.size

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.probs, dtype=dtype)


def point_mass(M: int, k: int = 1) -> np.ndarray:
    """Probability vector of length ``M`` concentrated on state ``k`` (1-based)."""
    if not 1 <= k <= M:
        raise ValueError(f"state {k} outside 1..{M}")
    p = np.zeros(M)
    p[k - 1] = 1.0
    return p


def l1_distance(p, q) -> float:
    p = np.asarray(getattr(p, "probs", p), dtype=float)
    q = np.asarray(getattr(q, "probs", q), dtype=float)
    if p.shape != q.shape:
        raise ValueError(f"length mismatch: {p.shape} vs {q.shape}")
    return math.fsum(np.abs(p - q))


def _rk4(A, y, h):
    k1 = A @ y
    k2 = A @ (y + 0.5 * h * k1)
    k3 = A @ (y + 0.5 * h * k2)
    k4 = A @ (y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _finalize(t, y, M):
    low = y.min()
    if low < -NEG_CLIP:
        raise IntegrationError(f"negative probability {low:.3g} at t={t:g}")
    p = np.where(y < 0, 0.0, y)
    total = p.sum()
    if abs(total - 1.0) > 1e-8:
        raise IntegrationError(f"probability mass {total!r} drifted at t={t:g}")
    p = p / total
    leak = float(p[-BOUNDARY_STATES:].sum())
    if leak > LEAK_TOL:
        raise TruncationError(
            f"mass {leak:.3g} on the top {BOUNDARY_STATES} states at t={t:g}; "
            f"increase the truncation to at least {2 * M}", suggested_size=2 * M)
    return DistributionSnapshot(float(t), p, leak)


def transient(params: SystemParams, p0, times, M: int | None = None, tol: float = 1e-10,
              max_step: float | None = None) -> list[DistributionSnapshot]:
    """Integrate the truncated forward equation from ``p(0) = p0``.

    Parameters
    ----------
    params : SystemParams
    p0 : array_like or DistributionSnapshot
        Initial distribution over states ``1..len(p0)``; padded with zeros
        up to ``M``.
    times : array_like
        Non-negative, non-decreasing output times.
    M : int, optional
        Truncation size. Defaults to ``max(len(p0), 400)``.
    tol : float
        Local error tolerance (l1) per accepted step.
    max_step : float, optional
        Cap on the step size in addition to ``0.1 / ||A||``.

    Returns
    -------
    list of DistributionSnapshot

    Raises
    ------
    TruncationError
        If more than 1e-6 of the mass sits on the top four states at an
        output time.
    """
    y = np.asarray(getattr(p0, "probs", p0), dtype=float).copy()
    if y.ndim != 1:
        raise ValueError("p0 must be a vector")
    M = max(y.size, DEFAULT_M) if M is None else int(M)
    if y.size > M:
        raise ValueError(f"p0 has {y.size} states but the truncation is {M}")
    y = np.concatenate([y, np.zeros(M - y.size)])
    if np.any(y < 0) or abs(y.sum() - 1.0) > 1e-12:
        raise ValueError("p0 must be a probability vector")
    support = np.flatnonzero(y)
    if support[-1] + 1 > M // 2:
        raise ValueError(f"p0 is supported up to state {support[-1] + 1}, beyond M/2 = {M // 2}")
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0 or times[0] < 0 or np.any(np.diff(times) < 0):
        raise ValueError("times must be a non-empty, non-decreasing, non-negative grid")
    if not tol > 0:
        raise ValueError("tol must be positive")

    A = build_generator(params, M, "A").matrix
    h_max = 0.1 / generator_norm(params)
    if max_step is not None:
        h_max = min(h_max, max_step)
    h = h_max
    t = 0.0
    out = []
    for target in times:
        while t < target:
            remaining = target - t
            final = h >= remaining
            step = remaining if final else h
            full = _rk4(A, y, step)
            half = _rk4(A, _rk4(A, y, 0.5 * step), 0.5 * step)
            err = np.abs(half - full).sum() / 15.0
            if err > tol:
                h = max(step * max(0.2, 0.9 * (tol / err) ** 0.2), 1e-12 * h_max)
                if step <= 1e-12 * h_max:
                    raise IntegrationError("step size underflow")
                continue
            y = half + (half - full) / 15.0
            t = target if final else t + step
            grow = 2.0 if err == 0 else min(2.0, 0.9 * (tol / err) ** 0.2)
            if not final:
                h = min(h_max, step * max(grow, 0.2))
        out.append(_finalize(target, y, M))
    return out


def _gth(Q):
    """Stationary vector of a finite irreducible generator by GTH state reduction.

    ``Q`` is a sparse matrix in any scipy format; only off-diagonal rates are
    read. Cost is proportional to ``M`` times the squared bandwidth.
    """
    M = Q.shape[0]
    coo = Q.tocoo()
    rows = [dict() for _ in range(M)]
    incoming = [set() for _ in range(M)]
    for i, j, v in zip(coo.row, coo.col, coo.data):
        if i != j and v > 0:
            rows[i][j] = rows[i].get(j, 0.0) + float(v)
            incoming[j].add(int(i))
    exit_rate = np.zeros(M)
    for n in range(M - 1, 0, -1):
        out = {j: q for j, q in rows[n].items() if j < n}
        s = math.fsum(out.values())
        if s == 0:
            raise ConvergenceError(f"state {n + 1} cannot reach lower states; chain is reducible")
        exit_rate[n] = s
        for i in incoming[n]:
            if i >= n:
                continue
            r_in = rows[i][n] / s
            row_i = rows[i]
            for j, q in out.items():
                if j != i:
                    row_i[j] = row_i.get(j, 0.0) + r_in * q
                    incoming[j].add(i)
    pi = np.zeros(M)
    pi[0] = 1.0
    for n in range(1, M):
        pi[n] = math.fsum(pi[i] * rows[i][n] for i in incoming[n] if i < n) / exit_rate[n]
    return pi / math.fsum(pi)


def stationary(params: SystemParams, M: int = DEFAULT_M, tol: float = 1e-12,
               tail_tol: float = 1e-10, max_M: int = MAX_M) -> DistributionSnapshot:
    """Stationary distribution of the truncated chain.

    The truncation is doubled (up to ``max_M``) while more than ``tail_tol``
    of the mass lies on the top four states.

    Returns
    -------
    DistributionSnapshot
        With ``t = inf`` and ``leak`` equal to the tail mass.

    Raises
    ------
    RegimeError
        Unless the parameters are exponentially ergodic.
    ConvergenceError
        If the residual ``||A pi||_1`` exceeds ``tol`` or the tail stays
        heavy at ``max_M``.
    """
    regime = classify(params)
    if regime is not Regime.EXPONENTIALLY_ERGODIC:
        raise RegimeError(f"no stationary distribution: parameters are {regime}")
    M = int(M)
    while True:
        Q = build_generator(params, M, "Q").matrix
        pi = _gth(Q)
        tail = float(pi[-BOUNDARY_STATES:].sum())
        if tail <= tail_tol:
            break
        if 2 * M > max_M:
            raise ConvergenceError(f"tail mass {tail:.3g} still above {tail_tol:g} at M={M}")
        M *= 2
    residual = float(np.abs(Q.T @ pi).sum())
    if residual > tol:
        raise ConvergenceError(f"stationary residual {residual:.3g} exceeds {tol:g}")
    return DistributionSnapshot(math.inf, pi, tail)


def write_snapshots_csv(snapshots, fh=None) -> str | None:
    """Write ``t,leak,p1,...,pM`` rows; returns the text when ``fh`` is None."""
    sink = io.StringIO() if fh is None else fh
    M = snapshots[0].size
    w = csv.writer(sink, lineterminator="\n")
    w.writerow(["t", "leak"] + [f"p{i}" for i in range(1, M + 1)])
    for s in snapshots:
        if s.size != M:
            raise ValueError("snapshots must share one truncation")
        w.writerow([f"{s.t:.15g}", f"{s.leak:.15g}"] + [f"{v:.15g}" for v in s.probs])
    return sink.getvalue() if fh is None else None


def read_snapshots_csv(fh) -> list[DistributionSnapshot]:
    r = csv.reader(fh)
    header = next(r)
    if header[:2] != ["t", "leak"]:
        raise ValueError("expected header starting with t,leak")
    return [DistributionSnapshot(float(row[0]), np.array([float(v) for v in row[2:]]), float(row[1]))
            for row in r if row]
