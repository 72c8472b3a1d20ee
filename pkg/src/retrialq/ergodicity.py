"""Regime classification, feasible weight regions and convergence-rate certificates.

The regime is decided by the sign of ``mu mu0 - lam (lam + mu0)``:

* negative: null ergodic. Weights ``(a, b)`` in ``(0, 1)^2`` with a positive
  rate ``zeta`` bound the mass of the first ``N`` states.
* positive: exponentially ergodic. Weights with ``a b > 1`` and positive rate
  ``alpha`` bound the l1 distance to the stationary distribution.
* zero: critical, no certificate.

Feasibility alone fixes a region of weights; :func:`optimize_rate` searches it
for the largest certified rate.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import asdict, dataclass
from typing import NamedTuple

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import NoCertificateError, RegimeError, UnreliableBoundError
from .model import SystemParams
from .weights import ErgWeights, NullWeights

__all__ = [
    "Regime",
    "Interval",
    "RateCertificate",
    "ErgBound",
    "classify",
    "null_b_interval",
    "null_a_interval",
    "erg_x_interval",
    "erg_b_interval",
    "erg_intervals",
    "null_rate",
    "erg_rate",
    "optimize_rate",
    "null_bound",
    "erg_bound",
]

GRID = 200
MIN_MARGIN = 1e-9
# clip distance from region boundaries; twice the guaranteed margin
_EDGE = 2 * MIN_MARGIN
TAIL_TOL = 1e-12


class Regime(str, enum.Enum):
    NULL_ERGODIC = "NullErgodic"
    EXPONENTIALLY_ERGODIC = "ExponentiallyErgodic"
    CRITICAL = "Critical"

    def __str__(self):
        return self.value


class Interval(NamedTuple):
    """Open interval ``(lo, hi)``."""

    lo: float
    hi: float

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def empty(self) -> bool:
        return not self.hi > self.lo

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def __contains__(self, x) -> bool:
        return self.lo < x < self.hi


def stability_gap(params: SystemParams) -> float:
    """``mu mu0 - lam (lam + mu0)``, whose sign decides the regime."""
    return params.mu * params.mu0 - params.lam * (params.lam + params.mu0)


def classify(params: SystemParams) -> Regime:
    gap = stability_gap(params)
    if gap < 0:
        return Regime.NULL_ERGODIC
    if gap > 0:
        return Regime.EXPONENTIALLY_ERGODIC
    return Regime.CRITICAL


def _require(params, regime):
    got = classify(params)
    if got is not regime:
        if got is Regime.CRITICAL:
            raise NoCertificateError(f"parameters {params} are critical; no certificate exists")
        raise RegimeError(f"operation requires regime {regime}, parameters are {got}")


def null_b_interval(params: SystemParams) -> Interval:
    """``(b*, 1)`` with ``b* = mu (lam + mu0) / (lam (lam + mu + mu0))``."""
    _require(params, Regime.NULL_ERGODIC)
    lam, mu, mu0 = params.lam, params.mu, params.mu0
    return Interval(mu * (lam + mu0) / (lam * (lam + mu + mu0)), 1.0)


def null_a_interval(params: SystemParams, b: float) -> Interval:
    """Admissible ``a`` for a given ``b``.

    The lower end makes the idle-state rate positive, the upper end the
    busy-state rate. The upper end is capped at 1 so the weights decrease.
    """
    if b not in null_b_interval(params):
        raise ValueError(f"b={b!r} outside {tuple(null_b_interval(params))}")
    lam, mu, mu0 = params.lam, params.mu, params.mu0
    lo = mu0 / (lam * (1 - b) + mu0)
    hi = (lam - mu * (1 / b - 1)) / (b * lam)
    return Interval(lo, min(hi, 1.0))


def erg_x_interval(params: SystemParams) -> Interval:
    """``(1, x*)`` for the product ``x = a b``, ``x* = mu mu0 / (lam (lam + mu0))``."""
    _require(params, Regime.EXPONENTIALLY_ERGODIC)
    lam, mu, mu0 = params.lam, params.mu, params.mu0
    return Interval(1.0, mu * mu0 / (lam * (lam + mu0)))


def erg_b_interval(params: SystemParams, x: float) -> Interval:
    """Admissible ``b`` for a product ``x = a b``; then ``a = x / b``."""
    if x not in erg_x_interval(params):
        raise ValueError(f"x={x!r} outside {tuple(erg_x_interval(params))}")
    lam, mu, mu0 = params.lam, params.mu, params.mu0
    return Interval(mu / (lam + mu0), (lam + mu - x * lam) / (lam + mu0 / x))


def erg_intervals(params: SystemParams, x: float | None = None) -> tuple[Interval, Interval]:
    """The x interval and the b interval at ``x`` (its midpoint by default)."""
    xs = erg_x_interval(params)
    if x is None:
        x = xs.midpoint
    return xs, erg_b_interval(params, x)


def null_rate(params: SystemParams, a, b):
    """``zeta = min(lam(1-ab) - mu(1/b-1), lam(1-b) - mu0(1/a-1))``; broadcasts."""
    lam, mu, mu0 = params.lam, params.mu, params.mu0
    return np.minimum(lam * (1 - a * b) - mu * (1 / b - 1), lam * (1 - b) - mu0 * (1 / a - 1))


def erg_rate(params: SystemParams, a, b):
    """``alpha = min(lam + mu0 - mu/b, lam + mu - lam(b + ab) - mu0/a)``; broadcasts."""
    lam, mu, mu0 = params.lam, params.mu, params.mu0
    return np.minimum(lam + mu0 - mu / b, lam + mu - lam * (b + a * b) - mu0 / a)


@dataclass(frozen=True)
class RateCertificate:
    """Chosen weights and the convergence rate they certify.

    ``margin`` is the smallest distance of the weight coordinates from the
    ends of their feasibility intervals (``(a, b)`` in the null case,
    ``(x, b)`` with ``x = a b`` in the ergodic case).
    """

    regime: Regime
    a: float
    b: float
    rate: float
    margin: float

    def __post_init__(self):
        object.__setattr__(self, "regime", Regime(self.regime))
        if self.regime is Regime.CRITICAL:
            raise NoCertificateError("critical regime has no certificate")
        if not self.rate > 0:
            raise ValueError(f"certified rate must be positive, got {self.rate!r}")
        if self.regime is Regime.NULL_ERGODIC and not (0 < self.a < 1 and 0 < self.b < 1):
            raise ValueError("null-ergodic certificate needs 0 < a, b < 1")
        if self.regime is Regime.EXPONENTIALLY_ERGODIC and not self.a * self.b > 1:
            raise ValueError("ergodic certificate needs a * b > 1")

    @property
    def weights(self) -> NullWeights | ErgWeights:
        if self.regime is Regime.NULL_ERGODIC:
            return NullWeights(self.a, self.b)
        return ErgWeights(self.a, self.b)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["regime"] = self.regime.value
        return d

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, d: dict) -> "RateCertificate":
        return cls(Regime(d["regime"]), float(d["a"]), float(d["b"]), float(d["rate"]), float(d["margin"]))


def _cells(interval: Interval, n: int) -> np.ndarray:
    return interval.lo + interval.width * (np.arange(n) + 0.5) / n


def _best_cell(rate, first, second):
    # deterministic lexicographic (rate, first, second) maximum
    rate = np.where(np.isfinite(rate), rate, -np.inf)
    order = np.lexsort((second.ravel(), first.ravel(), rate.ravel()))
    k = order[-1]
    return rate.ravel()[k], first.ravel()[k], second.ravel()[k]


def _null_a_equalizer(p: SystemParams, b):
    # positive root of lam b a^2 - (lam b - mu(1/b-1) - mu0) a - mu0 = 0,
    # where both arguments of the min coincide
    lam, mu, mu0 = p.lam, p.mu, p.mu0
    c1 = lam * b - mu * (1 / b - 1) - mu0
    return (c1 + math.sqrt(c1 * c1 + 4 * lam * b * mu0)) / (2 * lam * b)


def _erg_b_equalizer(p: SystemParams, x):
    # positive root of (lam + mu0/x) b^2 + (mu0 - mu + lam x) b - mu = 0
    lam, mu, mu0 = p.lam, p.mu, p.mu0
    c2 = lam + mu0 / x
    c1 = mu0 - mu + lam * x
    return (-c1 + math.sqrt(c1 * c1 + 4 * c2 * mu)) / (2 * c2)


def _clip(v, iv: Interval):
    return min(max(v, iv.lo + _EDGE), iv.hi - _EDGE)


def _thin(iv: Interval) -> bool:
    return iv.width <= 4 * _EDGE


def _refine(profile, cells, grid_seed):
    """Maximize a scalar profile over the span of ``cells``.

    The profile is scanned at every cell centre; the best cell and the best
    2-D grid cell each seed a bounded search over their neighbouring cells.
    The result is never worse than any scanned point.
    """
    values = [profile(float(c))[0] for c in cells]
    k = int(np.argmax(values))
    candidates = [profile(float(cells[k])), profile(float(grid_seed))]
    for seed in (k, int(np.argmin(np.abs(cells - grid_seed)))):
        lo, hi = float(cells[max(seed - 1, 0)]), float(cells[min(seed + 1, len(cells) - 1)])
        res = minimize_scalar(lambda s: -profile(s)[0], bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-14 * max(1.0, abs(hi)), "maxiter": 500})
        candidates.append(profile(float(res.x)))
    return max(candidates, key=lambda c: (c[0], c[1], c[2]))


def _optimize_null(p: SystemParams, grid: int):
    bs = null_b_interval(p)
    if _thin(bs):
        raise NoCertificateError("feasible b interval is too thin to certify")
    b = _cells(Interval(bs.lo + _EDGE, bs.hi - _EDGE), grid)
    lo_a = np.array([null_a_interval(p, bv).lo for bv in b])
    hi_a = np.array([null_a_interval(p, bv).hi for bv in b])
    frac = (np.arange(grid) + 0.5) / grid
    Bg = np.repeat(b[:, None], grid, axis=1)
    A = lo_a[:, None] + (hi_a - lo_a)[:, None] * frac[None, :]
    z = null_rate(p, A, Bg)
    _, _, b0 = _best_cell(z, A, Bg)

    def profile(bv):
        ai = null_a_interval(p, bv)
        if _thin(ai):
            return -np.inf, np.nan, bv
        av = _clip(_null_a_equalizer(p, bv), ai)
        return float(null_rate(p, av, bv)), av, bv

    rate, a_opt, b_opt = _refine(profile, b, b0)
    if not rate > 0:
        raise NoCertificateError("no positive null-ergodic rate found")
    return a_opt, b_opt


def _optimize_erg(p: SystemParams, grid: int):
    xs = erg_x_interval(p)
    if _thin(xs):
        raise NoCertificateError("feasible x interval is too thin to certify")
    x = _cells(Interval(xs.lo + _EDGE, xs.hi - _EDGE), grid)
    lo_b = np.array([erg_b_interval(p, xv).lo for xv in x])
    hi_b = np.array([erg_b_interval(p, xv).hi for xv in x])
    frac = (np.arange(grid) + 0.5) / grid
    X = np.repeat(x[:, None], grid, axis=1)
    Bg = lo_b[:, None] + (hi_b - lo_b)[:, None] * frac[None, :]
    alpha = erg_rate(p, X / Bg, Bg)
    _, x0, _ = _best_cell(alpha, X, Bg)

    def profile(xv):
        bi = erg_b_interval(p, xv)
        if _thin(bi):
            return -np.inf, np.nan, np.nan
        bv = _clip(_erg_b_equalizer(p, xv), bi)
        return float(erg_rate(p, xv / bv, bv)), xv / bv, bv

    rate, a_opt, b_opt = _refine(profile, x, x0)
    if not rate > 0:
        raise NoCertificateError("no positive ergodic rate found")
    return a_opt, b_opt


def certificate_margin(params: SystemParams, regime: Regime, a: float, b: float) -> float:
    if regime is Regime.NULL_ERGODIC:
        bs = null_b_interval(params)
        ai = null_a_interval(params, b)
        return min(b - bs.lo, bs.hi - b, a - ai.lo, ai.hi - a)
    x = a * b
    xs = erg_x_interval(params)
    bi = erg_b_interval(params, x)
    return min(x - xs.lo, xs.hi - x, b - bi.lo, bi.hi - b)


def optimize_rate(params: SystemParams, grid: int = GRID) -> RateCertificate:
    """Search the feasible weight region for the largest certified rate.

    A ``grid x grid`` scan of the feasible box seeds a one-dimensional
    refinement along the curve where the two arguments of the rate's ``min``
    coincide (for fixed ``b`` in the null case, fixed ``x = a b`` in the
    ergodic case the optimum over the other coordinate sits there unless a
    box edge intervenes).

    The search runs on rates normalized by ``lam``; every rate formula is
    homogeneous of degree one, so the weights are scale invariant and the
    certified rate scales with the parameters.

    Raises
    ------
    NoCertificateError
        In the critical regime or when the feasible region is too thin.
    """
    regime = classify(params)
    if regime is Regime.CRITICAL:
        raise NoCertificateError(f"parameters {params} are critical; no certificate exists")
    p = params.scaled(1.0 / params.lam)
    if regime is Regime.NULL_ERGODIC:
        a, b = _optimize_null(p, grid)
        rate = float(null_rate(params, a, b))
    else:
        a, b = _optimize_erg(p, grid)
        rate = float(erg_rate(params, a, b))
    return RateCertificate(regime, a, b, rate, certificate_margin(params, regime, a, b))


def _check_cert(params, cert, regime):
    if cert.regime is not regime:
        raise RegimeError(f"bound requires a {regime} certificate, got {cert.regime}")
    got = classify(params)
    if got is not regime:
        raise RegimeError(f"certificate is {regime} but parameters are {got}")


def null_bound(params: SystemParams, cert: RateCertificate, k: int, N: int, t):
    """Upper bound on the probability of states ``1..N`` at time ``t`` from state ``k``.

    Returns ``(delta_k / delta_N) exp(-zeta t)``; vacuous when it exceeds 1.
    """
    _check_cert(params, cert, Regime.NULL_ERGODIC)
    if k < 1 or N < 1:
        raise ValueError("state indices must be >= 1")
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("time must be non-negative")
    w = cert.weights
    out = np.exp(w.log_delta(k) - w.log_delta(N) - cert.rate * t)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class ErgBound:
    """Result of :func:`erg_bound`.

    Attributes
    ----------
    value : float or ndarray
        ``4 exp(-alpha t) * weighted_sum`` at the requested times.
    weighted_sum : float
        ``sum_{i >= 2} g_i |p_i(0) - pi_i|`` over the truncation.
    tail_residual : float
        Geometric extrapolation of the omitted tail of the weighted sum.
    """

    value: object
    weighted_sum: float
    tail_residual: float


def _as_probs(v):
    return np.asarray(getattr(v, "probs", v), dtype=float)


def erg_bound(params: SystemParams, cert: RateCertificate, p0, pi, t, tail_tol: float = TAIL_TOL) -> ErgBound:
    """Bound on ``||p(t) - pi||_1`` for the exponentially ergodic regime.

    ``p0`` and ``pi`` are probability vectors (or snapshots) over states
    ``1..M`` of a common truncation.

    Raises
    ------
    UnreliableBoundError
        If a summand ``g_i |p_i(0) - pi_i|`` among the last two orbit levels
        exceeds ``tail_tol``.
    """
    _check_cert(params, cert, Regime.EXPONENTIALLY_ERGODIC)
    p0, pi = _as_probs(p0), _as_probs(pi)
    if p0.shape != pi.shape or p0.ndim != 1 or p0.size < 4:
        raise ValueError("p0 and pi must be vectors of equal length >= 4")
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("time must be non-negative")
    M = p0.size
    diff = np.abs(p0 - pi)[1:]
    log_g = cert.weights.log_g_upto(M)
    with np.errstate(divide="ignore"):
        summand = np.exp(log_g + np.log(diff))
    edge = summand[-4:].max()
    if edge > tail_tol:
        raise UnreliableBoundError(
            f"weighted deviation {edge:.3g} at the truncation edge exceeds {tail_tol:g}; "
            "enlarge the truncation")
    last, prev = summand[-2:].sum(), summand[-4:-2].sum()
    if last == 0:
        residual = 0.0
    elif prev > 0 and last < prev:
        r = last / prev
        residual = last * r / (1 - r)
    else:
        residual = math.inf
    total = math.fsum(summand)
    value = 4 * np.exp(-cert.rate * t) * total
    return ErgBound(float(value) if value.ndim == 0 else value, total, residual)
