"""Exact event-driven simulation of the retrial queue.

Each trajectory draws its random numbers from its own Philox stream keyed by
``(seed, path index)``, so results do not depend on the order in which paths
are run. The state recorded at an observation time ``t`` is the state after
the last jump at or before ``t``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .model import QueueState, SystemParams, index_to_state

__all__ = ["SimConfig", "SimResult", "step_distribution", "simulate_paths", "jump_chain",
           "ARRIVAL", "SERVICE", "RETRIAL"]

ARRIVAL, SERVICE, RETRIAL = 0, 1, 2
_MAX_ORBIT = 2**62
_BUFFER = 512


@dataclass(frozen=True)
class SimConfig:
    horizon: float
    paths: int
    seed: int = 0
    initial: QueueState = QueueState(0, 0)

    def __post_init__(self):
        if not (self.horizon > 0 and math.isfinite(self.horizon)):
            raise ValueError(f"horizon must be positive, got {self.horizon!r}")
        if int(self.paths) != self.paths or self.paths < 1:
            raise ValueError(f"paths must be a positive integer, got {self.paths!r}")
        if int(self.seed) != self.seed or not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an integer in [0, 2**64)")


def step_distribution(state: QueueState, params: SystemParams) -> list[tuple[QueueState, float]]:
    """Possible next states and their rates."""
    n = state.orbit
    if state.server == 1:
        return [(QueueState(1, n + 1), params.lam), (QueueState(0, n), params.mu)]
    if n == 0:
        return [(QueueState(1, 0), params.lam)]
    return [(QueueState(1, n), params.lam), (QueueState(1, n - 1), params.mu0)]


def _stream(seed: int, path: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=(int(seed) << 64) | int(path)))


class _Uniforms:
    """Buffered uniforms on (0, 1] from one path's stream."""

    def __init__(self, rng):
        self.rng = rng
        self.buf = []
        self.pos = 0

    def __call__(self):
        if self.pos == len(self.buf):
            self.buf = (1.0 - self.rng.random(_BUFFER)).tolist()
            self.pos = 0
        u = self.buf[self.pos]
        self.pos += 1
        return u


def _jump(server, orbit, lam, mu, mu0, u):
    """Holding rate and next state; ``u`` is uniform on (0, 1]."""
    if server == 1:
        total = lam + mu
        if u * total <= lam:
            return total, 1, orbit + 1, ARRIVAL
        return total, 0, orbit, SERVICE
    if orbit == 0:
        return lam, 1, 0, ARRIVAL
    total = lam + mu0
    if u * total <= lam:
        return total, 1, orbit, ARRIVAL
    return total, 1, orbit - 1, RETRIAL


@dataclass(frozen=True)
class SimResult:
    """Empirical state distributions at the observation times.

    ``counts[j, i - 1]`` is the number of paths in state ``i`` at ``times[j]``.
    """

    times: np.ndarray
    counts: np.ndarray
    paths: int

    @property
    def probabilities(self) -> np.ndarray:
        return self.counts / self.paths

    @property
    def stderr(self) -> np.ndarray:
        p = self.probabilities
        return np.sqrt(p * (1 - p) / self.paths)

    def distribution(self, j: int, M: int | None = None) -> np.ndarray:
        """Empirical probabilities at ``times[j]`` over states ``1..M``.

        Mass observed above ``M`` is dropped, so the result can sum to less than 1.
        """
        p = self.probabilities[j]
        if M is None:
            return p.copy()
        out = np.zeros(M)
        k = min(M, p.size)
        out[:k] = p[:k]
        return out

    def mean_orbit(self) -> np.ndarray:
        orbit = (np.arange(1, self.counts.shape[1] + 1) - 1) // 2
        return self.probabilities @ orbit

    def to_csv(self, fh=None) -> str | None:
        """Rows ``t,server,orbit,count,probability,stderr`` for observed states."""
        sink = io.StringIO() if fh is None else fh
        w = csv.writer(sink, lineterminator="\n")
        w.writerow(["t", "server", "orbit", "count", "probability", "stderr"])
        p, se = self.probabilities, self.stderr
        for j, t in enumerate(self.times):
            for i in np.flatnonzero(self.counts[j]):
                s = index_to_state(int(i) + 1)
                w.writerow([f"{t:.15g}", s.server, s.orbit, int(self.counts[j, i]),
                            f"{p[j, i]:.15g}", f"{se[j, i]:.15g}"])
        return sink.getvalue() if fh is None else None


def _observe_path(params, initial, observe_at, rng):
    lam, mu, mu0 = params.lam, params.mu, params.mu0
    uniform = _Uniforms(rng)
    server, orbit = initial.server, initial.orbit
    t = 0.0
    seen = []
    k, n_obs = 0, len(observe_at)
    while k < n_obs:
        u_hold, u_pick = uniform(), uniform()
        total, nserver, norbit, _ = _jump(server, orbit, lam, mu, mu0, u_pick)
        t_next = t - math.log(u_hold) / total
        while k < n_obs and observe_at[k] < t_next:
            seen.append(2 * orbit + 1 + server)
            k += 1
        if norbit >= _MAX_ORBIT:
            raise OverflowError("orbit size exceeded the integer guard")
        server, orbit, t = nserver, norbit, t_next
    return seen


def simulate_paths(params: SystemParams, cfg: SimConfig, observe_at=None) -> SimResult:
    """Simulate ``cfg.paths`` independent trajectories and tabulate states.

    Parameters
    ----------
    params : SystemParams
    cfg : SimConfig
    observe_at : array_like, optional
        Non-decreasing times in ``[0, cfg.horizon]``; defaults to the horizon.

    Returns
    -------
    SimResult
    """
    times = np.atleast_1d(np.asarray(cfg.horizon if observe_at is None else observe_at, dtype=float))
    if times[0] < 0 or times[-1] > cfg.horizon or np.any(np.diff(times) < 0):
        raise ValueError("observation times must be non-decreasing within [0, horizon]")
    obs = times.tolist()
    rows = []
    for i in range(cfg.paths):
        rows.append(_observe_path(params, cfg.initial, obs, _stream(cfg.seed, i)))
    idx = np.asarray(rows, dtype=np.int64).reshape(cfg.paths, len(obs))
    K = int(idx.max())
    counts = np.zeros((len(obs), K), dtype=np.int64)
    for j in range(len(obs)):
        counts[j] = np.bincount(idx[:, j] - 1, minlength=K)
    return SimResult(times, counts, cfg.paths)


def jump_chain(params: SystemParams, initial: QueueState, n_events: int, seed: int = 0):
    """Run one trajectory for ``n_events`` jumps.

    Returns
    -------
    states : ndarray of int, shape (n_events + 1, 2)
        ``(server, orbit)`` before the first jump and after every jump.
    holding : ndarray, shape (n_events,)
        Time spent in ``states[e]`` before jump ``e``.
    kinds : ndarray of int, shape (n_events,)
        ``ARRIVAL``, ``SERVICE`` or ``RETRIAL``.
    """
    lam, mu, mu0 = params.lam, params.mu, params.mu0
    uniform = _Uniforms(_stream(seed, 0))
    states = np.empty((n_events + 1, 2), dtype=np.int64)
    holding = np.empty(n_events)
    kinds = np.empty(n_events, dtype=np.int8)
    server, orbit = initial.server, initial.orbit
    states[0] = server, orbit
    for e in range(n_events):
        u_hold, u_pick = uniform(), uniform()
        total, server, orbit, kind = _jump(server, orbit, lam, mu, mu0, u_pick)
        holding[e] = -math.log(u_hold) / total
        kinds[e] = kind
        states[e + 1] = server, orbit
    return states, holding, kinds

