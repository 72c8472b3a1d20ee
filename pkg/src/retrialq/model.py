"""Queue parameters, state enumeration and truncated generator matrices.

States ``(server, orbit)`` are numbered from 1::

    (0, n) -> 2n + 1
    (1, n) -> 2n + 2

so the chain alternates idle and busy states level by level. All indices at
the public interface are 1-based; arrays are stored 0-based internally.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np
import scipy.sparse as sp

__all__ = [
    "SystemParams",
    "QueueState",
    "TruncatedGenerator",
    "state_to_index",
    "index_to_state",
    "transition_rates",
    "build_generator",
    "generator_norm",
    "KINDS",
]

KINDS = ("Q", "A", "B")
MIN_TRUNCATION = 4


@dataclass(frozen=True)
class SystemParams:
    """Rates of the retrial queue.

    Parameters
    ----------
    lam : float
        Arrival rate of primary customers.
    mu : float
        Service rate.
    mu0 : float
        Retrial rate of the head-of-line orbit customer.
    """

    lam: float
    mu: float
    mu0: float

    def __post_init__(self):
        for name in ("lam", "mu", "mu0"):
            value = getattr(self, name)
            if not isinstance(value, (int, float, np.floating, np.integer)) or isinstance(value, bool):
                raise TypeError(f"{name} must be a real number, got {value!r}")
            if not math.isfinite(value) or value <= 0:
                raise ValueError(f"{name} must be positive and finite, got {value!r}")
            object.__setattr__(self, name, float(value))

    def scaled(self, c: float) -> "SystemParams":
        """Return the parameters with every rate multiplied by ``c``."""
        return SystemParams(self.lam * c, self.mu * c, self.mu0 * c)

    def as_dict(self) -> dict:
        return {"lambda": self.lam, "mu": self.mu, "mu0": self.mu0}


@dataclass(frozen=True)
class QueueState:
    """Server occupancy (0 or 1) and orbit size."""

    server: int
    orbit: int

    def __post_init__(self):
        if self.server not in (0, 1):
            raise ValueError(f"server must be 0 or 1, got {self.server!r}")
        if int(self.orbit) != self.orbit or self.orbit < 0:
            raise ValueError(f"orbit must be a non-negative integer, got {self.orbit!r}")
        object.__setattr__(self, "orbit", int(self.orbit))


def state_to_index(s: QueueState) -> int:
    return 2 * s.orbit + 1 + s.server


def index_to_state(i: int) -> QueueState:
    if int(i) != i or i < 1:
        raise ValueError(f"state index must be an integer >= 1, got {i!r}")
    i = int(i)
    return QueueState(server=(i + 1) % 2, orbit=(i - 1) // 2)


def transition_rates(params: SystemParams, i: int) -> list[tuple[int, float]]:
    """Out-transitions ``(target index, rate)`` of state ``i``, sorted by target."""
    s = index_to_state(i)
    if s.server == 1:
        # service completes; an arrival to a busy server joins the orbit
        return [(i - 1, params.mu), (i + 2, params.lam)]
    if s.orbit == 0:
        return [(i + 1, params.lam)]
    return [(i - 1, params.mu0), (i + 1, params.lam)]


def generator_norm(params: SystemParams) -> float:
    """Column-sum norm of the (untruncated) forward operator, ``2 lam + 2 max(mu, mu0)``."""
    return 2 * params.lam + 2 * max(params.mu, params.mu0)


@dataclass(frozen=True)
class TruncatedGenerator:
    """A finite slice of Q, of its transpose A, or of the reduced matrix B.

    ``matrix`` is 0-based; entry ``(i-1, j-1)`` holds the 1-based entry ``(i, j)``.
    For kind B, the 1-based row/column ``r`` corresponds to state ``r + 1``.
    """

    kind: str
    matrix: sp.csr_matrix

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()

    def entries(self) -> Iterable[tuple[int, int, float]]:
        """Nonzero entries as 1-based ``(i, j, rate)``, row-major."""
        coo = self.matrix.tocoo()
        order = np.lexsort((coo.col, coo.row))
        for r, c, v in zip(coo.row[order], coo.col[order], coo.data[order]):
            if v != 0:
                yield int(r) + 1, int(c) + 1, float(v)

    def to_text(self) -> str:
        """Coordinate-list text: header ``kind M`` then ``i j rate`` lines."""
        lines = [f"{self.kind} {self.size}"]
        lines += [f"{i} {j} {v:.17g}" for i, j, v in self.entries()]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "TruncatedGenerator":
        rows = [ln.split() for ln in text.splitlines() if ln.strip()]
        if not rows or len(rows[0]) != 2:
            raise ValueError("missing 'kind M' header line")
        kind, size = rows[0][0], int(rows[0][1])
        if kind not in KINDS:
            raise ValueError(f"unknown matrix kind {kind!r}")
        body = np.array([[float(x) for x in r] for r in rows[1:]]).reshape(-1, 3)
        i = body[:, 0].astype(int) - 1
        j = body[:, 1].astype(int) - 1
        if body.size and (i.min() < 0 or j.min() < 0 or i.max() >= size or j.max() >= size):
            raise ValueError("entry index outside the declared size")
        mat = sp.csr_matrix((body[:, 2], (i, j)), shape=(size, size))
        return cls(kind, mat)

    def write(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_text())

    @classmethod
    def read(cls, path) -> "TruncatedGenerator":
        with open(path) as fh:
            return cls.from_text(fh.read())


def _truncated_q(params: SystemParams, M: int) -> sp.csr_matrix:
    rows, cols, vals = [], [], []
    for i in range(1, M + 1):
        out = transition_rates(params, i)
        if i >= M - 1:
            # conservative truncation: the top two states lose their arrivals
            out = [(j, r) for j, r in out if j < i]
        for j, r in out:
            if j <= M:
                rows.append(i - 1)
                cols.append(j - 1)
                vals.append(r)
        rows.append(i - 1)
        cols.append(i - 1)
        vals.append(-math.fsum(r for j, r in out if j <= M))
    return sp.csr_matrix((vals, (rows, cols)), shape=(M, M))


def build_generator(params: SystemParams, M: int, kind: str = "Q") -> TruncatedGenerator:
    """Truncate the generator to states ``1..M``.

    Parameters
    ----------
    params : SystemParams
    M : int
        Number of retained states, at least 4.
    kind : {"Q", "A", "B"}
        ``Q`` is the intensity matrix, ``A`` its transpose (the forward
        Kolmogorov operator) and ``B`` the ``(M-1) x (M-1)`` reduced matrix
        ``b_ij = a_ij - a_i1`` over states ``2..M`` obtained by eliminating
        ``p_1`` through normalization.

    Notes
    -----
    The arrival rate is removed from the two highest-index states and the
    diagonal adjusted, so every row of Q (column of A) still sums to zero.
    """
    if int(M) != M or M < MIN_TRUNCATION:
        raise ValueError(f"truncation size must be an integer >= {MIN_TRUNCATION}, got {M!r}")
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}, got {kind!r}")
    Q = _truncated_q(params, int(M))
    if kind == "Q":
        return TruncatedGenerator("Q", Q)
    A = Q.T.tocsr()
    if kind == "A":
        return TruncatedGenerator("A", A)
    A = A.tolil()
    B = A[1:, 1:].toarray() - A[1:, [0]].toarray()
    return TruncatedGenerator("B", sp.csr_matrix(B))
