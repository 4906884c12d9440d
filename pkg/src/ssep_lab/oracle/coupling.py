"""Coupling of two labelled exclusions and the meeting-time oracle.

The coupled pair is read off one process with k + 1 labelled particles driven
by bond clocks of rate 2 n^2: on a ring, every particle at an end of the bond
moves to the other end with probability 1/2 (all of them together).  The
first process ignores particle 2, the second ignores particle 1.  ``tau`` is
the first ring of the bond joining particles 1 and 2 while they are adjacent.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import ive

from ..errors import BoundaryMassTooLarge, InvalidInput
from ..seeding import bit_generator
from .uniformization import DEFAULT_TOL, uniformize

BOUNDARY_LIMIT = 1e-8


@dataclass
class TailEstimate:
    times: np.ndarray
    tail: np.ndarray
    se: np.ndarray
    replicas: int
    x_final: np.ndarray | None = None
    y_final: np.ndarray | None = None

    def rows(self) -> list[tuple]:
        return [(float(t), float(p), float(s), self.replicas) for t, p, s in zip(self.times, self.tail, self.se)]


def _start(start: Sequence[int], coordinate: int) -> np.ndarray:
    x = [int(v) for v in start]
    i = coordinate - 1
    if not 0 <= i < len(x):
        raise InvalidInput("coordinate out of range")
    if len(set(x)) != len(x):
        raise InvalidInput("start must have distinct sites")
    if x[i] + 1 in x:
        raise InvalidInput("start + e_i leaves the non-repetitive set")
    # particle 1 at x_i, particle 2 at x_i + 1, then the others in order
    others = [v for j, v in enumerate(x) if j != i]
    return np.asarray([x[i], x[i] + 1] + others, dtype=np.int64)


def simulate_coupling(k: int, start: Sequence[int], coordinate: int, horizon: float, n: int,
                      replicas: int, seed: int, record: float | None = None):
    """Simulate Z up to ``horizon``; returns tau (inf if beyond) and optional positions at ``record``.

    Uniformised: each of the 2(k+1) (particle, side) pairs proposes its bond at
    rate 2 n^2; a bond shared by two particles is proposed by its left particle
    only, so every occupied bond rings at rate 2 n^2.  Replicas stop at tau
    unless positions at ``record`` are requested.
    """
    if len(start) != k:
        raise InvalidInput("start must have k sites")
    z0 = _start(start, coordinate)
    m = k + 1
    gen = np.random.Generator(bit_generator(seed))
    rate = 4.0 * m * float(n) ** 2
    Z = np.tile(z0, (replicas, 1))
    t = np.zeros(replicas)
    tau = np.full(replicas, np.inf)
    snap = np.tile(z0, (replicas, 1)) if record is not None else None
    alive = np.arange(replicas)
    while alive.size:
        dt = gen.standard_exponential(alive.size) / rate
        tn = t[alive] + dt
        if record is not None:
            crossing = (t[alive] <= record) & (tn > record)
            snap[alive[crossing]] = Z[alive[crossing]]
        over = tn > horizon
        alive_next = alive[~over]
        tn = tn[~over]
        t[alive_next] = tn
        alive = alive_next
        if not alive.size:
            break
        j = gen.integers(0, m, alive.size)
        side = gen.integers(0, 2, alive.size)  # 1 means the right bond
        coin = gen.integers(0, 2, alive.size)
        Za = Z[alive]
        pos = Za[np.arange(alive.size), j]
        left_end = np.where(side == 1, pos, pos - 1)
        # void if the bond is shared and the proposer is its right particle
        at_left = (Za == left_end[:, None]).any(axis=1)
        at_right = (Za == (left_end + 1)[:, None]).any(axis=1)
        void = at_left & at_right & (side == 0)
        p1, p2 = Za[:, 0], Za[:, 1]
        hit = ~void & (np.minimum(p1, p2) == left_end) & (np.abs(p1 - p2) == 1)
        first = hit & np.isinf(tau[alive])
        tau[alive[first]] = tn[first]
        move = ~void & (coin == 1)
        if move.any():
            Zm = Za[move]
            le = left_end[move][:, None]
            Zm = np.where(Zm == le, le + 1, np.where(Zm == le + 1, le, Zm))
            Za[move] = Zm
        Z[alive] = Za
        if record is None:
            alive = alive[~hit]
    if record is not None:
        undone = t <= record
        snap[undone] = Z[undone]
    return tau, snap


def coupling_tau_tail(k: int, start: Sequence[int], coordinate: int, times: Sequence[float], n: int,
                      replicas: int, seed: int, record: float | None = None) -> TailEstimate:
    """Empirical P(tau > t) with binomial standard errors."""
    if replicas < 1:
        raise InvalidInput("replicas must be positive")
    times = np.asarray(times, dtype=float)
    horizon = float(times.max()) if times.size else 0.0
    if record is not None:
        horizon = max(horizon, record)
    tau, snap = simulate_coupling(k, start, coordinate, horizon, n, replicas, seed, record)
    tail = np.array([(tau > t).mean() for t in times])
    se = np.sqrt(tail * (1.0 - tail) / replicas)
    xf = yf = None
    if snap is not None:
        xf = np.delete(snap, 1, axis=1)
        yf = np.delete(snap, 0, axis=1)
        # restore the original coordinate order of the labelled processes
        i = coordinate - 1
        order = list(range(1, i + 1)) + [0] + list(range(i + 1, k))
        xf, yf = xf[:, order], yf[:, order]
    return TailEstimate(times, tail, se, replicas, xf, yf)


@dataclass
class MeetingTail:
    tail: float
    boundary_mass: float
    sites: int


def meeting_time_oracle(t: float, n: int, max_distance: int | None = None, tol: float = DEFAULT_TOL,
                        boundary_limit: float = BOUNDARY_LIMIT) -> MeetingTail:
    """P(two independent walks started one apart have not met by t).

    The separation jumps by +-1 at rate 2 n^2 each; state 0 absorbs and state M
    collects the mass that would leave {0..M}, reported as the boundary mass.
    """
    tau = float(n) ** 2 * t
    if max_distance is None:
        max_distance = int(math.ceil(12.0 * math.sqrt(4.0 * tau + 1.0))) + 10
    M = int(max_distance)
    if M < 2:
        raise InvalidInput("max_distance must be at least 2")
    v = np.zeros(M + 1)
    v[1] = 1.0

    def step(w):
        # one jump of the separation, +-1 with probability 1/2; 0 and M hold
        out = np.zeros_like(w)
        out[0], out[M] = w[0], w[M]
        out[0:M - 1] += 0.5 * w[1:M]
        out[2:M + 1] += 0.5 * w[1:M]
        return out

    res = uniformize(step, v, 4.0 * tau, tol)
    w = res.vector
    boundary = float(w[M])
    if boundary > boundary_limit:
        raise BoundaryMassTooLarge(f"mass {boundary:.3g} reached distance {M}")
    return MeetingTail(float(1.0 - w[0]), boundary, M)


def meeting_time_closed_form(t: float, n: int) -> float:
    """Reflection principle: P(no meeting by t) = q(0) + q(1) for the separation walk."""
    lam = 4.0 * float(n) ** 2 * t
    return float(ive(0, lam) + ive(1, lam))
