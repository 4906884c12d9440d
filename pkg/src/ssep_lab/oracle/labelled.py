"""Labelled exclusion: transition probabilities and gradient scans.

Labelled stirring moves every particle sitting at an end of a ringing edge to
the other end, so two adjacent labelled particles exchange places.  The
transition probabilities depend on ``n`` and ``t`` only through ``n^2 t``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np
import scipy.sparse as sp
from scipy.stats import kendalltau

from ..errors import InvalidInput, SystemTooLarge
from ..meanfield import walk_kernel
from .uniformization import DEFAULT_TOL, poisson_window, uniformize

MAX_LABELS = 3
MAX_LABELLED_SITES = 24
TREND_ALPHA = 0.01


class LabelledSystem:
    """``k`` labelled particles on sites ``0..nsites-1`` with a closed boundary."""

    def __init__(self, nsites: int, k: int, n: int = 1, max_sites: int = MAX_LABELLED_SITES,
                 max_labels: int = MAX_LABELS):
        if k < 1 or nsites < k + 1:
            raise InvalidInput("need 1 <= k < nsites")
        if k > max_labels or nsites > max_sites:
            raise SystemTooLarge(f"labelled system k={k} on {nsites} sites exceeds k<={max_labels}, sites<={max_sites}")
        self.nsites, self.k, self.n = int(nsites), int(k), int(n)
        self.states = [s for s in itertools.product(range(nsites), repeat=k) if len(set(s)) == k]
        self.index = {s: i for i, s in enumerate(self.states)}
        rows, cols = [], []
        for i, s in enumerate(self.states):
            for e in range(nsites - 1):
                moved = tuple(e + 1 if x == e else e if x == e + 1 else x for x in s)
                if moved != s:
                    rows.append(i)
                    cols.append(self.index[moved])
        m = len(self.states)
        # uniformised jump matrix with rate (#edges) per unit of n^2 t
        A = sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(m, m))
        stay = (nsites - 1) - np.asarray(A.sum(axis=1)).ravel()
        self.P = (A + sp.diags(stay)).tocsr() / (nsites - 1)
        self.generator = ((A - sp.diags(np.asarray(A.sum(axis=1)).ravel())) * float(n) ** 2).tocsr()

    @property
    def nstates(self) -> int:
        return len(self.states)

    def state(self, x: Sequence[int]) -> int:
        x = tuple(int(v) for v in x)
        if x not in self.index:
            raise InvalidInput(f"{x} is not a state of the labelled system")
        return self.index[x]

    def evolve(self, v: np.ndarray, t: float, tol: float = DEFAULT_TOL) -> np.ndarray:
        lam = (self.nsites - 1) * float(self.n) ** 2 * t
        return uniformize(lambda w: self.P @ w, v, lam, tol).vector


def lex_transition(sys: LabelledSystem, x: Sequence[int], y: Sequence[int], t: float,
                   tol: float = DEFAULT_TOL) -> float:
    """p_t^lex(x, y) on the finite labelled system."""
    if t < 0:
        raise InvalidInput("negative time")
    v = np.zeros(sys.nstates)
    v[sys.state(x)] = 1.0
    # the generator is symmetric, so the evolved delta at y is p_t(x, y)
    return float(sys.evolve(v, t, tol)[sys.state(y)])


# gradient scans
@dataclass
class GradientScan:
    k: int
    coordinate: int
    n: int
    times: np.ndarray
    raw_sup: np.ndarray
    scaled_sup: np.ndarray
    mode: str
    notes: dict = field(default_factory=dict)

    @property
    def constant(self) -> float:
        return float(self.scaled_sup.max())

    @property
    def ratio(self) -> float:
        return float(self.scaled_sup.max() / self.scaled_sup.min())

    @property
    def trend_pvalue(self) -> float:
        """One-sided Kendall test for growth of the scaled sup along the grid."""
        if self.times.size < 3:
            return 1.0
        return float(kendalltau(np.arange(self.times.size), self.scaled_sup, alternative="greater").pvalue)

    @property
    def trend_flag(self) -> bool:
        return self.trend_pvalue <= TREND_ALPHA

    def rows(self) -> list[tuple]:
        n2 = float(self.n) ** 2
        return [(self.k, self.n, float(t), float(t * n2), float(r), float(s))
                for t, r, s in zip(self.times, self.raw_sup, self.scaled_sup)]

    def to_dict(self) -> dict:
        return {"k": self.k, "coordinate": self.coordinate, "n": self.n, "mode": self.mode,
                "times": self.times.tolist(), "raw_sup": self.raw_sup.tolist(),
                "scaled_sup": self.scaled_sup.tolist(), "constant": self.constant, "ratio": self.ratio,
                "trend_pvalue": self.trend_pvalue, "trend_flag": self.trend_flag, **self.notes}


def _finite_sups(sys: LabelledSystem, coordinate: int, taus: np.ndarray, tol: float) -> np.ndarray:
    i = coordinate - 1
    pairs = []
    for s in sys.states:
        t = list(s)
        t[i] += 1
        if tuple(t) in sys.index:
            pairs.append((sys.index[s], sys.index[tuple(t)]))
    if not pairs:
        raise InvalidInput("no admissible shifts on this system")
    V = np.zeros((sys.nstates, len(pairs)))
    for j, (a, b) in enumerate(pairs):
        V[a, j] += 1.0
        V[b, j] -= 1.0
    out, prev = [], 0.0
    rate = sys.nsites - 1
    for tau in taus:
        if tau > prev:
            V = uniformize(lambda w: sys.P @ w, V, rate * (tau - prev), tol).vector
        out.append(np.abs(V).max())
        prev = tau
    return np.asarray(out)


def _lattice_sups_k1(taus: np.ndarray) -> np.ndarray:
    out = []
    for tau in taus:
        q = walk_kernel(2.0 * tau).two_sided()
        out.append(np.abs(np.diff(np.concatenate([[0.0], q, [0.0]]))).max())
    return np.asarray(out)


def _pair_step(V: np.ndarray) -> np.ndarray:
    """One uniformised step of two labelled particles, V[a, b] indexed by positions.

    Each particle proposes a left or a right move with probability 1/4; a move
    out of the window is void; a move onto the other particle swaps the two
    when the mover is the left particle and is void otherwise, so the shared
    edge keeps its single clock.
    """
    M = V.shape[0]
    acc = np.empty_like(V)
    # a - 1, a + 1, b - 1, b + 1; a blocked move reads V itself
    acc[1:, :] = V[:-1, :]
    acc[0, :] = V[0, :]
    acc[:-1, :] += V[1:, :]
    acc[-1, :] += V[-1, :]
    acc[:, 1:] += V[:, :-1]
    acc[:, 0] += V[:, 0]
    acc[:, :-1] += V[:, 1:]
    acc[:, -1] += V[:, -1]
    # collision fixes: b = a + 1
    a = np.arange(M - 1)
    b = a + 1
    # a right onto b: swap, the plain shift read V[b, b]
    acc[a, b] += V[b, a] - V[b, b]
    # b left onto a: void, the plain shift read V[a, a]
    acc[a, b] += V[a, b] - V[a, a]
    # a = b + 1: a left onto b is void, b right onto a swaps
    acc[b, a] += V[b, a] - V[a, a]
    acc[b, a] += V[a, b] - V[b, b]
    acc *= 0.25
    np.fill_diagonal(acc, 0.0)
    return acc


def pair_lattice_evolve(V: np.ndarray, tau: float, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Evolve a function of two labelled positions by n^2 t = tau (rate 4 per unit)."""
    return uniformize(_pair_step, V, 4.0 * tau, tol).vector


DEFAULT_OFFSETS = (-3, -2, -1, 2, 3, 4, 8)


def _lattice_sups_k2(taus: np.ndarray, offsets: Sequence[int], tol: float, sigmas: float) -> tuple[np.ndarray, int]:
    reach = int(math.ceil(sigmas * math.sqrt(2.0 * max(taus.max(), 1.0)))) + 2
    dmax = max(abs(d) for d in offsets) + 1
    M = 2 * (reach + dmax) + 1
    c = reach + dmax
    sups = np.zeros(taus.size)
    for d in offsets:
        if d in (0, 1):
            raise InvalidInput("offsets 0 and 1 are not admissible for the first coordinate")
        V = np.zeros((M, M))
        V[c, c + d] = 1.0
        V[c + 1, c + d] = -1.0
        prev = 0.0
        for j, tau in enumerate(taus):
            if tau > prev:
                V = pair_lattice_evolve(V, tau - prev, tol)
            sups[j] = max(sups[j], np.abs(V).max())
            prev = tau
    return sups, M


@lru_cache(maxsize=64)
def _cached_lattice(k: int, taus: tuple, offsets: tuple, tol: float, sigmas: float):
    t = np.asarray(taus)
    if k == 1:
        return _lattice_sups_k1(t), None
    return _lattice_sups_k2(t, offsets, tol, sigmas)


def gradient_scan(k: int, times: Sequence[float], n: int, coordinate: int = 1, sites: int | None = None,
                  tol: float = DEFAULT_TOL, offsets: Sequence[int] = DEFAULT_OFFSETS,
                  sigmas: float = 7.0) -> GradientScan:
    """sup_{x,y} |p_t(x,y) - p_t(x + e_i, y)| and its scaling by (n^2 t + 1)^{(k+1)/2}.

    With ``sites`` the scan is exact on that finite closed system.  Without it
    the lattice is approximated by a window wide enough that the walk never
    feels the edges (``sigmas`` standard deviations of the largest time): k = 1
    uses the Bessel kernel directly and k = 2 evolves the signed difference of
    two point masses on the two-particle grid, with the supremum over starting
    points taken over the separations in ``offsets`` (translation invariance).
    """
    times = np.asarray(sorted(float(t) for t in times))
    if times.size == 0 or times[0] < 0:
        raise InvalidInput("times must be nonnegative")
    if not 1 <= coordinate <= k:
        raise InvalidInput("coordinate must be in 1..k")
    taus = times * float(n) ** 2
    notes: dict = {}
    if sites is not None:
        sys = LabelledSystem(sites, k, n)
        raw = _finite_sups(sys, coordinate, taus, tol)
        mode = f"finite:{sites}"
    else:
        if k not in (1, 2):
            raise InvalidInput("lattice scans support k = 1 and k = 2")
        if k == 2 and coordinate != 1:
            raise InvalidInput("lattice k = 2 scans use coordinate 1 (the other is symmetric)")
        raw, M = _cached_lattice(k, tuple(taus.tolist()), tuple(offsets), tol, sigmas)
        mode = "lattice"
        if M is not None:
            notes = {"window_sites": M, "offsets": list(offsets)}
    scaled = raw * (taus + 1.0) ** ((k + 1) / 2.0)
    return GradientScan(k, coordinate, n, times, raw, scaled, mode, notes)


def dyadic_grid(lo: float, hi: float) -> np.ndarray:
    """lo * 2^j for j >= 0 while <= hi."""
    out = [lo]
    while out[-1] * 2 <= hi * (1 + 1e-12):
        out.append(out[-1] * 2)
    return np.asarray(out)
