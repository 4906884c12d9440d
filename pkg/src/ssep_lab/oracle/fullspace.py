"""Full state-space stirring dynamics on a small closed segment."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.sparse as sp
from scipy.linalg import expm

from ..errors import InvalidInput, SystemTooLarge
from ..profiles import Profile
from .uniformization import DEFAULT_TOL, uniformize

MAX_FULL_SITES = 16


@dataclass
class Evolved:
    dist: np.ndarray
    renormalisation: float
    dropped_mass: float


class SmallSystem:
    """Sites ``x0, ..., x0 + nsites - 1``; bit ``i`` of a state is the site ``x0 + i``.

    Each of the ``nsites - 1`` edges swaps its two occupancies at rate ``n^2``.
    """

    def __init__(self, nsites: int, n: int, x0: int = 0, max_sites: int = MAX_FULL_SITES):
        if nsites < 2:
            raise InvalidInput("need at least two sites")
        if nsites > max_sites:
            raise SystemTooLarge(f"{nsites} sites exceed the full state-space cap of {max_sites}")
        self.nsites, self.n, self.x0 = int(nsites), int(n), int(x0)
        self.nstates = 1 << self.nsites
        states = np.arange(self.nstates, dtype=np.int64)
        self._swaps = []
        for e in range(self.nsites - 1):
            differ = ((states >> e) ^ (states >> (e + 1))) & 1
            self._swaps.append(states ^ (differ * (3 << e)))
        self.bits = ((states[:, None] >> np.arange(self.nsites)) & 1).astype(np.float64)

    @property
    def sites(self) -> np.ndarray:
        return np.arange(self.x0, self.x0 + self.nsites)

    @property
    def nedges(self) -> int:
        return self.nsites - 1

    @property
    def rate(self) -> float:
        """Uniformisation rate: total clock rate n^2 (#edges)."""
        return float(self.n) ** 2 * self.nedges

    def column(self, x: int) -> int:
        i = int(x) - self.x0
        if not 0 <= i < self.nsites:
            raise InvalidInput(f"site {x} outside the system")
        return i

    def step(self, v: np.ndarray) -> np.ndarray:
        """P v with P the average of the edge swaps (symmetric, doubly stochastic)."""
        out = np.zeros_like(v)
        for perm in self._swaps:
            out += v[perm]
        return out / self.nedges

    def generator(self) -> sp.csr_matrix:
        rows, cols = [], []
        for perm in self._swaps:
            rows.append(np.arange(self.nstates))
            cols.append(perm)
        r, c = np.concatenate(rows), np.concatenate(cols)
        A = sp.csr_matrix((np.full(r.size, float(self.n) ** 2), (r, c)), shape=(self.nstates, self.nstates))
        return (A - sp.diags(np.full(self.nstates, self.rate))).tocsr()

    def product_measure(self, profile: Profile) -> np.ndarray:
        p = profile(self.sites / self.n)
        return np.prod(np.where(self.bits == 1, p, 1.0 - p), axis=1)

    def one_particle_density(self, profile: Profile, t: float) -> np.ndarray:
        """Mean occupations of the finite system: the reflecting one-particle walk."""
        N = self.nsites
        L = np.zeros((N, N))
        for e in range(N - 1):
            L[e, e] -= 1.0
            L[e + 1, e + 1] -= 1.0
            L[e, e + 1] += 1.0
            L[e + 1, e] += 1.0
        return expm(float(self.n) ** 2 * t * L) @ profile(self.sites / self.n)


def evolve_distribution(sys: SmallSystem, dist: np.ndarray, t: float, tol: float = DEFAULT_TOL,
                        normalise: bool = True) -> Evolved:
    """dist e^{tQ}; the generator is symmetric, so rows and columns coincide."""
    dist = np.asarray(dist, dtype=float)
    if dist.shape != (sys.nstates,):
        raise InvalidInput("distribution length does not match the state space")
    if t < 0:
        raise InvalidInput("negative time")
    if normalise and abs(dist.sum() - 1.0) > 1e-12:
        raise InvalidInput("distribution does not sum to 1")
    res = uniformize(sys.step, dist, sys.rate * t, tol)
    out, delta = res.vector, 0.0
    if normalise:
        total = out.sum()
        delta = float(total - 1.0)
        out = out / total
    return Evolved(out, delta, res.dropped_mass)


def exact_correlation(sys: SmallSystem, profile: Profile, times: Sequence[float],
                      site_lists: Sequence[Sequence[int]], tol: float = DEFAULT_TOL) -> float:
    """E[prod_j prod_{x in sites_j} (eta_{t_j}(x) - rho_{t_j}(x))] from the product measure.

    Centring uses the finite system's own mean density, so the value is exact
    for the finite dynamics up to the uniformisation tolerance.
    """
    if len(times) != len(site_lists):
        raise InvalidInput("one site list per time")
    if any(b < a for a, b in zip(times, times[1:])) or (times and times[0] < 0):
        raise InvalidInput("times must be nonnegative and nondecreasing")
    mu = sys.product_measure(profile)
    prev = 0.0
    for t, sites in zip(times, site_lists):
        if t > prev:
            mu = uniformize(sys.step, mu, sys.rate * (t - prev), tol).vector
        rho = sys.one_particle_density(profile, t)
        f = np.ones(sys.nstates)
        for x in sites:
            i = sys.column(x)
            f *= sys.bits[:, i] - rho[i]
        mu = mu * f
        prev = t
    return float(math.fsum(mu))
