"""Mean density machinery: discrete and continuum heat equations.

The discrete mean ``rho_t^n(x)`` solves the lattice heat equation with jump rate
``n^2`` to each neighbour, so it is the initial profile convolved with the kernel
``q_t(k) = exp(-2 n^2 t) I_k(2 n^2 t)`` of a continuous-time simple random walk
with total jump rate ``2 n^2``.  The continuum density is the initial profile
smoothed by the variance ``2t`` Gaussian.
"""
from __future__ import annotations

import math
import threading
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad, quad_vec
from scipy.special import ive

from .errors import InvalidInput, InvalidTime, QuadratureFailure
from .profiles import Profile, compressibility

KERNEL_FLOOR = 1e-14
# above this Bessel argument the local CLT replaces the Bessel series
LCLT_THRESHOLD = 1e9
_EPS = np.finfo(float).eps


def heat_kernel(t: float, u, v):
    """p_t(u, v) = exp(-(u - v)^2 / 4t) / sqrt(4 pi t)."""
    if not t > 0:
        raise InvalidTime(f"heat kernel needs t > 0, got {t}")
    d = np.asarray(u, dtype=float) - np.asarray(v, dtype=float)
    return np.exp(-d * d / (4.0 * t)) / math.sqrt(4.0 * math.pi * t)


def heat_kernel_integral(a: float, x):
    """int_0^a p_r(x) dr, the time-integrated heat kernel (closed form)."""
    x = np.abs(np.asarray(x, dtype=float))
    if a <= 0:
        return np.zeros_like(x)
    from scipy.special import erfc

    return np.sqrt(a / math.pi) * np.exp(-x * x / (4.0 * a)) - 0.5 * x * erfc(x / (2.0 * math.sqrt(a)))


@dataclass(frozen=True)
class QuadratureSettings:
    rel_tol: float = 1e-8
    abs_tol: float = 1e-12
    cutoff: float = 8.0
    max_depth: int = 200

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise InvalidInput("quadrature tolerances must be positive")
        if self.cutoff < 6:
            raise InvalidInput("spatial cutoff must be at least 6")
        if self.max_depth < 1:
            raise InvalidInput("max_depth must be positive")


@dataclass(frozen=True)
class DiscreteKernel:
    """One-sided table q[0..K] of the symmetric walk kernel."""

    q: np.ndarray
    discarded: float

    @property
    def radius(self) -> int:
        return self.q.size - 1

    def two_sided(self) -> np.ndarray:
        return np.concatenate([self.q[:0:-1], self.q])


def walk_kernel(lam: float) -> DiscreteKernel:
    """Kernel of a rate-``lam`` walk at time 1, i.e. ``e^{-lam} I_k(lam)``."""
    if lam < 0:
        raise InvalidTime("negative time")
    if lam == 0:
        return DiscreteKernel(np.ones(1), 0.0)
    kmax = int(math.ceil(10.0 * math.sqrt(lam) + 40.0))
    k = np.arange(kmax + 1)
    if lam > LCLT_THRESHOLD:
        q = np.exp(-0.5 * k * k / lam) / math.sqrt(2.0 * math.pi * lam)
    else:
        q = ive(k, lam)
    keep = np.nonzero(q >= KERNEL_FLOOR)[0]
    q = q[: keep[-1] + 1] if keep.size else q[:1]
    mass = q[0] + 2.0 * q[1:].sum()
    discarded = max(0.0, 1.0 - mass) + (q.size + 1) * _EPS
    return DiscreteKernel(q, discarded)


class HeatField:
    """Discrete and continuum mean densities for one profile.

    The cache is an exact memo (no interpolation), so cached reads equal direct
    evaluation bit for bit.  A lock guards it for concurrent readers.
    """

    def __init__(
        self,
        profile: Profile,
        n: int | None = None,
        settings: QuadratureSettings | None = None,
        use_cache: bool = True,
    ):
        self.profile = profile
        self.n = n
        self.settings = settings or QuadratureSettings()
        self.use_cache = use_cache
        self._kernels: dict[float, DiscreteKernel] = {}
        self._memo: dict[tuple, np.ndarray] = {}
        self._lock = threading.Lock()

    # discrete side
    def _need_n(self) -> int:
        if self.n is None:
            raise InvalidInput("this HeatField has no lattice scaling n")
        return self.n

    def kernel(self, t: float) -> DiscreteKernel:
        n = self._need_n()
        if t < 0:
            raise InvalidTime("negative time")
        if not self.use_cache:
            return walk_kernel(2.0 * n * n * t)
        with self._lock:
            k = self._kernels.get(t)
        if k is None:
            k = walk_kernel(2.0 * n * n * t)
            with self._lock:
                if len(self._kernels) > 4096:
                    self._kernels.clear()
                self._kernels[t] = k
        return k

    def _density_range(self, lo: int, hi: int, t: float) -> np.ndarray:
        n = self._need_n()
        if self.profile.is_constant:
            return np.full(hi - lo + 1, self.profile.bounds[0])
        key = (t, lo, hi)
        if self.use_cache:
            with self._lock:
                hit = self._memo.get(key)
            if hit is not None:
                return hit
        ker = self.kernel(t)
        K = ker.radius
        ys = np.arange(lo - K, hi + K + 1)
        vals = self.profile(ys / n)
        out = np.convolve(vals, ker.two_sided(), mode="valid") if K else vals.copy()
        out.setflags(write=False)
        if self.use_cache:
            with self._lock:
                if len(self._memo) > 65536:
                    self._memo.clear()
                self._memo[key] = out
        return out

    def discrete_density(self, x, t: float):
        """rho_t^n(x); ``x`` may be an integer or an integer array."""
        if t < 0:
            raise InvalidTime("negative time")
        xa = np.asarray(x, dtype=np.int64)
        if xa.size == 0:
            return np.zeros(0)
        lo, hi = int(xa.min()), int(xa.max())
        vals = self._density_range(lo, hi, t)[xa - lo]
        return float(vals) if xa.ndim == 0 else vals

    def discrete_density_error(self, t: float) -> float:
        """Bound on |computed - exact| from kernel truncation and rounding."""
        return self.kernel(t).discarded

    def discrete_density_time_integral(self, x, t: float):
        """(int_0^t rho_s^n(x) ds, error bound); vectorised over ``x``."""
        if t < 0:
            raise InvalidTime("negative time")
        xa = np.asarray(x, dtype=np.int64)
        if t == 0:
            z = np.zeros(xa.shape)
            return (float(z) if xa.ndim == 0 else z), 0.0
        if self.profile.is_constant:
            v = np.full(xa.shape, self.profile.bounds[0] * t)
            return (float(v) if xa.ndim == 0 else v), 0.0
        lo, hi = int(xa.min()), int(xa.max())
        idx = (xa - lo).ravel()

        def f(s):
            ker = walk_kernel(2.0 * self.n * self.n * s)
            K = ker.radius
            vals = self.profile(np.arange(lo - K, hi + K + 1) / self.n)
            dens = np.convolve(vals, ker.two_sided(), mode="valid") if K else vals
            return dens[idx]

        s = self.settings
        res, err = quad_vec(f, 0.0, t, epsabs=s.abs_tol, epsrel=0.0, norm="max", limit=s.max_depth * 50)
        bound = err + t * self.kernel(t).discarded
        res = res.reshape(xa.shape)
        if not err <= s.abs_tol:
            raise QuadratureFailure(
                f"time integral error {err:.3g} above abs_tol {s.abs_tol:.3g}", estimate=res, bound=bound
            )
        return (float(res) if xa.ndim == 0 else res), bound

    def expected_current(self, x: int, t: float) -> float:
        """E[J_{x,x+1}(t)] = sum_{y > x} (rho_t^n(y) - rho_0^n(y)), exact up to kernel truncation."""
        n = self._need_n()
        if t == 0 or self.profile.is_constant:
            return 0.0
        K = self.kernel(t).radius
        vlo, vhi = self.profile.variation_range
        lo = max(x + 1, int(math.floor(vlo * n)) - K - 1)
        hi = int(math.ceil(vhi * n)) + K + 1
        if hi < lo:
            return 0.0
        ys = np.arange(lo, hi + 1)
        diff = self._density_range(lo, hi, t) - self.profile(ys / n)
        return float(math.fsum(diff))

    # continuum side
    def continuum_density(self, t: float, u):
        if t < 0:
            raise InvalidTime("negative time")
        return self.profile.heat(t, u)

    def continuum_gradient(self, t: float, u):
        if t < 0:
            raise InvalidTime("negative time")
        return self.profile.heat_gradient(t, u)

    def compressibility(self, t: float, u):
        return compressibility(self.continuum_density(t, u))

    def source_term(self, t: float, u):
        """d_t X - Delta X for X = rho (1 - rho), which equals 2 (d_u rho)^2."""
        g = self.continuum_gradient(t, u)
        return 2.0 * g * g

    def continuum_density_adaptive(self, t: float, u: float, gradient: bool = False):
        """Reference route: adaptive quadrature of the kernel against rho0.

        Returns ``(value, error_bound)`` with the Gaussian tail beyond the cutoff
        added to the bound.
        """
        if t <= 0:
            return float(self.profile.derivative(u) if gradient else self.profile(u)), 0.0
        s = self.settings
        sig = math.sqrt(2.0 * t)
        lo, hi = u - s.cutoff * sig, u + s.cutoff * sig
        pts = [p for p in self.profile.breakpoints if lo < p < hi]
        if gradient:
            def f(v):
                return float(heat_kernel(t, u, v) * (v - u) / (2.0 * t) * self.profile(v))
            tail_scale = 1.0 / sig
        else:
            def f(v):
                return float(heat_kernel(t, u, v) * self.profile(v))
            tail_scale = 1.0
        val, err = quad(f, lo, hi, points=pts or None, epsabs=s.abs_tol, epsrel=s.rel_tol, limit=s.max_depth)
        tail = math.erfc(s.cutoff / math.sqrt(2.0)) * tail_scale * (1.0 + s.cutoff)
        return val, err + tail

    def density_table(self, times, us):
        """Rows (t, u, rho, drho_du) for CSV export."""
        rows = []
        for t in times:
            rho = np.atleast_1d(self.continuum_density(t, np.asarray(us, dtype=float)))
            drho = np.atleast_1d(self.continuum_gradient(t, np.asarray(us, dtype=float)))
            rows.extend((float(t), float(u), float(r), float(d)) for u, r, d in zip(us, rho, drho))
        return rows
