"""Limiting Gaussian covariances of current, occupation time and density field.

Conventions shared by every evaluator:

* ``p_a(x)`` is the variance ``2a`` Gaussian density and ``Q_a(x) = P[B_a >= x]``
  with ``Var B_a = 2a``;
* ``X(rho) = rho (1 - rho)``, ``X_r(u) = X(rho(r, u))``, ``X_0 = X(rho_0)``;
* ``S_r(u) = 2 (d_u rho(r, u))^2`` is the source term;
* ``K(a; x) = int_0^a p_r(x) dr`` (closed form in :func:`heat_kernel_integral`).

Time integrals whose integrand has an inverse square root endpoint singularity
use the substitution ``r = r_max - w^2``.  Integrals of the kernel over a time
diagonal are done analytically through ``K``.  All remaining integrals are
nested adaptive Gauss-Kronrod quadratures; the reported error adds the outer
estimate, the worst inner estimate times the outer length, and a Gaussian tail
bound for the spatial cutoff.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np
from scipy.integrate import IntegrationWarning, quad
from scipy.special import erfc

from .errors import InvalidInput, InvalidTime, QuadratureFailure
from .meanfield import QuadratureSettings, heat_kernel_integral
from .profiles import Profile
from .testfunctions import TestFunction

KINDS = ("JJ", "GG", "GJ", "JL", "YY")
# nested quadrature cannot reach single-level tolerances; failure is declared
# only when the accumulated error exceeds this multiple of them
NESTED_SLACK = 100.0


@dataclass
class LimitValue:
    value: float
    error_estimate: float
    term_breakdown: dict[str, float]
    checks: dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {"value": self.value, "error_estimate": self.error_estimate,
               "term_breakdown": dict(self.term_breakdown)}
        if self.checks:
            out["checks"] = dict(self.checks)
        return out


@dataclass(frozen=True)
class LimitRequest:
    kind: str
    profile: Profile
    u1: float = 0.0
    u2: float = 0.0
    s: float = 1.0
    t: float = 1.0
    H: TestFunction | None = None
    G: TestFunction | None = None
    quadrature: QuadratureSettings = field(default_factory=QuadratureSettings)
    bm_variance_convention: str = "2t"

    def __post_init__(self):
        kind = self.kind.upper()
        object.__setattr__(self, "kind", kind)
        if kind not in KINDS:
            raise InvalidInput(f"unknown limit kind {self.kind!r}; expected one of {KINDS}")
        if self.s < 0 or self.t < 0 or not (math.isfinite(self.s) and math.isfinite(self.t)):
            raise InvalidTime("times must be finite and nonnegative")
        if self.bm_variance_convention != "2t":
            raise InvalidInput("only the variance-2t Brownian convention is supported")
        if kind == "YY" and (self.H is None or self.G is None):
            raise InvalidInput("YY needs test functions H and G")

    def params(self) -> dict[str, Any]:
        out: dict[str, Any] = {"profile": self.profile.to_dict(), "s": self.s, "t": self.t}
        if self.kind == "YY":
            out.update(H=self.H.to_dict(), G=self.G.to_dict())
        else:
            out.update(u1=self.u1, u2=self.u2)
        return out


# kernels
def _Q(a: float, x):
    """P[B_a >= x] for Var B_a = 2a."""
    x = np.asarray(x, dtype=float)
    if a <= 0:
        return (x <= 0).astype(float)
    return 0.5 * erfc(x / (2.0 * math.sqrt(a)))


def _p(a: float, x):
    x = np.asarray(x, dtype=float)
    return np.exp(-x * x / (4.0 * a)) / math.sqrt(4.0 * math.pi * a)


def _X(rho):
    return rho * (1.0 - rho)


def _quad(f, a, b, pts, st: QuadratureSettings):
    # convergence trouble shows up in the returned error, which the callers check
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IntegrationWarning)
        return quad(f, a, b, points=pts or None, epsabs=st.abs_tol, epsrel=st.rel_tol, limit=st.max_depth)


class _Integrator:
    """Adaptive quad with error bookkeeping for nested integrals."""

    def __init__(self, settings: QuadratureSettings):
        self.st = settings
        self.inner_err = 0.0

    def inner(self, f: Callable[[float], float], a: float, b: float, points=()) -> float:
        if b <= a:
            return 0.0
        pts = sorted({float(p) for p in points if a < p < b})
        val, err = _quad(f, a, b, pts, self.st)
        self.inner_err = max(self.inner_err, err)
        return val

    def outer(self, f: Callable[[float], float], a: float, b: float, points=()) -> tuple[float, float]:
        if b <= a:
            return 0.0, 0.0
        self.inner_err = 0.0
        pts = sorted({float(p) for p in points if a < p < b})
        val, err = _quad(f, a, b, pts, self.st)
        return val, err + self.inner_err * (b - a)

    def single(self, f, a, b, points=()) -> tuple[float, float]:
        if b <= a:
            return 0.0, 0.0
        pts = sorted({float(p) for p in points if a < p < b})
        return _quad(f, a, b, pts, self.st)


class _Fields:
    """Scalar access to rho, X and the source term for one profile."""

    def __init__(self, profile: Profile):
        self.profile = profile
        self.constant = profile.is_constant

    def X0(self, u: float) -> float:
        return float(_X(self.profile(u)))

    def Xr(self, r: float, u: float) -> float:
        return float(_X(self.profile.heat(r, u)))

    def S(self, r: float, u: float) -> float:
        g = float(self.profile.heat_gradient(r, u))
        return 2.0 * g * g

    def points(self, lo: float, hi: float) -> list[float]:
        return [float(p) for p in self.profile.breakpoints if lo < p < hi]


def _finish(kind: str, terms: dict[str, float], errors: Sequence[float], st: QuadratureSettings,
            tail: float) -> LimitValue:
    value = math.fsum(terms.values())
    err = math.fsum(errors) + tail
    scale = math.fsum(abs(v) for v in terms.values())
    target = NESTED_SLACK * max(st.abs_tol, st.rel_tol * scale)
    if err > target:
        raise QuadratureFailure(f"{kind}: error {err:.3g} above target {target:.3g}; terms {terms}", value, err)
    return LimitValue(value, err, terms)


def _tail(st: QuadratureSettings, horizon: float) -> float:
    # mass of the variance-2T Gaussian beyond the cutoff, weighted by the time span
    return 0.5 * math.erfc(st.cutoff / math.sqrt(2.0)) * max(1.0, horizon)


def _span(st: QuadratureSettings, horizon: float) -> float:
    return st.cutoff * math.sqrt(2.0 * max(horizon, 1e-300))


def _dynamic_current(fl: _Fields, ig: _Integrator, u1: float, u2: float, s: float, t: float) -> tuple[float, float]:
    """2 int_0^{s^t} dr int du p_{s-r}(u-u1) p_{t-r}(u-u2) X_r(u).

    The product of the two kernels is p_{a+b}(u1-u2) times a Gaussian density in u
    with mean (b u1 + a u2)/(a+b) and variance 2ab/(a+b); the inner integral runs
    over that Gaussian in standard units.
    """
    m0 = min(s, t)
    d = u1 - u2
    c = ig.st.cutoff
    zpdf = lambda z: math.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)

    def at_r(r: float) -> float:
        a, b = s - r, t - r
        if a + b <= 0:
            return 0.0
        amp = float(_p(a + b, d))
        if fl.constant:
            return amp * fl.X0(0.0)
        mean = (b * u1 + a * u2) / (a + b)
        sd = math.sqrt(2.0 * a * b / (a + b))
        if sd == 0.0:
            return amp * fl.Xr(r, mean)
        pts = [(p - mean) / sd for p in fl.points(mean - c * sd, mean + c * sd)]
        return amp * ig.inner(lambda z: zpdf(z) * fl.Xr(r, mean + sd * z), -c, c, pts)

    # r = m0 - w^2 removes the 1/sqrt(s + t - 2r) endpoint behaviour
    val, err = ig.outer(lambda w: 2.0 * w * at_r(m0 - w * w), 0.0, math.sqrt(m0))
    return 2.0 * val, 2.0 * err


# JJ
def cov_current_current(req: LimitRequest) -> LimitValue:
    """E[J_{u1}(s) J_{u2}(t)], three static terms plus the dynamic term."""
    st = req.quadrature
    u1, u2, s, t = req.u1, req.u2, req.s, req.t
    if u1 > u2:
        u1, u2, s, t = u2, u1, t, s
    if s == 0 or t == 0:
        return LimitValue(0.0, 0.0, {"static_left": 0.0, "static_middle": 0.0, "static_right": 0.0, "dynamic": 0.0})
    fl, ig = _Fields(req.profile), _Integrator(st)
    L = _span(st, max(s, t))
    errs = []

    v, e = ig.single(lambda u: float(_Q(s, u1 - u) * _Q(t, u2 - u)) * fl.X0(u), u1 - L, u1, fl.points(u1 - L, u1))
    left = v; errs.append(e)
    v, e = ig.single(lambda u: float(_Q(s, u - u1) * _Q(t, u2 - u)) * fl.X0(u), u1, u2, fl.points(u1, u2))
    middle = -v; errs.append(e)
    v, e = ig.single(lambda u: float(_Q(s, u - u1) * _Q(t, u - u2)) * fl.X0(u), u2, u2 + L, fl.points(u2, u2 + L))
    right = v; errs.append(e)
    dyn, e = _dynamic_current(fl, ig, u1, u2, s, t)
    errs.append(e)
    terms = {"static_left": left, "static_middle": middle, "static_right": right, "dynamic": dyn}
    return _finish("JJ", terms, errs, st, _tail(st, max(s, t)))


# JL
def cov_current_jaralandim(profile: Profile, u: float, s: float, t: float,
                           settings: QuadratureSettings | None = None) -> LimitValue:
    """Single-point current covariance in coordinates shifted to the bond.

    Evaluated directly in the shifted variable ``v`` (independently of the
    Gaussian-product reduction used by :func:`cov_current_current`); profile
    arguments are ``v + u`` so that the result is the covariance at ``u``.
    """
    st = settings or QuadratureSettings()
    if s < 0 or t < 0:
        raise InvalidTime("times must be nonnegative")
    if s > t:
        s, t = t, s
    if s == 0:
        return LimitValue(0.0, 0.0, {"right": 0.0, "left": 0.0, "dynamic": 0.0})
    fl, ig = _Fields(profile), _Integrator(st)
    L = _span(st, t)
    shifted = [p - u for p in profile.breakpoints]
    errs = []
    right, e = ig.single(lambda v: fl.X0(v + u) * float(_Q(s, v) * _Q(t, v)), 0.0, L, shifted)
    errs.append(e)
    left, e = ig.single(lambda v: fl.X0(v + u) * float(_Q(s, -v) * _Q(t, -v)), -L, 0.0, shifted)
    errs.append(e)

    def at_r(r: float) -> float:
        a, b = s - r, t - r
        if a <= 0:
            return 0.0
        wa = math.sqrt(2.0 * a)
        reach = min(L, st.cutoff * wa)
        pts = shifted + [0.0] + [k * wa for k in (-3.0, -1.0, 1.0, 3.0)]
        f = lambda v: fl.Xr(r, v + u) * float(_p(b, v) * _p(a, v))
        return ig.inner(f, -reach, reach, pts)

    dyn, e = ig.outer(lambda w: 2.0 * w * at_r(s - w * w), 0.0, math.sqrt(s))
    errs.append(2.0 * e)
    terms = {"right": right, "left": left, "dynamic": 2.0 * dyn}
    return _finish("JL", terms, errs, st, _tail(st, t))


# GG
def cov_occupation_occupation(req: LimitRequest) -> LimitValue:
    """E[Gamma_{u1}(s) Gamma_{u2}(t)].

    The kernel term integrates the density-field two-time covariance over both
    time variables; the compressibility is taken at the earlier of the two times
    and at that time's point, and the inner time integral is done through K.
    The source term enters with a minus sign (negative static correlations).
    """
    st = req.quadrature
    u1, u2, s, t = req.u1, req.u2, req.s, req.t
    if s == 0 or t == 0:
        return LimitValue(0.0, 0.0, {"kernel": 0.0, "source": 0.0})
    fl, ig = _Fields(req.profile), _Integrator(st)
    m0 = min(s, t)
    d = u1 - u2
    errs = []
    k1, e = ig.single(lambda r: fl.Xr(r, u1) * float(heat_kernel_integral(t - r, d)), 0.0, m0)
    errs.append(e)
    k2, e = ig.single(lambda r: fl.Xr(r, u2) * float(heat_kernel_integral(s - r, d)), 0.0, m0)
    errs.append(e)
    source = 0.0
    if not fl.constant:
        L = _span(st, max(s, t))
        lo, hi = min(u1, u2) - L, max(u1, u2) + L
        pts = fl.points(lo, hi) + [u1, u2]

        def at_tau(tau: float) -> float:
            f = lambda w: fl.S(tau, w) * float(heat_kernel_integral(s - tau, u1 - w) * heat_kernel_integral(t - tau, u2 - w))
            return ig.inner(f, lo, hi, pts)

        v, e = ig.outer(at_tau, 0.0, m0)
        source = -v
        errs.append(e)
    terms = {"kernel": k1 + k2, "source": source}
    return _finish("GG", terms, errs, st, _tail(st, max(s, t)))


# GJ
def cov_occupation_current(req: LimitRequest) -> LimitValue:
    """E[Gamma_{u1}(s) J_{u2}(t)].

    With the current at ``a = u2`` up to ``tc = t`` and the occupation time at
    ``b = u1`` up to ``to = s``, the four terms are

    * ``1{to > tc} int_a^inf X_tc(u) K(to - tc; u - b) du``,
    * ``int_0^{to ^ tc} Q_{tc - r}(a - b) X_r(b) dr``,
    * ``- int_0^{to ^ tc} dtau int dv S_tau(v) Q_{tc - tau}(a - v) K(to - tau; v - b)``,
    * ``- int_a^inf X_0(u) K(to; u - b) du``.
    """
    st = req.quadrature
    b, to, a, tc = req.u1, req.s, req.u2, req.t
    names = ("late_kernel", "early_kernel", "source", "initial")
    if to == 0 or tc == 0:
        return LimitValue(0.0, 0.0, dict.fromkeys(names, 0.0))
    fl, ig = _Fields(req.profile), _Integrator(st)
    T = max(to, tc)
    L = _span(st, T)
    m0 = min(to, tc)
    errs = []
    late = 0.0
    if to > tc:
        lo = max(a, b - L)
        late, e = ig.single(lambda u: fl.Xr(tc, u) * float(heat_kernel_integral(to - tc, u - b)),
                            lo, max(lo, b + L), fl.points(lo, b + L) + [b])
        errs.append(e)
    early, e = ig.single(lambda r: float(_Q(tc - r, a - b)) * fl.Xr(r, b), 0.0, m0)
    errs.append(e)
    source = 0.0
    if not fl.constant:
        lo, hi = min(a, b) - L, max(a, b) + L
        pts = fl.points(lo, hi) + [a, b]

        def at_tau(tau: float) -> float:
            f = lambda v: fl.S(tau, v) * float(_Q(tc - tau, a - v) * heat_kernel_integral(to - tau, v - b))
            return ig.inner(f, lo, hi, pts)

        v, e = ig.outer(at_tau, 0.0, m0)
        source = -v
        errs.append(e)
    lo = max(a, b - L)
    init, e = ig.single(lambda u: fl.X0(u) * float(heat_kernel_integral(to, u - b)),
                        lo, max(lo, b + L), fl.points(lo, b + L) + [b])
    errs.append(e)
    terms = dict(zip(names, (late, early, source, -init)))
    return _finish("GJ", terms, errs, st, _tail(st, T))


# YY
def _support_range(H: TestFunction, G: TestFunction, L: float) -> tuple[float, float]:
    lo = min(H.support[0], G.support[0]) - L
    hi = max(H.support[1], G.support[1]) + L
    return lo, hi


def cov_density_field(H: TestFunction, G: TestFunction, s: float, t: float, profile: Profile,
                      settings: QuadratureSettings | None = None) -> LimitValue:
    """E[Y_s(H) Y_t(G)] for s <= t, by two routes.

    Form A: ``int H (T_{t-s} G) X_s - int_0^s dtau int S_tau (T_{s-tau} H)(T_{t-tau} G)``.
    Form B: ``int (T_s H)(T_t G) X_0 + 2 int_0^s dr int (grad T_{s-r} H)(grad T_{t-r} G) X_r``.

    The returned value and breakdown are form A; ``checks`` carries form B, its
    error and the difference between the two.
    """
    st = settings or QuadratureSettings()
    if s < 0 or t < 0:
        raise InvalidTime("times must be nonnegative")
    if s > t:
        raise InvalidTime("cov_density_field needs s <= t")
    if not H.pieces or not G.pieces:
        zero = LimitValue(0.0, 0.0, {"static": 0.0, "source": 0.0})
        zero.checks = {"form_b": 0.0, "form_b_error": 0.0, "difference": 0.0}
        return zero
    fl, ig = _Fields(profile), _Integrator(st)
    L = _span(st, t) if t > 0 else 0.0
    lo, hi = _support_range(H, G, L)
    pts = fl.points(lo, hi) + list(H.breakpoints) + list(G.breakpoints)

    # form A
    errs_a = []
    hlo, hhi = H.support
    static_a, e = ig.single(lambda u: float(H(u) * G.semigroup(t - s, u)) * fl.Xr(s, u), hlo, hhi,
                            list(H.breakpoints) + (list(G.breakpoints) if t == s else []) + fl.points(hlo, hhi))
    errs_a.append(e)
    source_a = 0.0
    if not fl.constant and s > 0:
        def at_tau(tau: float) -> float:
            f = lambda u: fl.S(tau, u) * float(H.semigroup(s - tau, u) * G.semigroup(t - tau, u))
            return ig.inner(f, lo, hi, pts)

        v, e = ig.outer(at_tau, 0.0, s)
        source_a = -v
        errs_a.append(e)
    val_a = _finish("YY", {"static": static_a, "source": source_a}, errs_a, st, _tail(st, t))

    # form B
    errs_b = []
    static_b, e = ig.single(lambda u: float(H.semigroup(s, u) * G.semigroup(t, u)) * fl.X0(u), lo, hi, pts)
    errs_b.append(e)
    dyn_b = 0.0
    if s > 0:
        def at_r(r: float) -> float:
            a, b = s - r, t - r
            if a <= 0:
                return 0.0
            near = [p + k * math.sqrt(2.0 * a) for p in H.breakpoints for k in (-6.0, -2.0, 2.0, 6.0)]
            near += [p + k * math.sqrt(2.0 * b) for p in G.breakpoints for k in (-6.0, -2.0, 2.0, 6.0)]
            f = lambda u: float(H.semigroup_gradient(a, u) * G.semigroup_gradient(b, u)) * fl.Xr(r, u)
            return ig.inner(f, lo, hi, pts + near)

        v, e = ig.outer(lambda w: 2.0 * w * at_r(s - w * w), 0.0, math.sqrt(s))
        dyn_b = 2.0 * v
        errs_b.append(2.0 * e)
    val_b = _finish("YY", {"static": static_b, "dynamic": dyn_b}, errs_b, st, _tail(st, t))

    val_a.checks = {
        "form_b": val_b.value,
        "form_b_error": val_b.error_estimate,
        "difference": val_a.value - val_b.value,
    }
    return val_a


def evaluate(req: LimitRequest) -> LimitValue:
    if req.kind == "JJ":
        return cov_current_current(req)
    if req.kind == "GG":
        return cov_occupation_occupation(req)
    if req.kind == "GJ":
        return cov_occupation_current(req)
    if req.kind == "JL":
        if req.u1 != req.u2:
            raise InvalidInput("JL is a single-point covariance; set u1 = u2")
        return cov_current_jaralandim(req.profile, req.u1, req.s, req.t, req.quadrature)
    s, t, H, G = req.s, req.t, req.H, req.G
    if s > t:
        s, t, H, G = t, s, G, H
    return cov_density_field(H, G, s, t, req.profile, req.quadrature)


def covariance_surface(kind: str, profile: Profile, u1: float, u2: float, times: Sequence[float],
                       settings: QuadratureSettings | None = None) -> list[tuple[float, float, float, float]]:
    """Rows (s, t, value, error) over a square time grid."""
    st = settings or QuadratureSettings()
    rows = []
    for s in times:
        for t in times:
            v = evaluate(LimitRequest(kind, profile, u1, u2, float(s), float(t), quadrature=st))
            rows.append((float(s), float(t), v.value, v.error_estimate))
    return rows


def equilibrium_variance(kind: str, rho: float, t: float) -> float:
    """Closed-form equilibrium variances used as independent checks.

    Current: ``2 X sqrt(t/pi)``; occupation time: ``X (4/3) t^{3/2} / sqrt(pi)``.
    """
    X = rho * (1.0 - rho)
    if kind.upper() == "JJ":
        return 2.0 * X * math.sqrt(t / math.pi)
    if kind.upper() == "GG":
        return X * 4.0 / 3.0 * t ** 1.5 / math.sqrt(math.pi)
    raise InvalidInput(f"no closed form for {kind}")
