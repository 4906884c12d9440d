"""Macroscopic initial density profiles.

A profile knows how to evaluate itself, its derivative and its image under the
heat semigroup (variance ``2t`` Gaussian smoothing).  Constant and piecewise
linear kinds have closed forms; the tanh ramp is smoothed with fixed Gauss rules
whose accuracy is checked against adaptive quadrature in the test-suite.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Mapping, Sequence

import numpy as np
from numpy.polynomial.hermite_e import hermegauss
from scipy.special import ndtr

from .errors import InvalidProfile

KINDS = ("constant", "tanh-ramp", "piecewise-linear", "custom-table")

_SQRT2PI = np.sqrt(2.0 * np.pi)
_GH_X, _GH_W = hermegauss(64)
_GH_W = _GH_W / _SQRT2PI
_GL_X, _GL_W = np.polynomial.legendre.leggauss(10)

# the tanh ramp is flat to double precision beyond this many widths
TANH_REACH = 20.0


def compressibility(rho):
    """The factor rho (1 - rho)."""
    return rho * (1.0 - rho)


def _sech2(z):
    e = np.exp(-2.0 * np.abs(z))
    return 4.0 * e / (1.0 + e) ** 2


def _normal_pdf(z):
    return np.exp(-0.5 * z * z) / _SQRT2PI


@dataclass(frozen=True)
class Profile:
    kind: str
    params: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        kind = self.kind.replace("_", "-")
        if kind not in KINDS:
            raise InvalidProfile(f"unknown profile kind {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "params", dict(self.params))
        try:
            self._validate()
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, InvalidProfile):
                raise
            raise InvalidProfile(f"bad parameters for {kind}: {exc}") from exc

    # constructors
    @classmethod
    def constant(cls, c: float) -> "Profile":
        return cls("constant", {"c": float(c)})

    @classmethod
    def tanh_ramp(cls, a: float, b: float, center: float = 0.0, width: float = 1.0) -> "Profile":
        return cls("tanh-ramp", {"a": float(a), "b": float(b), "center": float(center), "width": float(width)})

    @classmethod
    def piecewise_linear(cls, knots: Sequence[Sequence[float]]) -> "Profile":
        return cls("piecewise-linear", {"knots": [[float(u), float(r)] for u, r in knots]})

    @classmethod
    def custom_table(cls, grid: Sequence[float], values: Sequence[float]) -> "Profile":
        return cls("custom-table", {"grid": [float(g) for g in grid], "values": [float(v) for v in values]})

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "Profile":
        return cls(d["kind"], d.get("params", {}))

    def to_dict(self) -> dict:
        return {"kind": self.kind, "params": dict(self.params)}

    def __hash__(self):
        return hash(repr(self.to_dict()))

    # validation
    def _validate(self):
        p = self.params
        if self.kind == "constant":
            float(p["c"])
        elif self.kind == "tanh-ramp":
            if not float(p["width"]) > 0:
                raise InvalidProfile("tanh-ramp width must be positive")
        else:
            xs, ys = self._table
            if len(xs) < 1:
                raise InvalidProfile("empty table")
            if np.any(np.diff(xs) <= 0):
                raise InvalidProfile("table abscissae must be strictly increasing")
            if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(ys))):
                raise InvalidProfile("non-finite table entry")
        lo, hi = self.bounds
        if not (0.0 < lo <= hi < 1.0):
            raise InvalidProfile(f"profile range [{lo}, {hi}] is not inside the open interval (0, 1)")

    @cached_property
    def _table(self):
        p = self.params
        if self.kind == "piecewise-linear":
            arr = np.asarray(p["knots"], dtype=float).reshape(-1, 2)
            return arr[:, 0].copy(), arr[:, 1].copy()
        xs = np.asarray(p["grid"], dtype=float)
        ys = np.asarray(p["values"], dtype=float)
        if xs.shape != ys.shape:
            raise InvalidProfile("grid and values differ in length")
        return xs, ys

    @cached_property
    def _hinges(self):
        # rho0(u) = base + sum_j c_j (u - k_j)^+
        xs, ys = self._table
        slopes = np.concatenate([[0.0], np.diff(ys) / np.diff(xs), [0.0]])
        return ys[0], xs, np.diff(slopes)

    @property
    def bounds(self) -> tuple[float, float]:
        p = self.params
        if self.kind == "constant":
            return float(p["c"]), float(p["c"])
        if self.kind == "tanh-ramp":
            a, b = float(p["a"]), float(p["b"])
            return min(a, b), max(a, b)
        ys = self._table[1]
        return float(ys.min()), float(ys.max())

    @property
    def is_constant(self) -> bool:
        lo, hi = self.bounds
        return lo == hi

    @property
    def variation_range(self) -> tuple[float, float]:
        """Macroscopic interval outside which the profile is flat."""
        if self.kind == "constant":
            return 0.0, 0.0
        if self.kind == "tanh-ramp":
            c, w = float(self.params["center"]), float(self.params["width"])
            return c - TANH_REACH * w, c + TANH_REACH * w
        xs = self._table[0]
        return float(xs[0]), float(xs[-1])

    @property
    def breakpoints(self) -> np.ndarray:
        """Points where the profile is not smooth."""
        if self.kind in ("constant", "tanh-ramp"):
            return np.empty(0)
        return self._table[0]

    @property
    def length_scale(self) -> float:
        if self.kind == "tanh-ramp":
            return float(self.params["width"])
        if self.kind == "constant":
            return np.inf
        xs = self._table[0]
        return float(np.diff(xs).min()) if xs.size > 1 else np.inf

    # evaluation
    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        p = self.params
        if self.kind == "constant":
            return np.full_like(u, float(p["c"]))
        if self.kind == "tanh-ramp":
            a, b, c, w = (float(p[k]) for k in ("a", "b", "center", "width"))
            return a + 0.5 * (b - a) * (1.0 + np.tanh((u - c) / w))
        xs, ys = self._table
        return np.interp(u, xs, ys)

    def derivative(self, u):
        """Derivative; one-sided (right) at kinks of piecewise kinds."""
        u = np.asarray(u, dtype=float)
        p = self.params
        if self.kind == "constant":
            return np.zeros_like(u)
        if self.kind == "tanh-ramp":
            a, b, c, w = (float(p[k]) for k in ("a", "b", "center", "width"))
            return 0.5 * (b - a) / w * _sech2((u - c) / w)
        base, knots, jumps = self._hinges
        return np.sum(jumps * (u[..., None] >= knots), axis=-1)

    # heat semigroup
    def heat(self, t: float, u):
        """(T_t rho0)(u) with a variance-2t Gaussian."""
        u = np.asarray(u, dtype=float)
        if t <= 0 or self.kind == "constant":
            return self(u)
        sigma = np.sqrt(2.0 * t)
        if self.kind == "tanh-ramp":
            return self._tanh_heat(sigma, u, grad=False)
        base, knots, jumps = self._hinges
        d = (u[..., None] - knots) / sigma
        return base + np.sum(jumps * (sigma * d * ndtr(d) + sigma * _normal_pdf(d)), axis=-1)

    def heat_gradient(self, t: float, u):
        """d/du of (T_t rho0)(u)."""
        u = np.asarray(u, dtype=float)
        if t <= 0 or self.kind == "constant":
            return self.derivative(u)
        sigma = np.sqrt(2.0 * t)
        if self.kind == "tanh-ramp":
            return self._tanh_heat(sigma, u, grad=True)
        base, knots, jumps = self._hinges
        d = (u[..., None] - knots) / sigma
        return np.sum(jumps * ndtr(d), axis=-1)

    def heat_curvature(self, t: float, u):
        """d^2/du^2 of (T_t rho0)(u), for t > 0."""
        u = np.asarray(u, dtype=float)
        if self.kind == "constant":
            return np.zeros_like(u)
        sigma = np.sqrt(2.0 * t)
        if self.kind == "tanh-ramp":
            a, b, c, w = (float(self.params[k]) for k in ("a", "b", "center", "width"))
            v, wts = self._tanh_nodes
            z = (u[..., None] - v) / sigma
            return np.sum(wts * (-z) * _normal_pdf(z), axis=-1) / sigma**2
        base, knots, jumps = self._hinges
        d = (u[..., None] - knots) / sigma
        return np.sum(jumps * _normal_pdf(d), axis=-1) / sigma

    @cached_property
    def _tanh_nodes(self):
        # composite Gauss-Legendre discretisation of the measure rho0'(v) dv
        c, w = float(self.params["center"]), float(self.params["width"])
        edges = np.linspace(c - TANH_REACH * w, c + TANH_REACH * w, int(8 * TANH_REACH) + 1)
        mid = 0.5 * (edges[1:] + edges[:-1])[:, None]
        half = 0.5 * (edges[1] - edges[0])
        v = (mid + half * _GL_X).ravel()
        wts = (half * np.broadcast_to(_GL_W, (mid.shape[0], _GL_X.size))).ravel()
        return v, wts * self.derivative(v)

    def _tanh_heat(self, sigma: float, u: np.ndarray, grad: bool):
        w = float(self.params["width"])
        if sigma < 0.5 * w:
            pts = u[..., None] + sigma * _GH_X
            f = self.derivative(pts) if grad else self(pts)
            return np.sum(f * _GH_W, axis=-1)
        v, wts = self._tanh_nodes
        z = (u[..., None] - v) / sigma
        if grad:
            return np.sum(wts * _normal_pdf(z), axis=-1) / sigma
        a = float(self.params["a"])
        return a + np.sum(wts * ndtr(z), axis=-1)
