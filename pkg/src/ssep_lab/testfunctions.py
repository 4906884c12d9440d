"""Compactly supported, piecewise linear test functions (jumps allowed).

These cover the functions the fluctuation-field computations need: triangle
bumps, the clipped ramp approximating a Heaviside step, and scaled indicators.
Each piece is ``h0 + slope * (v - a)`` on ``[a, b)``, so the heat semigroup and
its spatial gradient have closed forms in terms of the normal cdf and pdf.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Mapping, Sequence

import numpy as np
from scipy.special import ndtr

from .errors import InvalidInput

_SQRT2PI = np.sqrt(2.0 * np.pi)


def _pdf(z):
    return np.exp(-0.5 * z * z) / _SQRT2PI


@dataclass(frozen=True)
class Piece:
    a: float
    b: float
    h0: float
    slope: float = 0.0


@dataclass(frozen=True)
class TestFunction:
    pieces: tuple[Piece, ...]
    name: str = "custom"

    __test__ = False  # keep pytest from collecting this class

    def __post_init__(self):
        for p in self.pieces:
            if not (np.isfinite(p.a) and np.isfinite(p.b) and p.a < p.b):
                raise InvalidInput(f"bad piece [{p.a}, {p.b})")

    @classmethod
    def zero(cls) -> "TestFunction":
        return cls((), "zero")

    @classmethod
    def triangle(cls, center: float, half_width: float, height: float = 1.0) -> "TestFunction":
        h = float(half_width)
        return cls(
            (Piece(center - h, center, 0.0, height / h), Piece(center, center + h, height, -height / h)),
            "triangle",
        )

    @classmethod
    def ramp(cls, u: float, K: float) -> "TestFunction":
        """G^K_u(v) = (1 - (v - u)/K)^+ for v >= u."""
        return cls((Piece(u, u + K, 1.0, -1.0 / K),), "ramp")

    @classmethod
    def indicator(cls, a: float, b: float, height: float = 1.0) -> "TestFunction":
        return cls((Piece(a, b, height, 0.0),), "indicator")

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "TestFunction":
        kind = d["kind"]
        if kind == "zero":
            return cls.zero()
        if kind == "triangle":
            return cls.triangle(d["center"], d["half_width"], d.get("height", 1.0))
        if kind == "ramp":
            return cls.ramp(d["u"], d["K"])
        if kind == "indicator":
            return cls.indicator(d["a"], d["b"], d.get("height", 1.0))
        if kind == "pieces":
            return cls(tuple(Piece(*map(float, p)) for p in d["pieces"]))
        raise InvalidInput(f"unknown test function kind {kind!r}")

    @property
    def support(self) -> tuple[float, float]:
        if not self.pieces:
            return 0.0, 0.0
        return min(p.a for p in self.pieces), max(p.b for p in self.pieces)

    @property
    def breakpoints(self) -> np.ndarray:
        return np.unique([x for p in self.pieces for x in (p.a, p.b)])

    def __call__(self, v):
        v = np.asarray(v, dtype=float)
        out = np.zeros_like(v)
        for p in self.pieces:
            inside = (v >= p.a) & (v < p.b)
            out = out + np.where(inside, p.h0 + p.slope * (v - p.a), 0.0)
        return out

    def semigroup(self, t: float, u):
        """(T_t H)(u) with the variance-2t heat kernel."""
        u = np.asarray(u, dtype=float)
        if t <= 0:
            return self(u)
        s = np.sqrt(2.0 * t)
        out = np.zeros_like(u)
        for p in self.pieces:
            A, B = (p.a - u) / s, (p.b - u) / s
            out = out + (p.h0 + p.slope * (u - p.a)) * (ndtr(B) - ndtr(A)) + p.slope * s * (_pdf(A) - _pdf(B))
        return out

    def semigroup_gradient(self, t: float, u):
        """d/du (T_t H)(u), for t > 0."""
        if t <= 0:
            raise InvalidInput("the gradient of a discontinuous test function needs t > 0")
        u = np.asarray(u, dtype=float)
        s = np.sqrt(2.0 * t)
        out = np.zeros_like(u)
        for p in self.pieces:
            A, B = (p.a - u) / s, (p.b - u) / s
            pa, pb = _pdf(A), _pdf(B)
            out = out + (
                p.slope * (ndtr(B) - ndtr(A))
                + (p.h0 + p.slope * (u - p.a)) * (pa - pb) / s
                + p.slope * (A * pa - B * pb)
            )
        return out

    def integral(self) -> float:
        return float(sum((p.b - p.a) * (p.h0 + 0.5 * p.slope * (p.b - p.a)) for p in self.pieces))

    def to_dict(self) -> dict:
        return {"kind": "pieces", "pieces": [[p.a, p.b, p.h0, p.slope] for p in self.pieces]}


def pieces_from_points(points: Sequence[Sequence[float]]) -> TestFunction:
    """Continuous piecewise linear function through ``points``, zero outside."""
    pts = np.asarray(points, dtype=float)
    pieces = tuple(
        Piece(x0, x1, y0, (y1 - y0) / (x1 - x0)) for (x0, y0), (x1, y1) in zip(pts[:-1], pts[1:])
    )
    return TestFunction(pieces, "points")
