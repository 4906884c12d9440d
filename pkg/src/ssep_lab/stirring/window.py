"""Finite lattice windows and initial configurations."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from ..errors import InvalidInput, InvalidProfile, WindowTooSmall
from ..profiles import Profile
from ..seeding import bit_generator

MARGIN_SIGMAS = 6.0


@dataclass(frozen=True)
class LatticeWindow:
    """Sites ``x_lo..x_hi`` with a closed boundary.

    ``enforce_margin=False`` turns the window into a genuinely finite system
    (used to compare with exact small-system computations); the margin rule is
    then not applied.
    """

    n: int
    x_lo: int
    x_hi: int
    margin_factor: float = 1.0
    enforce_margin: bool = True

    def __post_init__(self):
        if self.n < 1:
            raise InvalidInput("n must be a positive integer")
        if not self.x_lo < self.x_hi:
            raise InvalidInput("window needs x_lo < x_hi")
        if self.margin_factor < 1:
            raise InvalidInput("margin_factor must be at least 1")

    @property
    def nsites(self) -> int:
        return self.x_hi - self.x_lo + 1

    @property
    def nedges(self) -> int:
        return self.x_hi - self.x_lo

    @property
    def sites(self) -> np.ndarray:
        return np.arange(self.x_lo, self.x_hi + 1)

    def index(self, x) -> np.ndarray | int:
        return np.asarray(x) - self.x_lo if np.ndim(x) else int(x) - self.x_lo

    def required_margin(self, horizon: float) -> float:
        return self.margin_factor * MARGIN_SIGMAS * self.n * math.sqrt(2.0 * horizon)

    def check_sites(self, sites: Iterable[int], horizon: float) -> None:
        sites = [int(s) for s in sites]
        if not sites:
            return
        lo, hi = min(sites), max(sites)
        if not (self.x_lo <= lo and hi <= self.x_hi):
            raise WindowTooSmall(f"observed sites [{lo}, {hi}] outside [{self.x_lo}, {self.x_hi}]")
        # a finite system may be observed up to its walls; a lattice window may not
        if self.enforce_margin and not (self.x_lo < lo and hi < self.x_hi):
            raise WindowTooSmall(f"observed sites [{lo}, {hi}] not strictly inside [{self.x_lo}, {self.x_hi}]")
        if self.enforce_margin:
            need = self.required_margin(horizon)
            have = min(lo - self.x_lo, self.x_hi - hi)
            if have < need:
                raise WindowTooSmall(
                    f"margin {have} sites < required {need:.1f} (= {self.margin_factor} * 6 n sqrt(2T))"
                )

    @classmethod
    def around(cls, n: int, sites: Iterable[int], horizon: float, margin_factor: float = 1.0) -> "LatticeWindow":
        """Smallest window satisfying the margin rule for ``sites``."""
        sites = [int(s) for s in sites]
        pad = int(math.ceil(margin_factor * MARGIN_SIGMAS * n * math.sqrt(2.0 * horizon))) + 1
        return cls(n, min(sites) - pad, max(sites) + pad, margin_factor)

    def doubled(self) -> "LatticeWindow":
        """Same centre, margins doubled (for the truncation self-check)."""
        half = self.nsites
        return LatticeWindow(self.n, self.x_lo - half // 2 - 1, self.x_hi + half // 2 + 1,
                             self.margin_factor, self.enforce_margin)

    def to_dict(self) -> dict:
        return {"n": self.n, "x_lo": self.x_lo, "x_hi": self.x_hi,
                "margin_factor": self.margin_factor, "enforce_margin": self.enforce_margin}


@dataclass
class Configuration:
    occupancy: np.ndarray
    window: LatticeWindow
    time: float = 0.0
    profile: Profile | None = None

    def __post_init__(self):
        self.occupancy = np.ascontiguousarray(self.occupancy, dtype=np.uint8)
        if self.occupancy.shape != (self.window.nsites,):
            raise InvalidInput("occupancy length does not match the window")
        if np.any(self.occupancy > 1):
            raise InvalidInput("occupancy values must be 0 or 1")

    @property
    def particles(self) -> int:
        return int(self.occupancy.sum())

    def copy(self) -> "Configuration":
        return Configuration(self.occupancy.copy(), self.window, self.time, self.profile)


def site_probabilities(profile: Profile, window: LatticeWindow) -> np.ndarray:
    p = profile(window.sites / window.n)
    if not (np.all(p > 0) and np.all(p < 1)):
        raise InvalidProfile("profile leaves (0, 1) on the window")
    return p


def sample_initial_configuration(profile: Profile, window: LatticeWindow, seed) -> Configuration:
    """Independent Bernoulli(rho0(x/n)) occupations on the window."""
    p = site_probabilities(profile, window)
    gen = np.random.Generator(bit_generator(seed)) if isinstance(seed, (int, np.integer)) else seed
    occ = (gen.random(p.size) < p).astype(np.uint8)
    return Configuration(occ, window, 0.0, profile)
