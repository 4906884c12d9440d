"""Uniformisation: e^{tQ} v as a Poisson mixture of powers of P = I + Q / lam."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.stats import poisson

DEFAULT_TOL = 1e-12


@dataclass
class PoissonWindow:
    left: int
    weights: np.ndarray
    dropped: float

    @property
    def right(self) -> int:
        return self.left + self.weights.size - 1


def poisson_window(mean: float, tol: float = DEFAULT_TOL) -> PoissonWindow:
    """Poisson(mean) weights on [left, right] with tail mass below ``tol``."""
    if mean <= 0:
        return PoissonWindow(0, np.ones(1), 0.0)
    left = int(poisson.ppf(0.5 * tol, mean))
    right = int(poisson.isf(0.5 * tol, mean)) + 1
    left = max(left - 1, 0)
    w = poisson.pmf(np.arange(left, right + 1), mean)
    return PoissonWindow(left, w, max(0.0, 1.0 - float(np.sum(w))))


@dataclass
class UniformizationResult:
    vector: np.ndarray
    dropped_mass: float
    steps: int


def uniformize(step: Callable[[np.ndarray], np.ndarray], v: np.ndarray, lam_t: float,
               tol: float = DEFAULT_TOL) -> UniformizationResult:
    """Return ``sum_k Pois(lam_t; k) P^k v`` where ``step`` applies ``P``."""
    win = poisson_window(lam_t, tol)
    cur = np.array(v, dtype=float, copy=True)
    out = np.zeros_like(cur)
    for k in range(win.right + 1):
        if k >= win.left:
            out += win.weights[k - win.left] * cur
        if k < win.right:
            cur = step(cur)
    return UniformizationResult(out, win.dropped, win.right)
