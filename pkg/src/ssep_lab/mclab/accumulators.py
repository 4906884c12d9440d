"""Mergeable streaming moments (Chan et al. pairwise update)."""
from __future__ import annotations

import numpy as np

from ..errors import InvalidInput


class MomentAccumulator:
    """Count, mean vector and centred co-moment matrix of p-dimensional rows.

    ``merge`` combines two accumulators with the pairwise formula, so any
    merge tree over the same rows gives the same moments up to rounding.
    """

    def __init__(self, dim: int):
        self.dim = int(dim)
        self.count = 0
        self.mean = np.zeros(self.dim)
        self.m2 = np.zeros((self.dim, self.dim))

    @classmethod
    def from_rows(cls, rows: np.ndarray) -> "MomentAccumulator":
        rows = np.atleast_2d(np.asarray(rows, dtype=float))
        acc = cls(rows.shape[1])
        if rows.shape[0]:
            acc.count = rows.shape[0]
            acc.mean = rows.mean(axis=0)
            d = rows - acc.mean
            acc.m2 = d.T @ d
        return acc

    def update(self, rows: np.ndarray) -> "MomentAccumulator":
        return self.merge(MomentAccumulator.from_rows(rows))

    def merge(self, other: "MomentAccumulator") -> "MomentAccumulator":
        if other.dim != self.dim:
            raise InvalidInput("dimension mismatch in merge")
        if other.count == 0:
            return self
        if self.count == 0:
            self.count, self.mean, self.m2 = other.count, other.mean.copy(), other.m2.copy()
            return self
        n = self.count + other.count
        delta = other.mean - self.mean
        self.m2 = self.m2 + other.m2 + np.outer(delta, delta) * (self.count * other.count / n)
        self.mean = self.mean + delta * (other.count / n)
        self.count = n
        return self

    def covariance(self, ddof: int = 1) -> np.ndarray:
        if self.count <= ddof:
            return np.full((self.dim, self.dim), np.nan)
        return self.m2 / (self.count - ddof)
