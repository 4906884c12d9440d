"""Covariance reports with replica-level standard errors."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import InvalidInput
from .accumulators import MomentAccumulator

Column = tuple[str, float]


@dataclass
class CovarianceEntry:
    obs_i: str
    obs_j: str
    s: float
    t: float
    cov: float
    se: float
    R: int


def product_se(x: np.ndarray, y: np.ndarray) -> float:
    """Sample std of (x - mean x)(y - mean y) over replicas, divided by sqrt(R)."""
    R = x.size
    if R < 2:
        return float("nan")
    z = (x - x.mean()) * (y - y.mean())
    return float(z.std(ddof=1) / np.sqrt(R))


class CovarianceReport:
    """All pairwise covariances between the (observable, time) columns of an ensemble."""

    def __init__(self, columns: Sequence[Column], data: np.ndarray):
        data = np.asarray(data, dtype=float)
        if data.ndim != 2 or data.shape[1] != len(columns):
            raise InvalidInput("data must be replicas x columns")
        self.columns = [(str(a), float(b)) for a, b in columns]
        self.data = data
        self.R = data.shape[0]
        self.moments = MomentAccumulator.from_rows(data)
        self._index = {c: i for i, c in enumerate(self.columns)}

    def _col(self, obs: str, t: float) -> int:
        key = (obs, float(t))
        if key not in self._index:
            raise KeyError(f"no column {key}")
        return self._index[key]

    def mean(self, obs: str, t: float) -> float:
        return float(self.moments.mean[self._col(obs, t)])

    def mean_se(self, obs: str, t: float) -> float:
        x = self.data[:, self._col(obs, t)]
        return float(x.std(ddof=1) / np.sqrt(self.R)) if self.R > 1 else float("nan")

    def covariance(self, obs_i: str, s: float, obs_j: str, t: float) -> tuple[float, float]:
        i, j = self._col(obs_i, s), self._col(obs_j, t)
        cov = float(self.moments.covariance()[i, j])
        return cov, product_se(self.data[:, i], self.data[:, j])

    def variance_table(self, obs: str) -> list[tuple[float, float, float]]:
        return [(t, *self.covariance(obs, t, obs, t)) for o, t in self.columns if o == obs]

    def entries(self) -> list[CovarianceEntry]:
        out = []
        C = self.moments.covariance()
        for i, (oi, s) in enumerate(self.columns):
            for j in range(i, len(self.columns)):
                oj, t = self.columns[j]
                out.append(CovarianceEntry(oi, oj, s, t, float(C[i, j]),
                                           product_se(self.data[:, i], self.data[:, j]), self.R))
        return out

    def rows(self) -> list[tuple]:
        return [(e.obs_i, e.obs_j, e.s, e.t, e.cov, e.se, e.R) for e in self.entries()]

    HEADER = ("obs_i", "obs_j", "s", "t", "cov", "se", "R")
