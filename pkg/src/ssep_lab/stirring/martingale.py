"""Current martingale read off a trajectory sample."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InsufficientObservables
from .simulate import TrajectorySample


@dataclass
class MartingaleSeries:
    """``M = J - n^2 (int eta(x) - int eta(x+1))`` and its predictable bracket.

    ``bracket`` is ``n^2 int (eta(x) + eta(x+1) - 2 eta(x) eta(x+1))``, the rate
    at which particles cross the bond integrated in time.
    """

    times: np.ndarray
    values: np.ndarray
    bracket: np.ndarray


def martingale_decomposition(sample: TrajectorySample, x: int) -> MartingaleSeries:
    need = [f"current:{x}", f"occupation:{x}", f"occupation:{x + 1}"]
    missing = [k for k in need if k not in sample.raw]
    if missing or x not in sample.pair_integrals:
        raise InsufficientObservables(
            f"martingale at bond {x} needs {', '.join(need)} recorded at common times; missing {missing or ['pair product']}"
        )
    t = sample.times[need[0]]
    if not all(np.array_equal(sample.times[k], t) for k in need[1:]):
        raise InsufficientObservables("current and occupation observables use different output times")
    n2 = float(sample.n) ** 2
    ix, ix1 = sample.raw[need[1]], sample.raw[need[2]]
    rows = np.searchsorted(sample.global_times, t)
    pair = sample.pair_integrals[x][rows]
    m = sample.raw[need[0]] - n2 * (ix - ix1)
    qv = n2 * (ix + ix1 - 2.0 * pair)
    return MartingaleSeries(np.asarray(t), np.asarray(m, dtype=float), np.asarray(qv, dtype=float))
