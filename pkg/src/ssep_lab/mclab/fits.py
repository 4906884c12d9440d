"""Scaling fits and bound checks."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import stats

from ..errors import InvalidInput

TREND_ALPHA = 0.01


@dataclass
class SlopeFit:
    slope: float
    se: float
    intercept: float
    ci: tuple[float, float]
    points: int


def loglog_fit(x: Sequence[float], y: Sequence[float], level: float = 0.95) -> SlopeFit:
    """OLS of log y on log x with a t-based confidence interval for the slope."""
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    if x.size != y.size or x.size < 2:
        raise InvalidInput("need matching arrays with at least two points")
    if np.any(x <= 0) or np.any(y <= 0):
        raise InvalidInput("log-log fit needs positive values")
    res = stats.linregress(np.log(x), np.log(y))
    dof = x.size - 2
    if dof > 0:
        q = stats.t.ppf(0.5 + level / 2, dof)
        ci = (res.slope - q * res.stderr, res.slope + q * res.stderr)
    else:
        ci = (float("nan"), float("nan"))
    return SlopeFit(float(res.slope), float(res.stderr), float(res.intercept), ci, int(x.size))


def hurst_fit(times: Sequence[float], variances: Sequence[float]) -> SlopeFit:
    """Variance exponent 2H from a dyadic table v(t_i)."""
    t = np.asarray(times, dtype=float)
    v = np.asarray(variances, dtype=float)
    if t.size < 4:
        raise InvalidInput("hurst_fit needs at least 4 times")
    if np.any(v <= 0):
        raise InvalidInput("variances must be positive")
    ratios = t[1:] / t[:-1]
    if not np.allclose(ratios, 2.0, rtol=1e-9):
        raise InvalidInput("times must form a dyadic grid")
    return loglog_fit(t, v)


def trend_pvalue(values: Sequence[float]) -> float:
    """One-sided Kendall test for an increasing trend along the given order."""
    v = np.asarray(values, dtype=float)
    if v.size < 3:
        return 1.0
    return float(stats.kendalltau(np.arange(v.size), v, alternative="greater").pvalue)


@dataclass
class BoundReport:
    constant: float
    ratios: np.ndarray
    trend_pvalues: dict[str, list[float]] = field(default_factory=dict)

    @property
    def flags(self) -> dict[str, bool]:
        return {ax: any(p <= TREND_ALPHA for p in ps) for ax, ps in self.trend_pvalues.items()}

    @property
    def flagged(self) -> bool:
        return any(self.flags.values())


def bound_check(estimates, bounds, axes: Sequence[str] | None = None) -> BoundReport:
    """C_fit = max estimate / bound, plus a growth test along every grid axis.

    ``estimates`` and ``bounds`` share a shape; axis ``a`` is tested on every
    1-D slice, and the report keeps one p-value per slice.
    """
    est = np.asarray(estimates, dtype=float)
    bnd = np.asarray(bounds, dtype=float)
    if est.shape != bnd.shape or est.size == 0:
        raise InvalidInput("estimates and bounds must be nonempty with equal shapes")
    if np.any(bnd <= 0):
        raise InvalidInput("bound values must be positive")
    ratios = est / bnd
    names = list(axes) if axes is not None else [f"axis{i}" for i in range(est.ndim)]
    if len(names) != est.ndim:
        raise InvalidInput("one axis name per dimension")
    pvals: dict[str, list[float]] = {}
    for ax, name in enumerate(names):
        moved = np.moveaxis(ratios, ax, -1).reshape(-1, ratios.shape[ax])
        pvals[name] = [trend_pvalue(row) for row in moved]
    return BoundReport(float(ratios.max()), ratios, pvals)
