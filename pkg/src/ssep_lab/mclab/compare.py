"""Monte Carlo versus limit verdicts."""
from __future__ import annotations

import math
from dataclasses import dataclass

from ..limits import LimitValue

SLACK_REL = 0.15
SLACK_ABS = 1e-3


@dataclass
class Verdict:
    mc: float
    se: float
    limit: float
    quad_error: float
    z: float
    tolerance: float
    passed: bool

    def to_dict(self) -> dict:
        return {"mc": self.mc, "se": self.se, "limit": self.limit, "quad_error": self.quad_error,
                "z": self.z, "tolerance": self.tolerance, "verdict": "PASS" if self.passed else "FAIL"}


def compare_mc_limit(mc: float, se: float, target: LimitValue | float, slack_rel: float = SLACK_REL,
                     slack_abs: float = SLACK_ABS) -> Verdict:
    """PASS if |mc - limit| <= max(3 SE + quadrature error, slack_rel |limit| + slack_abs)."""
    if isinstance(target, LimitValue):
        lim, qerr = target.value, target.error_estimate
    else:
        lim, qerr = float(target), 0.0
    diff = mc - lim
    if se > 0:
        z = diff / se
    else:
        z = 0.0 if diff == 0 else math.copysign(math.inf, diff)
    tol = max(3.0 * se + qerr, slack_rel * abs(lim) + slack_abs)
    return Verdict(mc, se, lim, qerr, z, tol, abs(diff) <= tol)
