"""Phase classification of the disbursement process.

The long-time shape of the wealth distribution changes character at
``r = 1/2``: below it the homogeneous process wins and the width grows
diffusively, above it the preferential process wins and the width grows
like ``t**r``; exactly at the critical point the width picks up a
logarithmic correction and relaxation becomes logarithmically slow.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

CRITICAL_R = 0.5

LOG_SLOW = "LOG_SLOW"


class WidthFunction(enum.Enum):
    SQRT_T = "sqrt_t"
    T_POW_R = "t_pow_r"
    SQRT_T_LOG_T = "sqrt_t_log_t"


@dataclass(frozen=True)
class ScalingRegime:
    """Width law and relaxation exponent for a given preferential fraction."""

    r: float
    alpha: float
    width_fn: WidthFunction
    transient_exponent: float | str

    def width(self, t: float) -> float:
        """Width scale w(t) used to collapse histograms recorded at time t."""
        if self.width_fn is WidthFunction.SQRT_T:
            return math.sqrt(t)
        if self.width_fn is WidthFunction.T_POW_R:
            return t**self.r
        if t <= 1:
            raise ValueError("logarithmic width needs t > 1")
        return math.sqrt(t * math.log(t))


def scaling_regime(r: float) -> ScalingRegime:
    """Classify ``r`` against the critical point.

    The comparison with 1/2 is exact: the caller chooses r, and behavior
    near the transition is physics (slow crossover), not a tolerance
    problem, so no epsilon band is applied.
    """
    r = float(r)
    if not 0.0 <= r <= 1.0:
        raise ValueError(f"r must lie in [0, 1], got {r}")
    if r < CRITICAL_R:
        return ScalingRegime(r=r, alpha=0.5, width_fn=WidthFunction.SQRT_T,
                             transient_exponent=0.5)
    if r > CRITICAL_R:
        return ScalingRegime(r=r, alpha=r, width_fn=WidthFunction.T_POW_R,
                             transient_exponent=2.0 * r - 1.0)
    return ScalingRegime(r=r, alpha=0.5, width_fn=WidthFunction.SQRT_T_LOG_T,
                         transient_exponent=LOG_SLOW)
