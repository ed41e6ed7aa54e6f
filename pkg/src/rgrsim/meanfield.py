"""Deterministic counterparts of the simulation.

Two layers live here:

* the expected-occupancy recursion: one discrete update of the master
  equation per disbursed unit.  Because the per-step selection
  probabilities are linear in the occupancy counts, this recursion is
  *exact* for expected values (no closure approximation), which makes it
  a legitimate oracle for Monte Carlo means;
* closed-form evaluators for every limiting regime: the early-time
  Pareto density, the homogeneous-process Poisson occupancy and its
  Gaussian limit, the zero-wealth decay, the introduction-time CDF, the
  per-agent rate-equation wealth, and the parametric scaled distribution
  valid above the critical point.

Quantities that overflow or underflow in linear space (deep Poisson
bins, stretched-exponential wings) are computed in log space.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy.special import gammaln

from .base import check_nonnegative_int, check_positive_int
from .model import ModelParams
from .regimes import scaling_regime


class TruncationWarning(UserWarning):
    """Probability mass was clipped at the occupancy truncation index."""


@dataclass
class OccupancyVector:
    """Expected occupancy counts[k] for k = 0..k_max at total wealth t."""

    counts: np.ndarray
    t: int
    leaked_mass: float = 0.0
    truncated: bool = False

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=float)

    @property
    def k_max(self) -> int:
        return self.counts.size - 1

    def mass(self) -> float:
        return float(self.counts.sum())

    def mean(self) -> float:
        k = np.arange(self.counts.size)
        return float((k * self.counts).sum() / self.counts.sum())

    def variance(self) -> float:
        k = np.arange(self.counts.size)
        total = self.counts.sum()
        mu = (k * self.counts).sum() / total
        return float(((k - mu) ** 2 * self.counts).sum() / total)


# Occupancies below this are clipped off the live window into the leak
# accumulator: the cumulative clipped mass is bounded by ~1e-55, far
# under every tolerance, while keeping the window (and the cost per
# step) proportional to the actual support instead of creeping over the
# whole array through denormal-range residue.
_CLIP = 1e-60


@njit(cache=True)
def _evolve_kernel(counts, t_start, n_steps, a, r, lo, hi, leaked):
    """Advance the expected-occupancy recursion in place over a live window.

    Flux out of level k is (c1 + c2*k) * N_k with c1 the homogeneous and
    c2 the preferential rate; each step moves that flux one level up, so
    the total count telescopes exactly and index-weighted mass grows by
    one unit per step.  Mass pushed past the top index accumulates in
    ``leaked`` instead of being dropped, as does sub-_CLIP edge residue.
    """
    k_max = counts.shape[0] - 1
    for s in range(n_steps):
        t = t_start + s
        if t == 0:
            # first unit: a preferential draw falls back to uniform
            c1 = 1.0 / a
            c2 = 0.0
        else:
            c1 = (1.0 - r) / a
            c2 = r / t
        prev = 0.0
        top = hi
        for k in range(lo, top + 1):
            n_k = counts[k]
            p = (c1 + c2 * k) * n_k
            counts[k] = n_k - p + prev
            prev = p
        if top < k_max and prev >= _CLIP:
            counts[top + 1] += prev
            hi = top + 1
        else:
            leaked += prev
        while lo < hi and counts[lo] < _CLIP:
            leaked += counts[lo]
            counts[lo] = 0.0
            lo += 1
    return lo, hi, leaked


def _window(counts: np.ndarray) -> tuple[int, int]:
    nz = np.flatnonzero(counts)
    if nz.size == 0:
        return 0, 0
    return int(nz[0]), int(nz[-1])


def expected_step(occ: OccupancyVector, params: ModelParams) -> OccupancyVector:
    """One discrete step of the expected dynamics (pure; returns a copy)."""
    counts = occ.counts.copy()
    lo, hi = _window(counts)
    _, _, leaked = _evolve_kernel(
        counts, occ.t, 1, params.agents, params.r, lo, hi, occ.leaked_mass
    )
    return OccupancyVector(counts=counts, t=occ.t + 1, leaked_mass=float(leaked),
                           truncated=occ.truncated)


def default_k_max(params: ModelParams, t_max: int) -> int:
    """Truncation index: mean plus twelve widths, floored at 64.

    Twelve widths keep clipped Gaussian-phase mass far below any tested
    tolerance; above the critical point the fat tail can exceed any such
    window, which is why the leak is monitored rather than assumed zero.
    The exact support bound t_max always suffices.
    """
    if t_max <= 1:
        return max(64, t_max)
    width = scaling_regime(params.r).width(t_max)
    return min(int(t_max), max(64, math.ceil(t_max / params.agents + 12.0 * width)))


def evolve_expected(params: ModelParams, t_max: int, k_max: int | None = None,
                    checkpoints=None) -> list[OccupancyVector]:
    """Expected-occupancy trajectory, snapshotted at the checkpoints.

    Emits one OccupancyVector per checkpoint (default: only at t_max).
    If clipped mass at a checkpoint exceeds 1e-9 * agents, the snapshot
    is flagged and a TruncationWarning is issued.
    """
    t_max = check_nonnegative_int(t_max, "t_max")
    if checkpoints is None:
        checkpoints = (t_max,)
    cps = [check_nonnegative_int(c, "checkpoint") for c in checkpoints]
    if any(b < a for a, b in zip(cps, cps[1:])):
        raise ValueError(f"checkpoints must be sorted, got {cps}")
    if cps and cps[-1] > t_max:
        raise ValueError(f"checkpoints must lie in [0, {t_max}], got {cps}")
    if k_max is None:
        k_max = default_k_max(params, t_max)
    k_max = check_nonnegative_int(k_max, "k_max")

    counts = np.zeros(k_max + 1, dtype=float)
    counts[0] = float(params.agents)
    lo, hi = 0, 0
    leaked = 0.0
    out = []
    position = 0
    for cp in cps:
        lo, hi, leaked = _evolve_kernel(
            counts, position, cp - position, params.agents, params.r, lo, hi, leaked
        )
        position = cp
        truncated = leaked > 1e-9 * params.agents
        if truncated:
            warnings.warn(
                f"occupancy truncation at k_max={k_max}: leaked mass {leaked:.3e} "
                f"exceeds 1e-9 * agents at t={cp}; increase k_max",
                TruncationWarning,
                stacklevel=2,
            )
        out.append(OccupancyVector(counts=counts.copy(), t=cp,
                                   leaked_mass=float(leaked), truncated=truncated))
    _evolve_kernel(counts, position, t_max - position, params.agents, params.r,
                   lo, hi, leaked)
    return out


# ----------------------------------------------------------------------
# closed forms
# ----------------------------------------------------------------------

def pareto_density(r: float, k) -> np.ndarray | float:
    """Early-time wealth density (1/r) * k**(-1 - 1/r), normalized on k >= 1."""
    r = float(r)
    if not 0.0 < r <= 1.0:
        raise ValueError(f"r must lie in (0, 1]; the density exponent diverges at r=0 (got {r})")
    k_arr = np.asarray(k, dtype=float)
    if np.any(k_arr < 1.0):
        raise ValueError("k must be >= 1")
    out = (1.0 / r) * k_arr ** (-1.0 - 1.0 / r)
    return out if out.shape else float(out)


def poisson_occupancy(A: int, t: float, k) -> np.ndarray | float:
    """Expected occupancy of the pure homogeneous process (r = 0).

    A * (t/A)**k * exp(-t/A) / k!, evaluated in log space so that deep
    tail levels neither overflow the power nor the factorial.
    """
    A = check_positive_int(A, "A")
    t = float(t)
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    k_arr = np.asarray(k, dtype=float)
    if np.any(k_arr < 0):
        raise ValueError("k must be >= 0")
    if t == 0.0:
        out = np.where(k_arr == 0, float(A), 0.0)
        return out if out.shape else float(out)
    mu = t / A
    log_pmf = k_arr * math.log(mu) - mu - gammaln(k_arr + 1.0)
    out = A * np.exp(log_pmf)
    return out if out.shape else float(out)


def gaussian_limit(A: int, r: float, t: float, k) -> np.ndarray | float:
    """Limiting wealth density below and at the critical point.

    For r < 1/2 a normal density with mean t/A and variance t/(A(1-2r));
    at r = 1/2 the variance carries the logarithmic correction t*ln(t)/A.
    Above the critical point no Gaussian limit exists and the call is
    rejected.
    """
    A = check_positive_int(A, "A")
    r = float(r)
    if not 0.0 <= r <= 0.5:
        raise ValueError(f"the Gaussian limit only applies for 0 <= r <= 1/2, got r={r}")
    t = float(t)
    if t <= 1.0:
        raise ValueError(f"t must be > 1, got {t}")
    mean = t / A
    if r < 0.5:
        var = t / (A * (1.0 - 2.0 * r))
    else:
        var = t * math.log(t) / A
    k_arr = np.asarray(k, dtype=float)
    out = np.exp(-0.5 * (k_arr - mean) ** 2 / var) / math.sqrt(2.0 * math.pi * var)
    return out if out.shape else float(out)


def zero_wealth_fraction(A: int, r: float, t: float) -> float:
    """Fraction of agents never yet selected: exp(-(1-r) t / A)."""
    A = check_positive_int(A, "A")
    r = float(r)
    if not 0.0 <= r <= 1.0:
        raise ValueError(f"r must lie in [0, 1], got {r}")
    t = float(t)
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    return math.exp(-(1.0 - r) * t / A)


def introduction_cdf(A: int, r: float, T, t: float) -> np.ndarray | float:
    """Probability an agent introduced by time t was introduced by time T.

    Ratio of exponential saturations; computed with expm1 so the
    infinite-population limit T/t is reached smoothly.  Degenerates to
    0/0 at r = 1 (no agent is ever introduced) and is rejected there.
    """
    A = check_positive_int(A, "A")
    r = float(r)
    if not 0.0 <= r <= 1.0:
        raise ValueError(f"r must lie in [0, 1], got {r}")
    if r == 1.0:
        raise ValueError("introduction CDF is undefined at r=1 (0/0: nobody is introduced)")
    t = float(t)
    if t <= 0:
        raise ValueError(f"t must be > 0, got {t}")
    T_arr = np.asarray(T, dtype=float)
    if np.any((T_arr < 0) | (T_arr > t)):
        raise ValueError("T must lie in [0, t]")
    a = (1.0 - r) / A
    out = np.expm1(-a * T_arr) / np.expm1(-a * t)
    return out if out.shape else float(out)


def agent_wealth(A: int, r: float, t_i, t: float) -> np.ndarray | float:
    """Expected wealth at time t of an agent introduced at time t_i.

    (1 - t_i/A) (t/t_i)**r + t/A; strictly decreasing in the introduction
    time for t_i < A.  The introduction time t_i = 0 is singular.
    """
    A = check_positive_int(A, "A")
    r = float(r)
    if not 0.0 <= r <= 1.0:
        raise ValueError(f"r must lie in [0, 1], got {r}")
    t = float(t)
    t_i_arr = np.asarray(t_i, dtype=float)
    if np.any(t_i_arr <= 0):
        raise ValueError("t_i must be > 0 (t_i = 0 is singular)")
    if np.any(t_i_arr > t):
        raise ValueError("t_i must be <= t")
    out = (1.0 - t_i_arr / A) * (t / t_i_arr) ** r + t / A
    return out if out.shape else float(out)


# ----------------------------------------------------------------------
# parametric scaled distribution for r > 1/2
# ----------------------------------------------------------------------

@dataclass
class ScalingCurve:
    """Scaled wealth distribution in parametric form, one point per T.

    ``x`` is strictly decreasing along the grid and ``log_f`` is kept in
    log space: on the stretched-exponential wing the density underflows
    float range long before the asymptotic regime is reached, so ``f``
    may round to zero while ``log_f`` stays informative.
    """

    T: np.ndarray
    x: np.ndarray
    log_f: np.ndarray
    r: float
    A: int

    @property
    def f(self) -> np.ndarray:
        with np.errstate(under="ignore"):
            return np.exp(self.log_f)


def default_t_grid(A: int, r: float, num: int = 1000,
                   upper_factor: float = 20.0) -> np.ndarray:
    """Geometric parameter grid spanning both asymptotic branches.

    The default upper factor is enough for reference-curve overlays; for
    quantitative asymptotic-slope work pass a much larger factor (the
    stretched wing approaches its limiting slope only logarithmically).
    """
    A = check_positive_int(A, "A")
    r = float(r)
    if not 0.5 < r < 1.0:
        raise ValueError(f"parametric grid needs 1/2 < r < 1, got r={r}")
    lo = 1e-3 * A ** (1.0 / (1.0 + r))
    hi = upper_factor * A / (1.0 - r)
    return np.geomspace(lo, hi, int(num))


def parametric_scaling_curve(A: int, r: float, T_grid=None) -> ScalingCurve:
    """Scaled wealth distribution above the critical point.

    x(T) = (1 - T/A) T**(-r),
    f(T) = (1-r) T**(1+r) / (A r + (1-r) T) * exp(-(1-r) T / A),

    computed in log space.  Valid only for 1/2 < r < 1: at and below the
    critical point this construction fails to reproduce the scaling
    forms, and at r = 1 it degenerates with the introduction CDF.
    """
    A = check_positive_int(A, "A")
    r = float(r)
    if not 0.5 < r < 1.0:
        raise ValueError(f"the parametric form applies only for 1/2 < r < 1, got r={r}")
    if T_grid is None:
        T_grid = default_t_grid(A, r)
    T = np.asarray(T_grid, dtype=float)
    if T.ndim != 1 or T.size == 0:
        raise ValueError("T_grid must be a nonempty 1-D array")
    if np.any(T <= 0):
        raise ValueError("T_grid must be positive")
    if np.any(np.diff(T) <= 0):
        raise ValueError("T_grid must be strictly increasing")
    log_T = np.log(T)
    x = (1.0 - T / A) * np.exp(-r * log_T)
    log_f = (
        math.log(1.0 - r)
        + (1.0 + r) * log_T
        - np.log(A * r + (1.0 - r) * T)
        - (1.0 - r) * T / A
    )
    return ScalingCurve(T=T, x=x, log_f=log_f, r=r, A=A)


def asymptotic_log_f(A: int, r: float, x) -> np.ndarray | float:
    """Log of the limiting scaled-density shapes far from the center.

    Power-law decay with exponent 1 + 1/r on the positive side, a
    stretched exponential with power 1/(1-r) on the negative side; both
    unnormalized, so only slopes and ratios are meaningful.
    """
    A = check_positive_int(A, "A")
    r = float(r)
    if not 0.5 < r < 1.0:
        raise ValueError(f"asymptotic shapes apply only for 1/2 < r < 1, got r={r}")
    x_arr = np.asarray(x, dtype=float)
    if np.any(x_arr == 0):
        raise ValueError("x = 0 lies in neither asymptotic branch")
    out = np.empty_like(x_arr)
    pos = x_arr > 0
    with np.errstate(over="ignore"):
        out[pos] = (-1.0 - 1.0 / r) * np.log(x_arr[pos])
        neg = ~pos
        stretched = np.exp((r * math.log(A) + np.log(-x_arr[neg])) / (1.0 - r))
        out[neg] = -(1.0 - r) * stretched
    return out if out.shape else float(out)


def asymptotic_f(A: int, r: float, x) -> np.ndarray | float:
    """Linear-space version of asymptotic_log_f (may underflow to 0)."""
    with np.errstate(under="ignore"):
        out = np.exp(asymptotic_log_f(A, r, x))
    return out if np.asarray(out).shape else float(out)
