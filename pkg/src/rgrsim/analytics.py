"""Turning recorded histograms into evidence about the scaling behavior.

Contents: scaling collapses onto (x, f) coordinates, a CDF-based
distance to quantify collapse quality, robust width measurement (the
variance diverges above the critical point, so sigma-based widths are
useless there), and the exponent estimators: Hill for the power-law
tail, a log-log-log slope for the stretched-exponential wing, and a
log-log regression for the width exponent.

Estimators follow the scikit-learn convention: parameters in the
constructor, ``fit`` returns ``self``, fitted quantities carry a
trailing underscore, and a plain-function wrapper returning a
``FitResult`` exists for each.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .base import BaseEstimator, as_float_array, check_counts
from .regimes import LOG_SLOW, ScalingRegime, WidthFunction, scaling_regime

__all__ = [
    "ScalingRegime", "WidthFunction", "LOG_SLOW", "scaling_regime",
    "ScaledDistribution", "collapse", "uncollapse", "collapse_distance",
    "robust_width", "gaussian_moment_test", "total_variation_distance",
    "peak_height", "FitResult", "HillEstimator", "StretchedExponentialFit",
    "WidthExponentFit", "hill_tail_exponent", "stretched_exponential_fit",
    "width_exponent_fit",
]


def _counts_of(hist) -> np.ndarray:
    counts = getattr(hist, "counts", hist)
    return check_counts(counts)


# ----------------------------------------------------------------------
# robust location / scale from occupancy counts
# ----------------------------------------------------------------------

def _weighted_quantile(values: np.ndarray, weights: np.ndarray, q: float) -> float:
    """Smallest value whose cumulative weight reaches q of the total."""
    order = np.argsort(values, kind="stable")
    v = values[order]
    cum = np.cumsum(weights[order].astype(float))
    total = cum[-1]
    if total <= 0:
        raise ValueError("histogram carries no mass")
    idx = int(np.searchsorted(cum, q * total, side="left"))
    return float(v[min(idx, v.size - 1)])


def robust_width(hist, method: str = "mad") -> float:
    """Robust scale of a wealth histogram, computed exactly from counts.

    ``mad`` is the median absolute deviation about the (weighted, lower)
    median.  On an integer lattice the MAD is itself integer-valued,
    which makes it coarse when the distribution is only a few units wide
    (a symmetric half-mass peak yields MAD = 0); ``iqr`` selects the
    half interquartile range instead for those cases.
    """
    counts = _counts_of(hist).astype(float)
    k = np.arange(counts.size, dtype=float)
    occupied = counts > 0
    k, counts = k[occupied], counts[occupied]
    if k.size == 0:
        raise ValueError("histogram carries no mass")
    if method == "mad":
        median = _weighted_quantile(k, counts, 0.5)
        return _weighted_quantile(np.abs(k - median), counts, 0.5)
    if method == "iqr":
        return 0.5 * (_weighted_quantile(k, counts, 0.75)
                      - _weighted_quantile(k, counts, 0.25))
    raise ValueError(f"unknown width method {method!r} (use 'mad' or 'iqr')")


# ----------------------------------------------------------------------
# scaling collapse
# ----------------------------------------------------------------------

@dataclass
class ScaledDistribution:
    """Collapsed wealth distribution: f(x) with per-point bin widths dx.

    ``x = (k - t/A) / w(t)`` where ``A`` is the number of agents in the
    underlying model, and ``f = w(t) * density`` normalized over the
    ``n_agents`` agents the counts describe (> A for pooled ensembles).
    The points integrate to one minus the zero-wealth atom, which is
    dropped from the points and reported separately in ``zero_atom``.
    """

    x: np.ndarray
    f: np.ndarray
    dx: np.ndarray
    t: float
    A: float
    n_agents: float
    regime: ScalingRegime
    binning: str = "unit"
    zero_atom: float = 0.0

    def normalization(self) -> float:
        return float((self.f * self.dx).sum())

    def mad(self) -> float:
        """Weighted median absolute deviation of x under density f."""
        weights = self.f * self.dx
        median = _weighted_quantile(self.x, weights, 0.5)
        return _weighted_quantile(np.abs(self.x - median), weights, 0.5)


def _log_bin_edges(k_lo: int, k_hi: int, ratio: float) -> np.ndarray:
    """Integer bin edges growing geometrically from k_lo up to beyond k_hi."""
    edges = [k_lo]
    width = 1.0
    while edges[-1] <= k_hi:
        width *= ratio
        edges.append(edges[-1] + max(1, int(round(width))))
    return np.asarray(edges, dtype=np.int64)


def collapse(hist, t: float, A: float, regime: ScalingRegime, *,
             binning: str = "unit", drop_empty: bool = True,
             log_bin_ratio: float = 1.25) -> ScaledDistribution:
    """Collapse an occupancy histogram onto scaled coordinates.

    ``A`` is the number of agents in the model (it fixes the mean wealth
    t/A); the density is normalized by the total count mass, so pooled
    ensemble histograms collapse correctly without rescaling.
    ``binning='unit'`` keeps one point per wealth level;
    ``binning='log'`` keeps unit bins through the bulk and merges the
    sparse positive tail (beyond one width above the mean) into
    geometric bins so tail densities are estimated from more than a
    handful of agents.
    """
    counts = _counts_of(hist).astype(float)
    t = float(t)
    if A <= 0:
        raise ValueError(f"A must be positive, got {A}")
    if regime.width_fn is WidthFunction.SQRT_T_LOG_T and t < 2:
        raise ValueError(f"t={t} is too small for the logarithmic width scale")
    w = regime.width(t)
    n_agents = float(counts.sum())
    if n_agents <= 0:
        raise ValueError("histogram carries no mass")
    zero_atom = float(counts[0] / n_agents)
    mean = t / A

    k = np.arange(counts.size, dtype=float)
    if binning == "unit":
        sel = slice(1, None)
        x = (k[sel] - mean) / w
        f = w * counts[sel] / n_agents
        dx = np.full(x.size, 1.0 / w)
    elif binning == "log":
        split = min(counts.size, max(2, int(math.ceil(mean + w)) + 1))
        x_core = (k[1:split] - mean) / w
        f_core = w * counts[1:split] / n_agents
        dx_core = np.full(x_core.size, 1.0 / w)
        if split < counts.size:
            edges = _log_bin_edges(split, counts.size - 1, log_bin_ratio)
            mass, _ = np.histogram(np.arange(split, counts.size),
                                   bins=edges, weights=counts[split:])
            # the final edge can overshoot the data range; clip its bin
            edges_clipped = np.minimum(edges, counts.size)
            widths = np.diff(edges_clipped).astype(float)
            centers = 0.5 * (edges_clipped[:-1] + edges_clipped[1:] - 1)
            x_tail = (centers - mean) / w
            f_tail = w * mass / (n_agents * widths)
            dx_tail = widths / w
            x = np.concatenate([x_core, x_tail])
            f = np.concatenate([f_core, f_tail])
            dx = np.concatenate([dx_core, dx_tail])
        else:
            x, f, dx = x_core, f_core, dx_core
    else:
        raise ValueError(f"unknown binning {binning!r} (use 'unit' or 'log')")

    if drop_empty:
        keep = f > 0
        x, f, dx = x[keep], f[keep], dx[keep]
    return ScaledDistribution(x=x, f=f, dx=dx, t=t, A=float(A),
                              n_agents=n_agents, regime=regime,
                              binning=binning, zero_atom=zero_atom)


def uncollapse(sd: ScaledDistribution):
    """Invert a unit-binned collapse back to occupancy counts.

    Returns (t, counts) with float counts; the zero-wealth atom is
    restored from the recorded ``zero_atom``.
    """
    if sd.binning != "unit":
        raise ValueError("only unit-binned collapses are invertible")
    w = sd.regime.width(sd.t)
    k = np.rint(sd.x * w + sd.t / sd.A).astype(np.int64)
    if np.any(k < 0):
        raise ValueError("scaled points map to negative wealth levels")
    counts = np.zeros(int(k.max()) + 1 if k.size else 1, dtype=float)
    counts[k] = sd.f * sd.n_agents / w
    counts[0] = sd.zero_atom * sd.n_agents
    return sd.t, counts


def collapse_distance(a: ScaledDistribution, b: ScaledDistribution) -> float:
    """L1 distance between the CDFs of two scaled distributions.

    Each curve's CDF accumulates its per-point mass f*dx (robust to
    sparsely occupied tails, where interpolating the density itself
    would invent mass between isolated points) and is linearly
    interpolated onto the union grid of the overlapping x range.
    Symmetric, and zero exactly when the curves coincide on the overlap.
    """
    def cdf(sd):
        x, f = np.asarray(sd.x, float), np.asarray(sd.f, float)
        dx = np.asarray(sd.dx, float)
        if x.size < 2:
            raise ValueError("scaled distribution needs at least two points")
        if np.any(np.diff(x) <= 0):
            raise ValueError("x must be strictly increasing")
        return x, np.cumsum(f * dx)

    xa, Fa = cdf(a)
    xb, Fb = cdf(b)
    lo, hi = max(xa[0], xb[0]), min(xa[-1], xb[-1])
    if not lo < hi:
        raise ValueError("scaled distributions do not overlap in x")
    grid = np.union1d(xa, xb)
    grid = np.concatenate([[lo], grid[(grid > lo) & (grid < hi)], [hi]])
    da = np.interp(grid, xa, Fa)
    db = np.interp(grid, xb, Fb)
    return float(np.trapezoid(np.abs(da - db), grid))


# ----------------------------------------------------------------------
# distribution-level checks
# ----------------------------------------------------------------------

def gaussian_moment_test(hist, t: float, A: float, r: float) -> tuple[float, float]:
    """Relative mean error and variance ratio against the diffusive limit.

    Only meaningful below the critical point, where the limiting
    variance is t / (A (1 - 2r)); rejected for r >= 1/2.
    """
    r = float(r)
    if not 0.0 <= r < 0.5:
        raise ValueError(f"moment test applies only for r < 1/2, got r={r}")
    t = float(t)
    if t <= 0:
        raise ValueError("t must be positive")
    A = float(A)
    counts = _counts_of(hist).astype(float)
    k = np.arange(counts.size, dtype=float)
    total = counts.sum()
    mean = (k * counts).sum() / total
    var = ((k - mean) ** 2 * counts).sum() / total
    mean_error = abs(mean - t / A) / (t / A)
    variance_ratio = var / (t / (A * (1.0 - 2.0 * r)))
    return float(mean_error), float(variance_ratio)


def total_variation_distance(p, q) -> float:
    """Half the L1 distance between two distributions over wealth levels.

    Inputs may be counts or probabilities; each is normalized by its own
    total, and the shorter vector is zero-padded.
    """
    p = check_counts(p, "p").astype(float)
    q = check_counts(q, "q").astype(float)
    n = max(p.size, q.size)
    pp = np.zeros(n)
    qq = np.zeros(n)
    pp[: p.size] = p / p.sum()
    qq[: q.size] = q / q.sum()
    return float(0.5 * np.abs(pp - qq).sum())


def peak_height(hist, t: float, A: float, regime: ScalingRegime, *,
                bin_width_mads: float = 0.1, fit_halfwidth_mads: float = 1.0) -> float:
    """Mode height of the collapsed density, from a local quadratic fit.

    The histogram is rebinned to roughly ``bin_width_mads`` robust widths
    per bin and log f is fitted with a parabola around the maximal bin;
    this smooths out occupancy noise when single wealth levels hold far
    fewer than one agent each.
    """
    counts = _counts_of(hist).astype(float)
    w = regime.width(t)
    n_agents = counts.sum()
    mad_k = robust_width(counts)
    if mad_k <= 0:
        raise ValueError("histogram too narrow for a peak fit")
    k = np.arange(counts.size)
    median = _weighted_quantile(k.astype(float), counts, 0.5)
    step = max(1, int(round(bin_width_mads * mad_k)))
    lo = max(0, int(median - 5 * mad_k))
    hi = min(counts.size, int(median + 5 * mad_k) + step)
    edges = np.arange(lo, hi + 1, step)
    mass = np.add.reduceat(counts[lo:hi], edges[:-1] - lo)[: edges.size - 1]
    if edges[-1] < hi:  # reduceat folds the trailing partial span into the last sum
        mass, edges = mass[:-1], edges[:-1]
    if edges.size < 4:
        raise ValueError("too few bins around the mode for a peak fit")
    centers = 0.5 * (edges[:-1] + edges[1:] - 1)
    f = w * mass / (n_agents * step)
    x = (centers - t / float(A)) / w

    peak_bin = int(np.argmax(f))
    half = fit_halfwidth_mads * mad_k / w
    window = (np.abs(x - x[peak_bin]) <= half) & (f > 0)
    if window.sum() < 5:
        return float(f[peak_bin])
    coeffs = np.polyfit(x[window], np.log(f[window]), 2)
    if coeffs[0] >= 0:
        return float(f[peak_bin])
    vertex = -coeffs[1] / (2.0 * coeffs[0])
    return float(math.exp(np.polyval(coeffs, vertex)))


# ----------------------------------------------------------------------
# exponent estimators
# ----------------------------------------------------------------------

@dataclass
class FitResult:
    """Point estimate with its standard error and fit-window provenance."""

    estimate: float
    stderr: float
    window: tuple[float, float]
    n_points: int
    diagnostics: float
    extras: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "estimate": self.estimate,
            "stderr": self.stderr,
            "window": list(self.window),
            "n_points": self.n_points,
            "diagnostics": self.diagnostics,
            "extras": self.extras,
        }


def _ols(z: np.ndarray, y: np.ndarray) -> tuple[float, float, float, float]:
    """Least-squares line fit: slope, intercept, slope stderr, residual RMS."""
    n = z.size
    zbar, ybar = z.mean(), y.mean()
    szz = ((z - zbar) ** 2).sum()
    if szz == 0:
        raise ValueError("degenerate fit: all abscissae identical")
    slope = ((z - zbar) * (y - ybar)).sum() / szz
    intercept = ybar - slope * zbar
    resid = y - (intercept + slope * z)
    rms = float(np.sqrt((resid**2).mean()))
    stderr = float(np.sqrt((resid**2).sum() / max(n - 2, 1) / szz))
    return float(slope), float(intercept), stderr, rms


class HillEstimator(BaseEstimator):
    """Order-statistics estimator of the power-law tail exponent.

    Fits the density exponent lambda of P(k) ~ k**(-lambda) from the top
    ``tail_fraction`` of the samples, and re-estimates over the
    ``sweep`` fractions as a sensitivity diagnostic.
    """

    def __init__(self, tail_fraction: float = 0.01,
                 sweep: tuple[float, ...] = (0.005, 0.01, 0.02),
                 min_tail: int = 50):
        self.tail_fraction = tail_fraction
        self.sweep = sweep
        self.min_tail = min_tail

    def _hill(self, sorted_desc: np.ndarray, fraction: float):
        n = sorted_desc.size
        m = min(int(n * fraction), n - 1)
        if m < self.min_tail:
            raise ValueError(
                f"too few tail points: fraction {fraction} of {n} samples gives "
                f"{m} < {self.min_tail}"
            )
        pivot = sorted_desc[m]
        log_excess = np.log(sorted_desc[:m] / pivot)
        total = log_excess.sum()
        if total <= 0:
            raise ValueError("no tail variation: top order statistics are all equal")
        lam = 1.0 + m / total
        return lam, m, float(pivot), float(sorted_desc[0])

    def fit(self, samples):
        samples = as_float_array(samples, "samples", min_len=2)
        if np.any(samples <= 0):
            raise ValueError("samples must be positive for a tail fit")
        sorted_desc = np.sort(samples)[::-1]
        lam, m, pivot, top = self._hill(sorted_desc, self.tail_fraction)
        sensitivity = {}
        for frac in self.sweep:
            try:
                lam_s, *_ = self._hill(sorted_desc, frac)
            except ValueError:
                continue
            sensitivity[frac] = lam_s
        spread = max((abs(v - lam) for v in sensitivity.values()), default=0.0)
        self.estimate_ = lam
        self.stderr_ = (lam - 1.0) / math.sqrt(m)
        self.window_ = (pivot, top)
        self.n_points_ = m
        self.diagnostics_ = spread
        self.result_ = FitResult(
            estimate=self.estimate_, stderr=self.stderr_, window=self.window_,
            n_points=m, diagnostics=spread,
            extras={"sensitivity": {str(k): v for k, v in sensitivity.items()}},
        )
        return self


class StretchedExponentialFit(BaseEstimator):
    """Slope of ln(-ln f) against ln|x| on the negative wing.

    For the supercritical scaled distribution this slope estimates
    1/(1-r).  The fit window may be given directly as ``x_window``
    (negative bounds) or in units of the curve's robust width via
    ``mad_window``; the fit requires every windowed point to satisfy
    0 < f < 1, since the double logarithm is undefined otherwise.
    """

    def __init__(self, x_window: tuple[float, float] | None = None,
                 mad_window: tuple[float, float] = (-3.0, -1.0),
                 min_points: int = 10):
        self.x_window = x_window
        self.mad_window = mad_window
        self.min_points = min_points

    def fit(self, curve):
        x = np.asarray(curve.x, dtype=float)
        log_f = getattr(curve, "log_f", None)
        if log_f is None:
            f = np.asarray(curve.f, dtype=float)
            with np.errstate(divide="ignore"):
                log_f = np.where(f > 0, np.log(np.where(f > 0, f, 1.0)), -np.inf)
        log_f = np.asarray(log_f, dtype=float)

        if self.x_window is not None:
            lo, hi = float(self.x_window[0]), float(self.x_window[1])
        else:
            width = curve.mad()
            lo, hi = self.mad_window[0] * width, self.mad_window[1] * width
        if not (lo < hi <= 0.0) or hi == 0.0:
            raise ValueError(f"window must satisfy lo < hi < 0, got ({lo}, {hi})")

        mask = (x >= lo) & (x <= hi)
        if not mask.any():
            raise ValueError(f"empty window: no points in [{lo}, {hi}]")
        if np.any(log_f[mask] >= 0):
            raise ValueError("f >= 1 inside the window; the double log is undefined")
        mask &= np.isfinite(log_f)
        if mask.sum() < self.min_points:
            raise ValueError(
                f"need at least {self.min_points} usable points, got {int(mask.sum())}"
            )
        z = np.log(-x[mask])
        y = np.log(-log_f[mask])
        slope, _, stderr, rms = _ols(z, y)
        self.estimate_ = slope
        self.stderr_ = stderr
        self.window_ = (lo, hi)
        self.n_points_ = int(mask.sum())
        self.diagnostics_ = rms
        self.result_ = FitResult(estimate=slope, stderr=stderr, window=(lo, hi),
                                 n_points=self.n_points_, diagnostics=rms)
        return self


class WidthExponentFit(BaseEstimator):
    """Growth exponent of the distribution width: slope of ln w vs ln t.

    Three points over two decades (one per decade) are accepted as the
    minimal usable grid; more points tighten the standard error.
    """

    def __init__(self, min_points: int = 3, min_decades: float = 2.0):
        self.min_points = min_points
        self.min_decades = min_decades

    def fit(self, t, widths):
        t = as_float_array(t, "t", min_len=self.min_points)
        widths = as_float_array(widths, "widths", min_len=self.min_points)
        if t.size != widths.size:
            raise ValueError("t and widths must have equal length")
        if np.any(t <= 0) or np.any(widths <= 0):
            raise ValueError("times and widths must be positive")
        span = math.log10(t.max() / t.min())
        if span < self.min_decades:
            raise ValueError(
                f"time grid spans {span:.2f} decades; need >= {self.min_decades}"
            )
        slope, _, stderr, rms = _ols(np.log(t), np.log(widths))
        self.estimate_ = slope
        self.stderr_ = stderr
        self.window_ = (float(t.min()), float(t.max()))
        self.n_points_ = int(t.size)
        self.diagnostics_ = rms
        self.result_ = FitResult(estimate=slope, stderr=stderr, window=self.window_,
                                 n_points=self.n_points_, diagnostics=rms)
        return self


def hill_tail_exponent(samples, tail_fraction: float = 0.01) -> FitResult:
    return HillEstimator(tail_fraction=tail_fraction).fit(samples).result_


def stretched_exponential_fit(curve, x_window) -> FitResult:
    return StretchedExponentialFit(x_window=x_window).fit(curve).result_


def width_exponent_fit(widths) -> FitResult:
    pairs = list(widths)
    t = [p[0] for p in pairs]
    w = [p[1] for p in pairs]
    return WidthExponentFit().fit(t, w).result_
