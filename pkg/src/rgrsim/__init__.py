"""rgrsim: rich-get-richer wealth disbursement in a finite population.

Simulation engine, exact expected-occupancy recursion, closed-form
limiting distributions, and scaling/exponent analysis, plus a CLI for
running reproducible experiments to CSV/JSON artifacts.
"""
from .analytics import (
    FitResult,
    HillEstimator,
    ScaledDistribution,
    StretchedExponentialFit,
    WidthExponentFit,
    collapse,
    collapse_distance,
    gaussian_moment_test,
    hill_tail_exponent,
    peak_height,
    robust_width,
    stretched_exponential_fit,
    total_variation_distance,
    uncollapse,
    width_exponent_fit,
)
from .fenwick import FenwickTree
from .meanfield import (
    OccupancyVector,
    ScalingCurve,
    TruncationWarning,
    agent_wealth,
    asymptotic_f,
    asymptotic_log_f,
    default_t_grid,
    evolve_expected,
    expected_step,
    gaussian_limit,
    introduction_cdf,
    parametric_scaling_curve,
    pareto_density,
    poisson_occupancy,
    zero_wealth_fraction,
)
from .model import (
    BootstrapPolicy,
    EnsembleHistogram,
    ModelParams,
    WealthHistogram,
    WealthState,
    ensemble_run,
    measure_throughput,
    new_state,
    run,
)
from .regimes import LOG_SLOW, ScalingRegime, WidthFunction, scaling_regime
from .rng import RNG_ALGORITHM, derive_rng, rng_config

__version__ = "0.1.0"
