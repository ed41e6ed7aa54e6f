"""Acceptance suite: one test per acceptance criterion.

Every test prints one PASS/FAIL line with the measured values before
asserting, so a full run (``pytest tests/test_acceptance.py -v -s``)
yields a machine-readable scorecard.  Criteria 2, 6, 8 and 11 are
implemented without loosening and are expected to fail, for reasons
established analytically (see README): the tolerance of criterion 2
sits below the single-run sampling noise floor, and the wing/peak
claims of criteria 6, 8 and 11 are reached only logarithmically far
outside any simulable regime (criterion 8's monotone-increase and
below-limit clauses are contradicted by the exact expected dynamics,
whose scaled peak approaches the Gaussian limit from above).
"""
import time

import numpy as np
import pytest
from scipy import stats

import rgrsim as rg

SEED = 7


def report(criterion, ok, detail):
    print(f"[{'PASS' if ok else 'FAIL'}] criterion {criterion}: {detail}")


@pytest.fixture(scope="module")
def warm_kernel():
    state = rg.WealthState(rg.ModelParams(agents=1000, r=0.5, seed=0))
    state.advance(10_000, rg.derive_rng(0))
    return True


@pytest.fixture(scope="module")
def r075_pool100():
    """A=1000, r=0.75, 100 replicas pooled at t=8e5 (criteria 5, 6, 11)."""
    params = rg.ModelParams(agents=1000, r=0.75, seed=SEED)
    return rg.ensemble_run(params, 800_000, [800_000], 100)[0]


@pytest.fixture(scope="module")
def stretched_wing_fit():
    """Stretched-exponential fit of the deepest usable part of the wing.

    Uses a 400-replica pool and coarse wealth bins (the wing is sparse,
    like the positive tail the log-binning design targets) so the
    density estimate is stable, then fits ln(-ln f) against ln|x| over
    the deepest contiguous segment with f < 0.9 (the double logarithm
    needs f < 1).
    """
    t, A, dk = 800_000, 1000, 5
    params = rg.ModelParams(agents=A, r=0.75, seed=SEED)
    pool = rg.ensemble_run(params, t, [t], 400)[0]
    counts = pool.pooled
    regime = rg.scaling_regime(0.75)
    w = regime.width(t)
    n_agents = counts.sum()
    k_lo = int(np.flatnonzero(counts)[0])
    edges = np.arange(k_lo, t // A + 1, dk)
    mass = np.add.reduceat(counts[k_lo: t // A + 1].astype(float),
                           edges - k_lo)[: edges.size - 1]
    centers = 0.5 * (edges[:-1] + edges[1:] - 1)
    from rgrsim.analytics import ScaledDistribution

    sd = ScaledDistribution(
        x=(centers - t / A) / w, f=w * mass / (n_agents * dk),
        dx=np.full(centers.size, dk / w), t=t, A=A, n_agents=n_agents,
        regime=regime, binning=f"wing-rebin-{dk}")
    offenders = np.flatnonzero((sd.f >= 0.9) & (sd.x < 0))
    hi_idx = int(offenders[0]) if offenders.size else int(np.flatnonzero(sd.x < 0)[-1]) + 1
    deep = (np.arange(sd.x.size) < hi_idx) & (sd.f > 0)
    window = (float(sd.x[deep].min()), float(sd.x[deep].max()))
    return rg.stretched_exponential_fit(sd, window)


def test_criterion_01_early_time_pareto(warm_kernel):
    """t << A: the wealth distribution shows the infinite-population tail."""
    start = time.perf_counter()
    params = rg.ModelParams(agents=10_000_000, r=0.5, seed=1)
    _, state = rg.run(params, 100_000, return_state=True)
    samples = state.wealth[state.wealth > 0].astype(float)
    fit = rg.hill_tail_exponent(samples, tail_fraction=0.01)
    elapsed = time.perf_counter() - start
    ok = 2.8 <= fit.estimate <= 3.2 and elapsed < 10.0
    report(1, ok, f"Hill lambda = {fit.estimate:.3f} +- {fit.stderr:.3f} "
                  f"(target 3.0, band [2.8, 3.2]); runtime {elapsed:.1f}s < 10s")
    assert 2.8 <= fit.estimate <= 3.2
    assert elapsed < 10.0


def test_criterion_02_homogeneous_poisson_limit(warm_kernel):
    """r=0 single run vs Poisson(100) in total-variation distance.

    Expected to fail: the TV noise floor for 1000 agents is ~0.086
    (half-L1 between an n=1000 empirical histogram and its generating
    law), above the 0.05 tolerance; see the decisions ledger.
    """
    start = time.perf_counter()
    params = rg.ModelParams(agents=1000, r=0.0, seed=2)
    (hist,) = rg.run(params, 100_000, [100_000])
    k = np.arange(max(300, hist.counts.size))
    tv = rg.total_variation_distance(hist.counts, stats.poisson.pmf(k, 100.0))
    elapsed = time.perf_counter() - start
    ok = tv < 0.05 and elapsed < 1.0
    report(2, ok, f"TV(empirical, Poisson(100)) = {tv:.4f} (tolerance 0.05; "
                  f"single-run noise floor ~0.086); runtime {elapsed:.2f}s < 1s")
    assert elapsed < 1.0
    assert tv < 0.05


def test_criterion_03_gaussian_phase(warm_kernel):
    start = time.perf_counter()
    params = rg.ModelParams(agents=100, r=0.25, seed=5)
    (ens,) = rg.ensemble_run(params, 1_000_000, [1_000_000], 100)
    mean_error, variance_ratio = rg.gaussian_moment_test(
        ens.pooled_histogram(), 1_000_000, 100, 0.25)
    elapsed = time.perf_counter() - start
    ok = mean_error < 0.005 and 0.9 <= variance_ratio <= 1.1 and elapsed < 120
    report(3, ok, f"mean error = {mean_error:.2e} (< 0.5%), variance ratio = "
                  f"{variance_ratio:.4f} in [0.9, 1.1]; runtime {elapsed:.0f}s < 120s")
    assert mean_error < 0.005
    assert 0.9 <= variance_ratio <= 1.1
    assert elapsed < 120


def test_criterion_04_collapse_convergence(warm_kernel):
    start = time.perf_counter()
    params = rg.ModelParams(agents=1000, r=0.75, seed=SEED)
    ens = rg.ensemble_run(params, 800_000,
                          [100_000, 200_000, 400_000, 800_000], 20)
    regime = rg.scaling_regime(0.75)
    sds = [rg.collapse(e.pooled_histogram(), e.t, 1000, regime) for e in ens]
    d = [rg.collapse_distance(a, b) for a, b in zip(sds, sds[1:])]
    elapsed = time.perf_counter() - start
    ok = d[-1] < 0.02 and d[0] >= d[1] >= d[2] and elapsed < 300
    report(4, ok, f"successive collapse distances = "
                  f"{', '.join(f'{v:.5f}' for v in d)} (last < 0.02, nonincreasing); "
                  f"runtime {elapsed:.1f}s < 300s")
    assert d[-1] < 0.02
    assert d[0] >= d[1] >= d[2]
    assert elapsed < 300


def test_criterion_05_scaled_tail_exponent(r075_pool100):
    samples = r075_pool100.pooled_samples().astype(float)
    deviations = samples[samples > 800.0] - 800.0
    fit = rg.hill_tail_exponent(deviations, tail_fraction=0.005)
    target = 1 + 1 / 0.75
    ok = abs(fit.estimate - target) <= 0.2
    report(5, ok, f"Hill on positive-x tail: {fit.estimate:.3f} +- {fit.stderr:.3f} "
                  f"(target {target:.3f} +- 0.2; deepest fraction with >= 50 tail "
                  f"points, m = {fit.n_points})")
    assert abs(fit.estimate - target) <= 0.2


def test_criterion_06_stretched_exponential_wing(stretched_wing_fit):
    """Expected to fail: at any simulable depth the wing's double-log
    slope exceeds the limiting value by construction (it matches the
    parametric reference curve at equal depth instead; see ledger)."""
    fit = stretched_wing_fit
    target = 1 / (1 - 0.75)
    ok = abs(fit.estimate - target) <= 0.6
    report(6, ok, f"ln(-ln f) vs ln|x| slope = {fit.estimate:.2f} +- {fit.stderr:.2f} "
                  f"over x in [{fit.window[0]:.4f}, {fit.window[1]:.4f}] "
                  f"(target {target:.1f} +- 0.6; limiting slope is reached only at "
                  f"f ~ e^-30, far below simulable resolution)")
    assert abs(fit.estimate - target) <= 0.6


def test_criterion_07_width_exponent_transition(warm_kernel):
    grid = [10_000, 100_000, 1_000_000]
    results = {}
    for r in (0.25, 0.75):
        params = rg.ModelParams(agents=100, r=r, seed=3)
        ens = rg.ensemble_run(params, 1_000_000, grid, 10)
        pairs = [(e.t, rg.robust_width(e.pooled_histogram())) for e in ens]
        results[r] = rg.width_exponent_fit(pairs)
    ok = (abs(results[0.25].estimate - 0.5) <= 0.05
          and abs(results[0.75].estimate - 0.75) <= 0.05)
    report(7, ok, f"alpha(r=0.25) = {results[0.25].estimate:.3f} (target 0.50 +- 0.05), "
                  f"alpha(r=0.75) = {results[0.75].estimate:.3f} (target 0.75 +- 0.05)")
    assert abs(results[0.25].estimate - 0.5) <= 0.05
    assert abs(results[0.75].estimate - 0.75) <= 0.05


def test_criterion_08_critical_slowing_down(warm_kernel):
    """Expected to fail: the exact expected dynamics put the scaled peak
    above the Gaussian-limit value, decreasing toward it from above, so
    neither the monotone-increase nor the strictly-below clause can
    hold (see ledger); the creep toward the limit is logarithmic."""
    start = time.perf_counter()
    params = rg.ModelParams(agents=1000, r=0.5, seed=SEED)
    checkpoints = [10_000_000, 40_000_000, 160_000_000]
    ens = rg.ensemble_run(params, 160_000_000, checkpoints, 6)
    regime = rg.scaling_regime(0.5)
    peaks = [rg.peak_height(e.pooled_histogram(), e.t, 1000, regime) for e in ens]
    limit = np.sqrt(1000 / (2 * np.pi))
    elapsed = time.perf_counter() - start
    increasing = peaks[0] < peaks[1] < peaks[2]
    below = all(p < limit for p in peaks)
    ok = increasing and below and elapsed < 120
    report(8, ok, f"scaled peaks = {', '.join(f'{p:.2f}' for p in peaks)} vs Gaussian "
                  f"limit {limit:.2f} (want monotone increase, all strictly below); "
                  f"excess ratios {', '.join(f'{p/limit:.3f}' for p in peaks)}; "
                  f"runtime {elapsed:.0f}s < 120s")
    assert elapsed < 120
    assert increasing and below


def test_criterion_09_engine_cross_validation(warm_kernel):
    start = time.perf_counter()
    params = rg.ModelParams(agents=10, r=0.6, seed=0)
    replicas = 10_000
    (ens,) = rg.ensemble_run(params, 1000, [1000], replicas)
    (occ,) = rg.evolve_expected(params, 1000, k_max=1000)

    n = max(ens.mean.size, occ.counts.size)
    mean = np.zeros(n)
    mean[: ens.mean.size] = ens.mean
    se = np.zeros(n)
    se[: ens.stderr.size] = ens.stderr
    expected = np.zeros(n)
    expected[: occ.counts.size] = occ.counts
    pooled = np.zeros(n)
    pooled[: ens.pooled.size] = ens.pooled

    occupied = pooled > 0
    z = np.zeros(n)
    z[occupied & (se > 0)] = (np.abs(mean - expected) / np.where(se > 0, se, 1.0)
                              )[occupied & (se > 0)]
    max_z = z[occupied].max()

    strong = occupied & (expected * replicas >= 5) & (se > 0)
    chi2 = float((((mean[strong] - expected[strong]) / se[strong]) ** 2).sum())
    dof = int(strong.sum())
    p_value = float(stats.chi2.sf(chi2, dof))
    elapsed = time.perf_counter() - start
    ok = max_z <= 3.0 and p_value > 1e-3 and elapsed < 60
    report(9, ok, f"max |z| over {int(occupied.sum())} occupied bins = {max_z:.2f} "
                  f"(<= 3); chi2/dof = {chi2:.0f}/{dof}, p = {p_value:.3f} (> 1e-3); "
                  f"runtime {elapsed:.0f}s < 60s")
    assert max_z <= 3.0
    assert p_value > 1e-3
    assert elapsed < 60


def test_criterion_10_zero_wealth_decay(warm_kernel):
    params = rg.ModelParams(agents=1000, r=0.75, seed=11)
    checkpoints = list(range(500, 5001, 500))
    ens = rg.ensemble_run(params, 5000, checkpoints, 100)
    errors = []
    for e in ens:
        predicted = rg.zero_wealth_fraction(1000, 0.75, e.t)
        errors.append(abs(e.mean[0] / 1000 - predicted) / predicted)
    worst = max(errors)
    ok = worst < 0.02
    report(10, ok, f"max relative error of N0(t)/A vs exp(-0.25 t/1000) over "
                   f"t in [500, 5000]: {worst:.4f} (< 0.02)")
    assert worst < 0.02


def test_criterion_11_rate_equation_qualitativeness(r075_pool100, stretched_wing_fit):
    """The reference curve's asymptotic exponents vs the simulated fits.

    The Pareto side matches; the stretched side inherits criterion 6's
    depth problem (the curve's asymptotic slope is reached ~30 e-folds
    below simulable density), so this criterion is expected to fail on
    that clause.  Mid-range pointwise agreement is not asserted.
    """
    A, r = 1000, 0.75
    grid = rg.default_t_grid(A, r, num=2000, upper_factor=1e8)
    curve = rg.parametric_scaling_curve(A, r, grid)

    pos = curve.x > 0
    outer = pos & (curve.x >= curve.x[pos].max() / 10)
    curve_lambda = -np.polyfit(np.log(curve.x[outer]), curve.log_f[outer], 1)[0]

    neg = curve.x < 0
    deep = np.abs(curve.x[neg]).max()
    curve_beta = rg.StretchedExponentialFit(
        x_window=(-deep, -deep / 10)).fit(curve).estimate_

    samples = r075_pool100.pooled_samples().astype(float)
    sim_lambda = rg.hill_tail_exponent(
        samples[samples > 800.0] - 800.0, tail_fraction=0.005).estimate
    sim_beta = stretched_wing_fit.estimate

    pareto_ok = abs(curve_lambda - sim_lambda) <= 0.2
    stretched_ok = abs(curve_beta - sim_beta) <= 0.6
    ok = pareto_ok and stretched_ok
    report(11, ok, f"curve tail exponent {curve_lambda:.3f} vs simulated "
                   f"{sim_lambda:.3f} (|diff| <= 0.2: {pareto_ok}); curve stretched "
                   f"slope {curve_beta:.3f} vs simulated {sim_beta:.2f} "
                   f"(|diff| <= 0.6: {stretched_ok})")
    assert pareto_ok
    assert stretched_ok


def test_criterion_12_throughput(warm_kernel):
    params = rg.ModelParams(agents=1000, r=0.5, seed=0)
    rate = rg.measure_throughput(params, n_steps=20_000_000)
    ok = rate >= 1e7
    report(12, ok, f"{rate/1e6:.1f} M steps/s at A=1000 (>= 10 M steps/s)")
    assert rate >= 1e7
