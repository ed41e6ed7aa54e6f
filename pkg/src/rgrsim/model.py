"""Exact stochastic simulation of the wealth-disbursement process.

One indivisible wealth unit is handed out per time step to one of ``A``
agents: with probability ``r`` the recipient is drawn proportionally to
current wealth (rich get richer), otherwise uniformly at random.  Total
wealth therefore always equals the number of elapsed steps.

The selection protocol per step is fixed and shared by every execution
path (single ``step`` calls and bulk ``run``):

1. draw ``u1 = rng.random()``; the preferential branch fires iff
   ``u1 < r`` and at least one unit has been disbursed already (at
   ``t == 0`` a preferential draw falls back to a uniform one);
2. draw ``u2 = rng.random()``; a uniform draw picks agent
   ``floor(u2 * A)``, a preferential draw picks the owner of unit label
   ``floor(u2 * t)`` under the agent-ordered unit labelling maintained
   by the Fenwick tree.

Because the protocol consumes exactly two doubles per step, a run of
``n`` steps is bitwise reproducible from ``(params, n)`` and extending a
run leaves its prefix unchanged.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .base import check_nonnegative_int, check_positive_int
from .fenwick import build_tree, search_mask_for
from .rng import derive_rng


class BootstrapPolicy(enum.Enum):
    """What a preferential draw does while total wealth is still zero."""

    UNIFORM_FALLBACK = "uniform_fallback"


@dataclass(frozen=True)
class ModelParams:
    """Immutable configuration of one disbursement process."""

    agents: int
    r: float
    seed: int = 0
    bootstrap_policy: BootstrapPolicy = BootstrapPolicy.UNIFORM_FALLBACK

    def __post_init__(self):
        object.__setattr__(self, "agents", check_positive_int(self.agents, "agents"))
        r = float(self.r)
        if not math.isfinite(r) or not 0.0 <= r <= 1.0:
            raise ValueError(f"r must lie in [0, 1], got {self.r!r}")
        object.__setattr__(self, "r", r)
        seed = int(self.seed)
        if seed < 0 or seed >= 2**64:
            raise ValueError(f"seed must be a 64-bit nonnegative integer, got {seed}")
        object.__setattr__(self, "seed", seed)
        if not isinstance(self.bootstrap_policy, BootstrapPolicy):
            raise ValueError(f"unknown bootstrap policy {self.bootstrap_policy!r}")


@dataclass
class WealthHistogram:
    """Occupancy counts ``counts[k]`` = number of agents holding k units."""

    t: int
    counts: np.ndarray

    def __post_init__(self):
        self.counts = np.asarray(self.counts)

    @property
    def agents(self) -> int:
        return int(self.counts.sum())

    def mean(self) -> float:
        k = np.arange(self.counts.size)
        return float((k * self.counts).sum() / self.counts.sum())

    def variance(self) -> float:
        k = np.arange(self.counts.size)
        total = self.counts.sum()
        mu = (k * self.counts).sum() / total
        return float(((k - mu) ** 2 * self.counts).sum() / total)

    def sparse_items(self):
        """Yield (k, count) for occupied wealth levels."""
        for k in np.flatnonzero(self.counts):
            yield int(k), self.counts[k]

    def samples(self) -> np.ndarray:
        """Expand counts back into one wealth value per agent."""
        counts = np.asarray(self.counts)
        if not np.issubdtype(counts.dtype, np.integer):
            raise TypeError("samples() requires integer counts")
        return np.repeat(np.arange(counts.size), counts)


@njit(cache=True)
def _advance(wealth, tree, search_mask, total, zero_count, r, n_steps, rng):
    """Advance the process n_steps in place; returns (total, zero_count, last agent)."""
    n = wealth.shape[0]
    t = total
    zeros = zero_count
    agent = -1
    for _ in range(n_steps):
        u_branch = rng.random()
        u_pick = rng.random()
        if u_branch < r and t > 0:
            target = int(u_pick * t)
            if target >= t:  # guard against floating rounding at u_pick ~ 1
                target = t - 1
            idx = 0
            remaining = target
            half = search_mask
            while half > 0:
                nxt = idx + half
                if nxt <= n and tree[nxt] <= remaining:
                    idx = nxt
                    remaining -= tree[nxt]
                half >>= 1
            agent = idx
        else:
            agent = int(u_pick * n)
            if agent >= n:
                agent = n - 1
        if wealth[agent] == 0:
            zeros -= 1
        wealth[agent] += 1
        j = agent + 1
        while j <= n:
            tree[j] += 1
            j += j & (-j)
        t += 1
    return t, zeros, agent


class WealthState:
    """Mutable state of one trajectory: per-agent wealth plus sampling tree.

    A state is owned by a single execution context; nothing here is safe
    for concurrent mutation.  Construction gives every agent zero wealth.
    """

    def __init__(self, params: ModelParams):
        if not isinstance(params, ModelParams):
            params = ModelParams(**params) if isinstance(params, dict) else ModelParams(*params)
        self.params = params
        self.wealth = np.zeros(params.agents, dtype=np.int64)
        self.total = 0
        self.zero_count = params.agents
        self._tree = build_tree(self.wealth)
        self._mask = search_mask_for(params.agents)

    # -- inspection ---------------------------------------------------

    def selection_probability(self, agent: int) -> float:
        """Probability that ``agent`` receives the next unit.

        Mixture of the uniform and the wealth-proportional rule; while no
        wealth exists yet the bootstrap makes every agent equally likely.
        """
        agent = int(agent)
        if not 0 <= agent < self.params.agents:
            raise IndexError(f"agent index {agent} out of range [0, {self.params.agents})")
        a, r = self.params.agents, self.params.r
        if self.total == 0:
            return 1.0 / a
        return (1.0 - r) / a + r * self.wealth[agent] / self.total

    def selection_probabilities(self) -> np.ndarray:
        a, r = self.params.agents, self.params.r
        if self.total == 0:
            return np.full(a, 1.0 / a)
        return (1.0 - r) / a + r * self.wealth / self.total

    def histogram(self) -> WealthHistogram:
        return WealthHistogram(t=self.total, counts=np.bincount(self.wealth))

    def prefix_tree_consistent(self) -> bool:
        """True iff the incrementally maintained tree matches the wealth array."""
        return bool(np.array_equal(self._tree, build_tree(self.wealth)))

    # -- evolution ----------------------------------------------------

    def step(self, rng: np.random.Generator) -> int:
        """Disburse one unit; returns the receiving agent's index."""
        self.total, self.zero_count, agent = _advance(
            self.wealth, self._tree, self._mask, self.total, self.zero_count,
            self.params.r, 1, rng,
        )
        return int(agent)

    def advance(self, n_steps: int, rng: np.random.Generator) -> None:
        """Disburse ``n_steps`` units using the shared per-step protocol."""
        n_steps = check_nonnegative_int(n_steps, "n_steps")
        if n_steps == 0:
            return
        self.total, self.zero_count, _ = _advance(
            self.wealth, self._tree, self._mask, self.total, self.zero_count,
            self.params.r, n_steps, rng,
        )


def new_state(params: ModelParams) -> WealthState:
    """Fresh all-zero state (alias for the WealthState constructor)."""
    return WealthState(params)


def _check_checkpoints(checkpoints, t_max: int) -> list[int]:
    cps = [check_nonnegative_int(c, "checkpoint") for c in checkpoints]
    if any(b < a for a, b in zip(cps, cps[1:])):
        raise ValueError(f"checkpoints must be sorted, got {cps}")
    if cps and (cps[0] < 0 or cps[-1] > t_max):
        raise ValueError(f"checkpoints must lie in [0, {t_max}], got {cps}")
    return cps


def run(params: ModelParams, t_max: int, checkpoints=(), *, return_state: bool = False):
    """Run one seeded trajectory for ``t_max`` steps.

    Returns the list of histograms recorded at the requested checkpoints
    (and the final state as a second value when ``return_state`` is set).
    Checkpoint placement does not perturb the trajectory: the per-step
    protocol consumes randomness identically however the run is sliced.
    """
    t_max = check_nonnegative_int(t_max, "t_max")
    cps = _check_checkpoints(checkpoints, t_max)
    rng = derive_rng(params.seed, replica=0)
    state = WealthState(params)
    out = []
    position = 0
    for cp in cps:
        state.advance(cp - position, rng)
        position = cp
        out.append(state.histogram())
    state.advance(t_max - position, rng)
    if return_state:
        return out, state
    return out


@dataclass
class EnsembleHistogram:
    """Per-checkpoint occupancy statistics over independent replicas."""

    t: int
    replicas: int
    mean: np.ndarray
    stderr: np.ndarray
    pooled: np.ndarray = field(repr=False)

    def pooled_samples(self) -> np.ndarray:
        return np.repeat(np.arange(self.pooled.size), self.pooled)

    def pooled_histogram(self) -> WealthHistogram:
        return WealthHistogram(t=self.t, counts=self.pooled)


def ensemble_run(params: ModelParams, t_max: int, checkpoints, replicas: int):
    """Independent replicas of ``run`` with deterministic per-replica streams.

    Replica ``i`` draws from the stream derived from ``(seed, i)``, and the
    aggregation below reduces replicas in index order, so the result does
    not depend on any execution schedule.  Returns one EnsembleHistogram
    per checkpoint with the per-k sample mean and standard error of the
    occupancy counts.
    """
    t_max = check_nonnegative_int(t_max, "t_max")
    replicas = check_positive_int(replicas, "replicas")
    cps = _check_checkpoints(checkpoints, t_max)

    sums = [np.zeros(1) for _ in cps]
    sq_sums = [np.zeros(1) for _ in cps]
    pooled = [np.zeros(1, dtype=np.int64) for _ in cps]

    def _grow(arr, size):
        if arr.size >= size:
            return arr
        out = np.zeros(size, dtype=arr.dtype)
        out[: arr.size] = arr
        return out

    for i in range(replicas):
        rng = derive_rng(params.seed, replica=i)
        state = WealthState(params)
        position = 0
        for j, cp in enumerate(cps):
            state.advance(cp - position, rng)
            position = cp
            counts = np.bincount(state.wealth)
            size = max(counts.size, sums[j].size)
            sums[j] = _grow(sums[j], size)
            sq_sums[j] = _grow(sq_sums[j], size)
            pooled[j] = _grow(pooled[j], size)
            sums[j][: counts.size] += counts
            sq_sums[j][: counts.size] += counts.astype(float) ** 2
            pooled[j][: counts.size] += counts
        state.advance(t_max - position, rng)

    out = []
    for j, cp in enumerate(cps):
        mean = sums[j] / replicas
        if replicas > 1:
            var = (sq_sums[j] - replicas * mean**2) / (replicas - 1)
            stderr = np.sqrt(np.maximum(var, 0.0) / replicas)
        else:
            stderr = np.full_like(mean, np.nan)
        out.append(
            EnsembleHistogram(
                t=cp, replicas=replicas, mean=mean, stderr=stderr, pooled=pooled[j]
            )
        )
    return out


def measure_throughput(params: ModelParams, n_steps: int = 5_000_000) -> float:
    """Steps per second of the advance kernel, excluding compilation."""
    import time

    warm = WealthState(params)
    warm.advance(10_000, derive_rng(params.seed, replica=0))
    state = WealthState(params)
    rng = derive_rng(params.seed, replica=0)
    start = time.perf_counter()
    state.advance(n_steps, rng)
    elapsed = time.perf_counter() - start
    return n_steps / elapsed
