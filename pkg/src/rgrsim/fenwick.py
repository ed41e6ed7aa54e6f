"""Fenwick (binary indexed) tree over integer weights.

Supports O(log n) point updates, prefix sums and inverse-prefix search,
which is what makes sampling an agent with probability proportional to
its wealth cheap even when the weights change every step.  The search
convention is half-open: ``find(u)`` returns the smallest index ``i``
with ``prefix_sum(i) > u``, i.e. index ``i`` owns the unit labels
``[prefix_sum(i-1), prefix_sum(i))``.
"""
from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def build_tree(values):
    """Build the 1-based tree array from a vector of weights in O(n)."""
    n = values.shape[0]
    tree = np.zeros(n + 1, np.int64)
    for i in range(1, n + 1):
        tree[i] += values[i - 1]
        j = i + (i & (-i))
        if j <= n:
            tree[j] += tree[i]
    return tree


@njit(cache=True)
def tree_add(tree, index, delta):
    """Add ``delta`` to the weight at 0-based ``index``."""
    n = tree.shape[0] - 1
    j = index + 1
    while j <= n:
        tree[j] += delta
        j += j & (-j)


@njit(cache=True)
def tree_prefix_sum(tree, index):
    """Inclusive prefix sum of weights[0..index] (0-based)."""
    s = 0
    j = index + 1
    while j > 0:
        s += tree[j]
        j -= j & (-j)
    return s


@njit(cache=True)
def tree_find(tree, search_mask, target):
    """Smallest 0-based index whose inclusive prefix sum exceeds ``target``.

    ``search_mask`` is the largest power of two <= n.  ``target`` must lie
    in [0, total); zero-weight entries own empty intervals and are never
    returned.
    """
    n = tree.shape[0] - 1
    idx = 0
    remaining = target
    half = search_mask
    while half > 0:
        nxt = idx + half
        if nxt <= n and tree[nxt] <= remaining:
            idx = nxt
            remaining -= tree[nxt]
        half >>= 1
    return idx


def search_mask_for(n: int) -> int:
    """Largest power of two <= n (descent start for tree_find)."""
    if n < 1:
        raise ValueError("tree size must be >= 1")
    return 1 << (int(n).bit_length() - 1)


class FenwickTree:
    """Convenience wrapper around the flat tree array.

    The simulation hot loop calls the module-level kernels directly on
    the raw array; this class exists for interactive use and for tests.
    """

    def __init__(self, values):
        values = np.ascontiguousarray(values, dtype=np.int64)
        if values.ndim != 1 or values.size == 0:
            raise ValueError("values must be a nonempty 1-D integer array")
        if np.any(values < 0):
            raise ValueError("weights must be nonnegative")
        self.size = int(values.size)
        self.tree = build_tree(values)
        self._mask = search_mask_for(self.size)

    @classmethod
    def zeros(cls, size: int) -> "FenwickTree":
        return cls(np.zeros(int(size), dtype=np.int64))

    @property
    def total(self) -> int:
        return int(tree_prefix_sum(self.tree, self.size - 1))

    def add(self, index: int, delta: int) -> None:
        if not 0 <= index < self.size:
            raise IndexError(f"index {index} out of range for size {self.size}")
        tree_add(self.tree, index, int(delta))

    def prefix_sum(self, index: int) -> int:
        if not 0 <= index < self.size:
            raise IndexError(f"index {index} out of range for size {self.size}")
        return int(tree_prefix_sum(self.tree, index))

    def value(self, index: int) -> int:
        if not 0 <= index < self.size:
            raise IndexError(f"index {index} out of range for size {self.size}")
        lower = tree_prefix_sum(self.tree, index - 1) if index > 0 else 0
        return int(tree_prefix_sum(self.tree, index) - lower)

    def find(self, target: int) -> int:
        if not 0 <= target < self.total:
            raise ValueError(f"target {target} outside [0, {self.total})")
        return int(tree_find(self.tree, self._mask, target))

    def values(self) -> np.ndarray:
        return np.diff(np.concatenate(([0], self.prefix_sums())))

    def prefix_sums(self) -> np.ndarray:
        out = np.empty(self.size, dtype=np.int64)
        for i in range(self.size):
            out[i] = tree_prefix_sum(self.tree, i)
        return out
