import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rgrsim.fenwick import FenwickTree, build_tree


def brute_prefix(values, i):
    return int(np.sum(values[: i + 1]))


def brute_find(values, target):
    cum = 0
    for i, v in enumerate(values):
        cum += v
        if target < cum:
            return i
    raise AssertionError("target beyond total")


def test_known_small_tree():
    ft = FenwickTree([2, 1, 1])
    assert ft.total == 4
    assert [ft.prefix_sum(i) for i in range(3)] == [2, 3, 4]
    assert [ft.find(u) for u in range(4)] == [0, 0, 1, 2]


def test_zero_weight_entries_never_found():
    ft = FenwickTree([4, 0, 3])
    assert all(ft.find(u) != 1 for u in range(7))
    assert [ft.find(u) for u in (3, 4, 6)] == [0, 2, 2]
    only_tail = FenwickTree([0, 5])
    assert only_tail.find(0) == 1


def test_find_rejects_out_of_range_target():
    ft = FenwickTree([1, 2])
    with pytest.raises(ValueError):
        ft.find(3)
    with pytest.raises(ValueError):
        ft.find(-1)


def test_add_and_value_roundtrip():
    ft = FenwickTree.zeros(5)
    ft.add(2, 7)
    ft.add(4, 1)
    assert ft.value(2) == 7
    assert ft.value(3) == 0
    assert ft.values().tolist() == [0, 0, 7, 0, 1]
    with pytest.raises(IndexError):
        ft.add(5, 1)


@settings(max_examples=60, deadline=None)
@given(
    st.lists(st.integers(min_value=0, max_value=20), min_size=1, max_size=40),
    st.data(),
)
def test_matches_brute_force_under_updates(values, data):
    arr = np.array(values, dtype=np.int64)
    ft = FenwickTree(arr.copy())
    n_updates = data.draw(st.integers(min_value=0, max_value=10))
    for _ in range(n_updates):
        idx = data.draw(st.integers(min_value=0, max_value=len(arr) - 1))
        delta = data.draw(st.integers(min_value=0, max_value=5))
        arr[idx] += delta
        ft.add(idx, delta)
    assert ft.total == arr.sum()
    for i in range(len(arr)):
        assert ft.prefix_sum(i) == brute_prefix(arr, i)
    for target in range(int(arr.sum())):
        assert ft.find(target) == brute_find(arr, target)
    # incremental tree identical to a fresh build from the value array
    assert np.array_equal(ft.tree, build_tree(arr))
