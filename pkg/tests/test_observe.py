import pytest
from hypothesis import given, strategies as st

from mcsched.observe import (EMPTY_WINDOW_LAXITY, LaxitySample, LaxityWindow, laxity,
                             slope, tick_slope, window_worst_laxity)


def test_laxity_values():
    assert laxity(100, 40) == 0.6
    assert laxity(100, 100) == 0.0
    assert laxity(100, 150) == -0.5
    with pytest.raises(ValueError):
        laxity(0, 1)


def test_window_bounds_are_half_open():
    items = [(10, 0.5, 1), (20, 0.2, 2), (30, 0.9, 3)]
    assert window_worst_laxity(items, 30, 10).worst_laxity == 0.9
    assert window_worst_laxity(items, 30, 11).worst_laxity == 0.2
    empty = window_worst_laxity([], 30, 10)
    assert empty.worst_laxity == EMPTY_WINDOW_LAXITY and empty.task is None
    with pytest.raises(ValueError):
        window_worst_laxity(items, 30, 0)


def test_slope():
    a, b = LaxitySample(0, 0.5), LaxitySample(10, 0.3)
    assert slope(a, b) == pytest.approx(-0.02)
    assert tick_slope(a, b, 10) == pytest.approx(-0.2)
    assert tick_slope(LaxitySample(0, 1.0), LaxitySample(10, -1.0), 10) == -1.0
    with pytest.raises(ValueError):
        slope(b, a)


@given(st.lists(st.tuples(st.integers(0, 5), st.floats(-2, 1)), max_size=40),
       st.integers(1, 30))
def test_sliding_window_matches_brute_force(steps, width):
    w = LaxityWindow(width)
    seen, now = [], 0
    for i, (dt, lax) in enumerate(steps):
        now += dt
        w.add(now, lax, i)
        seen.append((now, lax, i))
        got = w.sample(now)
        want = window_worst_laxity(seen, now, width)
        assert got.worst_laxity == want.worst_laxity
