import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from microclust.stepseries import IntervalPieces, StepSeries, last_prevailing, time_weighted_avg


def test_value_after_change():
    s = StepSeries.from_events([0, 7], [10, 11])
    assert last_prevailing(s, 9) == 11


def test_right_continuous_at_change():
    assert last_prevailing(StepSeries.from_events([0, 7], [10, 11]), 7) == 11


def test_before_first_point_missing():
    assert math.isnan(last_prevailing(StepSeries.from_events([5], [1.0]), 4))


def test_two_step_mean():
    assert time_weighted_avg(StepSeries.from_events([0, 5], [2, 4]), (0, 10)) == 3


def test_constant_mean():
    assert time_weighted_avg(StepSeries.from_events([-100], [7.25]), (0, 10)) == 7.25


def test_mean_over_defined_part_only():
    assert time_weighted_avg(StepSeries.from_events([5], [4.0]), (0, 10)) == 4.0


def test_undefined_interval_missing():
    assert math.isnan(time_weighted_avg(StepSeries.from_events([20], [1.0]), (0, 10)))


def test_empty_interval_rejected():
    with pytest.raises(ValueError):
        time_weighted_avg(StepSeries.from_events([0], [1.0]), (5, 5))


def test_same_timestamp_last_wins():
    s = StepSeries.from_events([0, 3, 3, 8], [1, 2, 5, 6])
    assert s.times.tolist() == [0, 3, 8]
    assert s.value_at(3) == 5


def test_unsorted_events_rejected():
    with pytest.raises(ValueError):
        StepSeries.from_events([3, 1], [1, 2])
    with pytest.raises(ValueError):
        StepSeries([1, 1], [1, 2])


def test_pieces_aggregates():
    s = StepSeries.from_events([0, 5, 12, 25], [1.0, 3.0, 2.0, 9.0])
    p = IntervalPieces(s.times, s.values, np.array([0, 10, 20, 30]))
    assert p.last().tolist() == [3.0, 2.0, 9.0]
    assert p.mean().tolist() == [2.0, (3 * 2 + 2 * 8) / 10, (2 * 5 + 9 * 5) / 10]
    assert p.max().tolist() == [3.0, 3.0, 9.0]
    assert p.min().tolist() == [1.0, 2.0, 2.0]
    assert p.integral().tolist() == [20.0, 22.0, 55.0]


steps = st.lists(st.tuples(st.integers(-50, 400), st.integers(-1000, 1000)), min_size=1,
                 max_size=30)


def riemann(events, t0, t1):
    """1-unit left-point sum over the defined part."""
    events = sorted(dict(events).items())
    total, n = 0.0, 0
    for t in range(t0, t1):
        prior = [v for u, v in events if u <= t]
        if prior:
            total += prior[-1]
            n += 1
    return total / n if n else float("nan")


@settings(max_examples=150, deadline=None)
@given(steps, st.integers(0, 200), st.integers(1, 200))
def test_mean_matches_riemann_oracle(events, t0, length):
    events = sorted(dict(events).items())
    s = StepSeries.from_events([e[0] for e in events], [e[1] for e in events])
    got = time_weighted_avg(s, (t0, t0 + length))
    want = riemann(events, t0, t0 + length)
    if math.isnan(want):
        assert math.isnan(got)
    else:
        assert got == pytest.approx(want, rel=1e-9, abs=1e-9)


@settings(max_examples=100, deadline=None)
@given(st.floats(-1e6, 1e6), st.integers(-100, 100), st.integers(0, 1000), st.integers(1, 1000))
def test_constant_series_mean_is_constant(c, t_first, t0, length):
    s = StepSeries.from_events([min(t_first, t0)], [c])
    assert time_weighted_avg(s, (t0, t0 + length)) == pytest.approx(c, rel=1e-12, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(steps, st.integers(-100, 500))
def test_value_at_is_last_change_at_or_before(events, t):
    events = sorted(dict(events).items())
    s = StepSeries.from_events([e[0] for e in events], [e[1] for e in events])
    prior = [v for u, v in events if u <= t]
    got = s.value_at(t)
    assert (math.isnan(got) and not prior) or got == prior[-1]
