"""Right-continuous step functions and their per-interval aggregates."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class StepSeries:
    """Change-points of a right-continuous step function.

    ``value_at(t)`` is the value of the last change-point at or before ``t``;
    before the first change-point the series is undefined (NaN).
    """

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=np.int64)
        values = np.asarray(self.values, dtype=float)
        if times.shape != values.shape or times.ndim != 1:
            raise ValueError("times and values must be 1-D and equally long")
        if len(times) > 1 and not np.all(np.diff(times) > 0):
            raise ValueError("change-point times must be strictly increasing")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_events(cls, times, values) -> "StepSeries":
        """Build from time-sorted events; the last event at a timestamp wins."""
        times = np.asarray(times, dtype=np.int64)
        values = np.asarray(values, dtype=float)
        if len(times) > 1 and np.any(np.diff(times) < 0):
            raise ValueError("events must be time-sorted")
        last = np.ones(len(times), dtype=bool)
        last[:-1] = times[1:] != times[:-1]
        return cls(times[last], values[last])

    def __len__(self):
        return len(self.times)

    def value_at(self, t) -> float:
        i = np.searchsorted(self.times, t, side="right") - 1
        return float(self.values[i]) if i >= 0 else float("nan")


def last_prevailing(s: StepSeries, t: int) -> float:
    return s.value_at(t)


def time_weighted_avg(s: StepSeries, interval) -> float:
    """Average of ``s`` over ``[t0, t1)``, over the part where it is defined."""
    t0, t1 = interval
    if t1 <= t0:
        raise ValueError("empty interval")
    pieces = IntervalPieces(s.times, s.values, np.array([t0, t1], dtype=np.int64))
    return float(pieces.mean()[0])


class IntervalPieces:
    """A step series cut at the grid edges into constant pieces.

    Every interval ``[edges[k], edges[k+1])`` owns a contiguous run of pieces
    starting at ``starts[k]``; a piece is ``[bounds[i], bounds[i+1])`` and
    carries the series value at ``bounds[i]``.  All per-interval aggregates
    (last value, time-weighted mean, range) reduce over these runs.
    """

    def __init__(self, times, values, edges: np.ndarray):
        times = np.asarray(times, dtype=np.int64)
        values = np.asarray(values, dtype=float)
        edges = np.asarray(edges, dtype=np.int64)
        inner = times[(times > edges[0]) & (times < edges[-1])]
        bounds = np.union1d(edges, inner)
        idx = np.searchsorted(times, bounds[:-1], side="right") - 1
        vals = np.full(len(idx), np.nan)
        ok = idx >= 0
        vals[ok] = values[idx[ok]]
        self.edges = edges
        self.values = vals
        self.lengths = np.diff(bounds).astype(float)
        self.starts = np.searchsorted(bounds, edges[:-1])
        self.ends = np.append(self.starts[1:], len(vals))
        self.interval = np.repeat(np.arange(len(edges) - 1), self.ends - self.starts)

    @property
    def n_intervals(self) -> int:
        return len(self.edges) - 1

    def map(self, func) -> "IntervalPieces":
        """Same pieces with ``func`` applied to the values."""
        out = object.__new__(IntervalPieces)
        out.__dict__.update(self.__dict__)
        with np.errstate(invalid="ignore", divide="ignore"):
            out.values = np.asarray(func(self.values), dtype=float)
        return out

    def last(self) -> np.ndarray:
        return self.values[self.ends - 1]

    def integral(self, undefined_as_zero=False) -> np.ndarray:
        vals = self.values
        if undefined_as_zero:
            vals = np.nan_to_num(vals, nan=0.0)
        defined = ~np.isnan(vals)
        return np.bincount(self.interval[defined], weights=(vals * self.lengths)[defined],
                           minlength=self.n_intervals)

    def defined_time(self) -> np.ndarray:
        defined = ~np.isnan(self.values)
        return np.bincount(self.interval[defined], weights=self.lengths[defined],
                           minlength=self.n_intervals)

    def mean(self) -> np.ndarray:
        """Time-weighted mean over the defined part of each interval."""
        den = self.defined_time()
        out = np.full(self.n_intervals, np.nan)
        pos = den > 0
        out[pos] = self.integral()[pos] / den[pos]
        # a constant interval averages to its value exactly
        hi, lo = self.max(), self.min()
        flat = pos & (hi == lo)
        out[flat] = hi[flat]
        return out

    def max(self) -> np.ndarray:
        return np.fmax.reduceat(self.values, self.starts)

    def min(self) -> np.ndarray:
        return np.fmin.reduceat(self.values, self.starts)
