"""Argument checks shared by the estimators, the pipeline and the CLI."""
from __future__ import annotations

import numbers

import numpy as np

from .distance import DistanceMatrix


def check_distance_matrix(D, *, allow_nan: bool = False, atol: float = 1e-12) -> np.ndarray:
    """Return ``D`` as a float array after checking it is a distance matrix.

    Square, symmetric, zero diagonal, entries in [0, 1].  With ``allow_nan``
    undefined entries may appear off the diagonal.
    """
    d = D.d if isinstance(D, DistanceMatrix) else np.asarray(D, dtype=float)
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise ValueError(f"distance matrix must be square, got shape {d.shape}")
    if d.shape[0] == 0:
        raise ValueError("distance matrix is empty")
    nan = np.isnan(d)
    if nan.any() and not allow_nan:
        raise ValueError("distance matrix has undefined entries")
    if nan[np.diag_indices_from(d)].any() or np.abs(np.diag(d)).max() > atol:
        raise ValueError("distance matrix must have a zero diagonal")
    if not np.array_equal(nan, nan.T):
        raise ValueError("distance matrix must be symmetric")
    both = ~nan
    if np.abs(d[both] - d.T[both]).max(initial=0.0) > atol:
        raise ValueError("distance matrix must be symmetric")
    if (d[both] < -atol).any() or (d[both] > 1 + atol).any():
        raise ValueError("correlation distances must lie in [0, 1]")
    return d


def check_cut_height(h) -> float:
    if isinstance(h, bool) or not isinstance(h, numbers.Real) or not np.isfinite(h):
        raise ValueError(f"cut height must be a real number, got {h!r}")
    # heights never exceed 1; a larger cut simply keeps the root cluster
    if h < 0:
        raise ValueError(f"cut height must be non-negative, got {h}")
    return float(h)


def check_positive_int(value, name: str) -> int:
    if isinstance(value, bool) or not isinstance(value, numbers.Integral) or value <= 0:
        raise ValueError(f"{name} must be a positive integer, got {value!r}")
    return int(value)


def check_fraction(value, name: str) -> float:
    if isinstance(value, bool) or not isinstance(value, numbers.Real) or not 0 <= value <= 1:
        raise ValueError(f"{name} must be in [0, 1], got {value!r}")
    return float(value)


def check_interval(interval_secs, session) -> int:
    """Interval length in ns; it must divide the session evenly."""
    if isinstance(interval_secs, bool) or not isinstance(interval_secs, numbers.Real) \
            or not interval_secs > 0:
        raise ValueError(f"interval length must be positive, got {interval_secs!r}")
    ns = round(interval_secs * 1e9)
    if abs(ns - interval_secs * 1e9) > 0.5:
        raise ValueError("interval length must be a whole number of nanoseconds")
    open_ns, close_ns = session
    if close_ns <= open_ns:
        raise ValueError("session open must precede close")
    if (close_ns - open_ns) % ns:
        raise ValueError(f"interval of {interval_secs}s does not divide the session evenly")
    return int(ns)


def check_panel_array(X, *, min_rows: int = 2) -> np.ndarray:
    """2-D float array with at least ``min_rows`` rows; NaN and inf allowed as missing."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError(f"expected a 2-D (intervals, measures) array, got {X.ndim}-D")
    if X.shape[0] < min_rows or X.shape[1] < 1:
        raise ValueError(f"panel too small: shape {X.shape}")
    return np.where(np.isinf(X), np.nan, X)
