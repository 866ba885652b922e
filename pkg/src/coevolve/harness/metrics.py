"""Scalar summaries of outer-loop runs."""

from __future__ import annotations

import numpy as np

from ..exceptions import EstimationFailedError


def fit_front_speed(times, C) -> float:
    """Least-squares slope of C(t) over the final half of the series."""
    times = np.asarray(times, dtype=float)
    C = np.asarray(C, dtype=float)
    if times.shape != C.shape or times.ndim != 1:
        raise ValueError("times and C must be 1-D arrays of equal length")
    start = times.size // 2
    t, c = times[start:], C[start:]
    if t.size < 2 or np.ptp(t) == 0:
        raise EstimationFailedError("need at least two distinct times in the final half")
    dt = t - t.mean()
    return float(dt @ (c - c.mean()) / (dt @ dt))


def sup_error(f, g) -> float:
    if not f.same_grid(g):
        raise ValueError("fields are defined on different grids")
    return float(np.max(np.abs(f.values - g.values)))


def mean_and_stderr(values):
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise EstimationFailedError("no values")
    if values.size == 1:
        return float(values[0]), float("nan")
    return float(values.mean()), float(values.std(ddof=1) / np.sqrt(values.size))
