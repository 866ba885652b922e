"""Uniform-grid scalar fields and the group actions used to build frames.

A :class:`Field1D` is an immutable set of samples on a uniform grid.  Values
between nodes are defined by linear interpolation and values outside the
grid by the nearest boundary value, which is also the convention used by
the shift and rescale actions.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class Grid:
    """Geometry of a uniform 1-D grid (nodes include both end points)."""

    x_min: float
    x_max: float
    n_nodes: int

    def __post_init__(self):
        if not (np.isfinite(self.x_min) and np.isfinite(self.x_max)):
            raise ValueError("grid bounds must be finite")
        if self.x_max <= self.x_min:
            raise ValueError(f"x_max ({self.x_max}) must exceed x_min ({self.x_min})")
        if int(self.n_nodes) != self.n_nodes or self.n_nodes < 3:
            raise ValueError(f"need an integer n_nodes >= 3, got {self.n_nodes}")
        object.__setattr__(self, "n_nodes", int(self.n_nodes))

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.n_nodes)

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.n_nodes - 1)

    @property
    def length(self) -> float:
        return self.x_max - self.x_min


@dataclass(frozen=True, eq=False)
class Field1D:
    """Samples of a scalar profile on a uniform grid."""

    x_min: float
    x_max: float
    n_nodes: int
    values: np.ndarray

    def __post_init__(self):
        Grid(self.x_min, self.x_max, self.n_nodes)  # validates geometry
        values = np.array(self.values, dtype=float)
        if values.shape != (int(self.n_nodes),):
            raise ValueError(
                f"values has shape {values.shape}, expected ({self.n_nodes},)"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("field values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "n_nodes", int(self.n_nodes))

    @classmethod
    def on_grid(cls, grid: Grid, values) -> "Field1D":
        return cls(grid.x_min, grid.x_max, grid.n_nodes, values)

    @classmethod
    def from_function(
        cls, fn: Callable[[np.ndarray], np.ndarray], x_min: float, x_max: float, n_nodes: int
    ) -> "Field1D":
        grid = Grid(x_min, x_max, n_nodes)
        return cls.on_grid(grid, np.broadcast_to(fn(grid.x), (grid.n_nodes,)))

    @property
    def grid(self) -> Grid:
        return Grid(self.x_min, self.x_max, self.n_nodes)

    @property
    def x(self) -> np.ndarray:
        return self.grid.x

    @property
    def dx(self) -> float:
        return self.grid.dx

    def with_values(self, values) -> "Field1D":
        return Field1D(self.x_min, self.x_max, self.n_nodes, values)

    def same_grid(self, other: "Field1D") -> bool:
        return (
            self.n_nodes == other.n_nodes
            and np.isclose(self.x_min, other.x_min, rtol=0, atol=1e-12)
            and np.isclose(self.x_max, other.x_max, rtol=0, atol=1e-12)
        )

    def __call__(self, x) -> np.ndarray:
        """Evaluate the piecewise-linear interpolant (clamped outside the grid)."""
        return np.interp(x, self.x, self.values)

    def __repr__(self) -> str:
        return (
            f"Field1D([{self.x_min:g}, {self.x_max:g}], n={self.n_nodes}, "
            f"min={self.values.min():.4g}, max={self.values.max():.4g})"
        )


@dataclass(frozen=True, eq=False)
class FourierCoeffs:
    """Truncated trigonometric series a0/2 + sum a_k cos(2 pi k x/L) + b_k sin(2 pi k x/L).

    ``a`` holds a_0..a_K and ``b`` holds b_1..b_K.
    """

    a: np.ndarray
    b: np.ndarray
    L: float

    def __post_init__(self):
        a = np.array(self.a, dtype=float)
        b = np.array(self.b, dtype=float)
        if a.ndim != 1 or b.ndim != 1 or a.size != b.size + 1:
            raise ValueError("need K+1 cosine and K sine coefficients")
        if b.size < 1:
            raise ValueError("need K >= 1")
        if not self.L > 0:
            raise ValueError("period L must be positive")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise ValueError("coefficients must be finite")
        a.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "L", float(self.L))

    @property
    def K(self) -> int:
        return self.b.size

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.a, self.b])

    def with_vector(self, vec) -> "FourierCoeffs":
        vec = np.asarray(vec, dtype=float)
        return FourierCoeffs(vec[: self.K + 1], vec[self.K + 1 :], self.L)


def trapezoid(values: np.ndarray, dx: float) -> float:
    values = np.asarray(values, dtype=float)
    return float(dx * (values.sum() - 0.5 * (values[0] + values[-1])))


def integral(f: Field1D) -> float:
    """Trapezoid integral of ``f`` over its grid."""
    return trapezoid(f.values, f.dx)


def cumulative_integral(f: Field1D, x) -> np.ndarray:
    """Exact integral of the piecewise-linear interpolant from x_min to ``x``.

    ``x`` is clipped to the grid, so the result is restricted to the domain.
    """
    x = np.clip(np.asarray(x, dtype=float), f.x_min, f.x_max)
    v = f.values
    dx = f.dx
    nodes = np.concatenate([[0.0], np.cumsum(0.5 * dx * (v[1:] + v[:-1]))])
    k = np.minimum(((x - f.x_min) / dx).astype(int), f.n_nodes - 2)
    s = x - (f.x_min + k * dx)
    return nodes[k] + v[k] * s + (v[k + 1] - v[k]) * s * s / (2.0 * dx)


def segment_integral(f: Field1D, lo: float, hi: float) -> float:
    """Exact integral of the interpolant of ``f`` over [lo, hi] within the grid."""
    lo_hi = cumulative_integral(f, [lo, hi])
    return float(lo_hi[1] - lo_hi[0])


def shift_field(f: Field1D, C: float) -> Field1D:
    """Return g(x) = f(x + C) sampled on the grid of ``f``."""
    if not np.isfinite(C):
        raise ValueError(f"shift must be finite, got {C}")
    if C == 0:
        return f
    return f.with_values(f(f.x + C))


def rescale_field(f: Field1D, A: float, B: float) -> Field1D:
    """Return g(x) = B f(x / A) sampled on the grid of ``f``."""
    if not (np.isfinite(A) and A > 0):
        raise ValueError(f"space scale A must be positive, got {A}")
    if not (np.isfinite(B) and B > 0):
        raise ValueError(f"amplitude scale B must be positive, got {B}")
    if A == 1 and B == 1:
        return f
    return f.with_values(B * f(f.x / A))


def _check_same_grid(f: Field1D, g: Field1D):
    if not f.same_grid(g):
        raise ValueError("fields are defined on different grids")


def l2_error_squared(f: Field1D, g: Field1D) -> float:
    """Trapezoid approximation of the integral of (f - g)^2."""
    _check_same_grid(f, g)
    return trapezoid((f.values - g.values) ** 2, f.dx)


def l2_error(f: Field1D, g: Field1D) -> float:
    return float(np.sqrt(l2_error_squared(f, g)))


def _check_modes(n_nodes: int, K: int):
    if int(K) != K or K < 1:
        raise ValueError(f"K must be a positive integer, got {K}")
    # n_nodes - 1 samples per period; K must stay below their Nyquist index
    if 2 * K >= n_nodes - 1:
        raise ValueError(f"K={K} too large for {n_nodes} nodes")


def fourier_analyze(f_diff: Field1D, K: int) -> FourierCoeffs:
    """Coefficients of the truncated series with period equal to the domain length.

    Uses trapezoid weights, which coincide with periodic rectangle sums when the
    end samples agree; band-limited periodic data is recovered exactly.
    """
    _check_modes(f_diff.n_nodes, K)
    L = f_diff.grid.length
    x = f_diff.x
    w = np.full(f_diff.n_nodes, f_diff.dx)
    w[[0, -1]] *= 0.5
    wf = w * f_diff.values
    k = np.arange(K + 1)[:, None]
    phase = 2.0 * np.pi * k * x[None, :] / L
    a = (2.0 / L) * (np.cos(phase) @ wf)
    b = (2.0 / L) * (np.sin(phase[1:]) @ wf)
    return FourierCoeffs(a, b, L)


def fourier_synthesize(c: FourierCoeffs, grid: Grid | Field1D) -> Field1D:
    if isinstance(grid, Field1D):
        grid = grid.grid
    x = grid.x
    k = np.arange(1, c.K + 1)[:, None]
    phase = 2.0 * np.pi * k * x[None, :] / c.L
    values = 0.5 * c.a[0] + c.a[1:] @ np.cos(phase) + c.b @ np.sin(phase)
    return Field1D.on_grid(grid, values)


def rotate_coefficients(c: FourierCoeffs, C: float) -> FourierCoeffs:
    """Coefficients of x -> f(x + C), for f with coefficients ``c``."""
    theta = 2.0 * np.pi * C / c.L * np.arange(1, c.K + 1)
    cos, sin = np.cos(theta), np.sin(theta)
    a_hat = c.a.copy()
    a_hat[1:] = c.a[1:] * cos + c.b * sin
    b_hat = -c.a[1:] * sin + c.b * cos
    return FourierCoeffs(a_hat, b_hat, c.L)
