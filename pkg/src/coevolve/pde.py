"""Deterministic inner integrators for the model PDEs.

Central differences with mirrored ghost nodes (zero flux) and explicit Euler
stepping.  The same compiled kernel evaluates :func:`rhs` and drives
:func:`euler_integrate`, so a direct run and the inner bursts of a projective
run follow exactly the same arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from .exceptions import ConfigurationError
from .field import Field1D, Grid

_NAGUMO, _DIFFUSION, _BURGERS = 0, 1, 2


@dataclass(frozen=True)
class ScaleExponents:
    """Exponents (a, b) with L(B f(x/A)) = A^a B^b L(f)(x/A)."""

    a: float
    b: float


@dataclass(frozen=True)
class Nagumo:
    """u_t = D u_xx + u (1 - u)(u - alpha)."""

    alpha: float = 0.01
    D: float = 1.0

    def __post_init__(self):
        if not 0 < self.alpha < 0.5:
            raise ValueError(f"alpha must lie in (0, 1/2), got {self.alpha}")
        if not self.D > 0:
            raise ValueError("D must be positive")

    @property
    def wave_speed(self) -> float:
        """Speed of the exact front (negative: the u = 1 state invades)."""
        return -np.sqrt(2.0 * self.D) * (0.5 - self.alpha)

    def _code(self):
        return _NAGUMO, self.D, self.alpha


@dataclass(frozen=True)
class Diffusion:
    """u_t = D u_xx."""

    D: float = 1.0

    def __post_init__(self):
        if not self.D > 0:
            raise ValueError("D must be positive")

    @property
    def exponents(self) -> ScaleExponents:
        return ScaleExponents(a=-2.0, b=1.0)

    def _code(self):
        return _DIFFUSION, self.D, 0.0


@dataclass(frozen=True)
class BurgersVariant:
    """u_t = kappa (1 + u^2) u_xx + u u_x."""

    kappa: float = 0.025

    def __post_init__(self):
        if not self.kappa > 0:
            raise ValueError("kappa must be positive")

    def _code(self):
        return _BURGERS, self.kappa, 0.0


PdeKind = Nagumo | Diffusion | BurgersVariant


@numba.njit(cache=True)
def _rhs_into(code, p1, p2, u, dx, out):
    n = u.shape[0]
    inv_dx2 = 1.0 / (dx * dx)
    inv_2dx = 0.5 / dx
    for i in range(n):
        ul = u[i - 1] if i > 0 else u[1]
        ur = u[i + 1] if i < n - 1 else u[n - 2]
        ui = u[i]
        uxx = (ul - 2.0 * ui + ur) * inv_dx2
        if code == 0:
            out[i] = p1 * uxx + ui * (1.0 - ui) * (ui - p2)
        elif code == 1:
            out[i] = p1 * uxx
        else:
            ux = (ur - ul) * inv_2dx
            out[i] = p1 * (1.0 + ui * ui) * uxx + ui * ux


@numba.njit(cache=True)
def _euler_kernel(code, p1, p2, u, dx, dt, n_steps):
    buf = np.empty_like(u)
    for _ in range(n_steps):
        _rhs_into(code, p1, p2, u, dx, buf)
        for i in range(u.shape[0]):
            u[i] += dt * buf[i]
    return u


def _central_gradient(v: np.ndarray, dx: float) -> np.ndarray:
    g = np.zeros_like(v)
    g[1:-1] = (v[2:] - v[:-2]) / (2.0 * dx)
    return g


def rhs(kind: PdeKind, u: Field1D) -> Field1D:
    code, p1, p2 = kind._code()
    out = np.empty(u.n_nodes)
    _rhs_into(code, p1, p2, np.ascontiguousarray(u.values), u.dx, out)
    return u.with_values(out)


def renormalized_rhs(kind: PdeKind, u_hat: Field1D, xi_A: float, xi_B: float) -> Field1D:
    """Right-hand side in the dynamically renormalized frame.

    L(u_hat) - xi_B u_hat + xi_A y u_hat_y, with y the grid coordinate.
    """
    base = rhs(kind, u_hat).values
    y = u_hat.x
    uy = _central_gradient(u_hat.values, u_hat.dx)
    return u_hat.with_values(base - xi_B * u_hat.values + xi_A * y * uy)


def stable_step_limit(kind: PdeKind, u: Field1D) -> float:
    """Largest dt allowed by 2 * diffusivity * dt < dx^2."""
    if isinstance(kind, BurgersVariant):
        diffusivity = kind.kappa * (1.0 + float(np.max(u.values**2)))
    else:
        diffusivity = kind.D
    return u.dx**2 / (2.0 * diffusivity)


def check_stability(kind: PdeKind, u: Field1D, dt: float):
    if not dt > 0:
        raise ConfigurationError(f"time step must be positive, got {dt}")
    limit = stable_step_limit(kind, u)
    if not dt < limit:
        raise ConfigurationError(
            f"explicit Euler stability criterion 2*D*dt < dx^2 violated: "
            f"dt={dt:g} >= {limit:g} for dx={u.dx:g}"
        )


def steps_for(duration: float, dt: float) -> int:
    """Number of steps of size ``dt`` nearest to ``duration``."""
    if duration < 0:
        raise ValueError(f"duration must be non-negative, got {duration}")
    return int(round(duration / dt))


@dataclass(frozen=True)
class Trajectory:
    times: tuple[float, ...]
    fields: tuple[Field1D, ...]

    def __len__(self):
        return len(self.times)

    def at(self, t: float, atol: float = 1e-9) -> Field1D:
        for ti, f in zip(self.times, self.fields):
            if abs(ti - t) <= atol:
                return f
        raise KeyError(f"no report at t={t}")


def euler_integrate(
    kind: PdeKind,
    u0: Field1D,
    dt: float,
    n_steps: int,
    report_times=None,
    t0: float = 0.0,
) -> Trajectory:
    """Explicit Euler integration with reports at the requested times.

    Report times snap to the nearest multiple of ``dt`` from ``t0``; times
    past ``n_steps`` are dropped.  Without ``report_times`` only the final
    state is reported.
    """
    if n_steps < 0:
        raise ValueError("n_steps must be non-negative")
    check_stability(kind, u0, dt)
    code, p1, p2 = kind._code()
    if report_times is None:
        marks = [n_steps]
    else:
        marks = sorted({steps_for(t - t0, dt) for t in report_times if t >= t0})
        marks = [m for m in marks if m <= n_steps]
    u = np.array(u0.values, dtype=float)
    times, fields = [], []
    done = 0
    for m in marks:
        if m > done:
            _euler_kernel(code, p1, p2, u, u0.dx, dt, m - done)
            done = m
        times.append(t0 + m * dt)
        fields.append(u0.with_values(u.copy()))
    return Trajectory(tuple(times), tuple(fields))


def advance(kind: PdeKind, u: Field1D, dt: float, duration: float) -> Field1D:
    """Integrate ``u`` forward by ``duration`` (rounded to whole steps)."""
    return euler_integrate(kind, u, dt, steps_for(duration, dt)).fields[-1]


# initial conditions and closed-form profiles


def nagumo_ramp(grid: Grid) -> Field1D:
    """0 for x <= 0, x/10 on (0, 10], 1 beyond."""
    x = grid.x
    return Field1D.on_grid(grid, np.clip(x / 10.0, 0.0, 1.0))


def nagumo_wave(x, shift: float = 0.0, D: float = 1.0) -> np.ndarray:
    """Exact Nagumo front profile 1 / (1 + exp(-(x - shift) / sqrt(2 D)))."""
    return 1.0 / (1.0 + np.exp(-(np.asarray(x) - shift) / np.sqrt(2.0 * D)))


def box(grid: Grid, half_width: float = 1.0, height: float = 1.0) -> Field1D:
    x = grid.x
    return Field1D.on_grid(grid, np.where(np.abs(x) <= half_width + 1e-12, height, 0.0))


def gaussian(grid: Grid, center: float = 0.0, width: float = 1.0, height: float = 1.0) -> Field1D:
    """height * exp(-((x - center) / width)^2)."""
    x = grid.x
    return Field1D.on_grid(grid, height * np.exp(-(((x - center) / width) ** 2)))


def heat_kernel(grid: Grid, t: float, D: float = 1.0, mass: float = 1.0) -> Field1D:
    x = grid.x
    return Field1D.on_grid(
        grid, mass * np.exp(-(x**2) / (4.0 * D * t)) / np.sqrt(4.0 * np.pi * D * t)
    )
