"""Black-box estimation of a scale-invariance exponent from short bursts.

If an unknown evolution operator satisfies L(f(x/A)) = A^a L(f)(x/A), the
time derivative measured on a stretched test profile, read off at the
stretched positions, is A^a times the derivative measured on the original
profile.  The exponent follows from a one-parameter least-squares fit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import CubicSpline
from sklearn.base import BaseEstimator

from . import micro, pde
from .exceptions import DegenerateError, EstimationFailedError
from .field import Field1D, Grid


@dataclass(frozen=True)
class ExponentEstimate:
    a: float
    residual: float
    A_used: float
    dT: float
    test_function_id: str = ""


class RhsSimulator:
    """Exact derivative of a PDE: one Euler step of length dT."""

    def __init__(self, kind):
        self.kind = kind

    def __call__(self, phi0: Field1D, dT: float):
        return phi0, phi0.with_values(phi0.values + dT * pde.rhs(self.kind, phi0).values)


class PdeBurstSimulator:
    """Explicit Euler burst of a PDE with inner step ``dt``."""

    def __init__(self, kind, dt):
        self.kind = kind
        self.dt = dt

    def __call__(self, phi0, dT):
        return phi0, pde.advance(self.kind, phi0, self.dt, dT)


class WalkerBurstSimulator:
    """Lift a CDF onto P walkers, run them for dT and restrict back to a CDF.

    The returned start profile is the restriction of the lifted walkers, so
    the lifting error does not enter the derivative estimate.  With
    ``common_random_numbers`` every burst replays the same increment stream;
    the two bursts of one estimate then share their noise, which largely
    cancels in the fitted ratio.
    """

    def __init__(self, P=10**6, dt=1e-4, seed=None, common_random_numbers=True):
        self.P = P
        self.dt = dt
        self.seed_sequence = np.random.SeedSequence(seed)
        self.common_random_numbers = common_random_numbers
        self.rng = np.random.default_rng(self.seed_sequence)

    def _burst_rng(self):
        if self.common_random_numbers:
            return np.random.default_rng(self.seed_sequence)
        return self.rng

    def __call__(self, phi0, dT):
        s = micro.lift_from_cdf(phi0, self.P, t=0.0, rng=self._burst_rng())
        start = micro.cdf_restrict(s, phi0.grid)
        s = micro.walker_run(s, self.dt, pde.steps_for(dT, self.dt))
        return start, micro.cdf_restrict(s, phi0.grid)


def burst_derivative(sim, phi0: Field1D, dT: float) -> Field1D:
    """(phi1 - phi0) / dT from one burst of ``sim``."""
    if not dT > 0:
        raise ValueError("dT must be positive")
    start, end = sim(phi0, dT)
    return end.with_values((end.values - start.values) / dT)


def fit_scaling(g: np.ndarray, h: np.ndarray, A: float):
    """Closed-form minimizer of ||g - A^a h||^2 over a; returns (a, residual)."""
    if not A > 0:
        raise ValueError("A must be positive")
    if A == 1:
        raise DegenerateError("A = 1 leaves the residual independent of a")
    gh = float(np.dot(g, h))
    hh = float(np.dot(h, h))
    if hh == 0 or gh <= 0:
        raise EstimationFailedError("no positive scaling relates the two derivatives")
    c = gh / hh
    a = np.log(c) / np.log(A)
    return float(a), float(np.sum((g - c * h) ** 2))


def stretch(phi0: Field1D, A: float) -> Field1D:
    """phi0(x / A) on the grid of ``phi0``, edge values held outside.

    A cubic spline keeps the stretched profile smooth; linear interpolation
    puts kinks between nodes that a second difference turns into O(1) errors.
    """
    if not A > 0:
        raise ValueError("A must be positive")
    spline = CubicSpline(phi0.x, phi0.values)
    return phi0.with_values(spline(np.clip(phi0.x / A, phi0.x[0], phi0.x[-1])))


def estimate_exponent(sim, phi0: Field1D, A: float, dT: float, test_function_id: str = "") -> ExponentEstimate:
    """Exponent a with d/dt[phi0(x/A)] evaluated at A x equal to A^a d/dt[phi0](x)."""
    if not A > 0:
        raise ValueError("A must be positive")
    if A == 1:
        raise DegenerateError("A = 1 leaves the residual independent of a")
    h = burst_derivative(sim, phi0, dT)
    g_hat = burst_derivative(sim, stretch(phi0, A), dT)
    g = g_hat(A * phi0.x)
    a, residual = fit_scaling(g, h.values, A)
    return ExponentEstimate(a, residual, float(A), float(dT), test_function_id)


def beta_cdf_test_function(gamma: float, delta: float, grid: Grid) -> Field1D:
    """Regularized incomplete Beta I_z(gamma, delta) at z = x/20 + 1/2 (clamped to [0, 1])."""
    if not (gamma > 0 and delta > 0):
        raise ValueError("shape parameters must be positive")

    def density(z):
        return z ** (gamma - 1.0) * (1.0 - z) ** (delta - 1.0)

    total = quad(density, 0.0, 1.0, epsabs=0.0, epsrel=1e-13, limit=200)[0]
    z = np.clip(grid.x / 20.0 + 0.5, 0.0, 1.0)
    values = np.empty_like(z)
    for i, zi in enumerate(z):
        if zi <= 0.0:
            values[i] = 0.0
        elif zi >= 1.0:
            values[i] = 1.0
        else:
            values[i] = quad(density, 0.0, zi, epsabs=0.0, epsrel=1e-13, limit=200)[0] / total
    return Field1D.on_grid(grid, np.clip(values, 0.0, 1.0))


class ExponentEstimator(BaseEstimator):
    """Estimator wrapper: ``fit(phi0, sim=...)`` sets ``a_`` and ``residual_``."""

    def __init__(self, A=1.15, dT=0.01, test_function_id=""):
        self.A = A
        self.dT = dT
        self.test_function_id = test_function_id

    def fit(self, X, sim):
        est = estimate_exponent(sim, X, self.A, self.dT, self.test_function_id)
        self.estimate_ = est
        self.a_ = est.a
        self.residual_ = est.residual
        return self
