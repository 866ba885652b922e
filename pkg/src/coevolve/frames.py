"""Template (pinning) conditions that select a co-evolving frame.

A frame is the triple (C, A, B) relating a physical profile u to its framed
version u_hat(y) = u(C + A y) / B.  Each template is a small estimator:
``fit`` learns its target constants from an initial condition, ``solve``
returns the frame of a new observation together with the framed profile,
and ``unframe`` inverts the map.

The step template is solved by root-finding its residual on the resampled
framed profile, so the returned ``u_hat`` satisfies it to root-finder
precision.  The CDF template is solved on the unframed CDF.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import brentq
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .exceptions import DegenerateError, NoSolutionError
from .field import (
    Field1D,
    FourierCoeffs,
    integral,
    rotate_coefficients,
    segment_integral,
    trapezoid,
)


@dataclass(frozen=True)
class FrameState:
    C: float = 0.0
    A: float = 1.0
    B: float = 1.0
    tau: float = 0.0

    def __post_init__(self):
        if not all(np.isfinite([self.C, self.A, self.B, self.tau])):
            raise ValueError("frame parameters must be finite")
        if not (self.A > 0 and self.B > 0):
            raise ValueError(f"scale factors must be positive (A={self.A}, B={self.B})")


def _sample(f: Field1D, x, fill: str):
    if fill == "clamp":
        return f(x)
    if fill == "zero":
        return np.interp(x, f.x, f.values, left=0.0, right=0.0)
    raise ValueError(f"fill must be 'clamp' or 'zero', got {fill!r}")


def to_frame(u: Field1D, C: float = 0.0, A: float = 1.0, B: float = 1.0, fill: str = "clamp") -> Field1D:
    """u_hat(y) = u(C + A y) / B on the grid of ``u``.

    ``fill`` sets u outside its grid: the nearest boundary value ("clamp")
    or zero ("zero", for densities that carry no mass outside the domain).
    """
    return u.with_values(_sample(u, C + A * u.x, fill) / B)


def from_frame(
    u_hat: Field1D, C: float = 0.0, A: float = 1.0, B: float = 1.0, fill: str = "clamp"
) -> Field1D:
    """u(x) = B u_hat((x - C) / A) on the grid of ``u_hat``."""
    return u_hat.with_values(B * _sample(u_hat, (u_hat.x - C) / A, fill))


# root bracketing


def _find_bracket(fun, x0, step, lo, hi, *, geometric):
    """Walk outward from x0 until ``fun`` changes sign; return (a, b, fa, fb)."""
    f0 = fun(x0)
    if f0 == 0:
        return x0, x0, f0, f0
    left = right = x0
    f_left = f_right = f0
    k = 0
    while True:
        moved = False
        k += 1
        if geometric:
            cand_r, cand_l = min(x0 * step**k, hi), max(x0 / step**k, lo)
        else:
            cand_r, cand_l = min(x0 + step * k, hi), max(x0 - step * k, lo)
        if cand_r > right:
            fr = fun(cand_r)
            if np.sign(fr) != np.sign(f_right):
                return right, cand_r, f_right, fr
            right, f_right, moved = cand_r, fr, True
        if cand_l < left:
            fl = fun(cand_l)
            if np.sign(fl) != np.sign(f_left):
                return cand_l, left, fl, f_left
            left, f_left, moved = cand_l, fl, True
        if not moved:
            raise NoSolutionError(f"no sign change of the template residual in [{lo:g}, {hi:g}]")


def _root(fun, x0, step, lo, hi, *, geometric, xtol):
    a, b, fa, fb = _find_bracket(fun, x0, step, lo, hi, geometric=geometric)
    if a == b:
        return a
    if fa == 0:
        return a
    if fb == 0:
        return b
    return brentq(fun, a, b, xtol=xtol, rtol=4 * np.finfo(float).eps, maxiter=500)


# functional solvers


def solve_integral_shift(u: Field1D, target: float, previous: float = 0.0):
    """Shift C with the integral of u(x + C) over the grid equal to ``target``."""
    L = u.grid.length

    def residual(C):
        return trapezoid(u(u.x + C), u.dx) - target

    C = _root(residual, previous, u.dx, previous - L, previous + L, geometric=False, xtol=1e-13)
    scale = max(abs(target), 1.0)
    if abs(residual(C)) > 1e-10 * scale:
        raise NoSolutionError("integral shift template did not converge")
    return C, to_frame(u, C=C)


def fourier_phase_shift(c: FourierCoeffs, previous: float | None = None):
    """Shift that rotates the first mode onto a pure cosine, and the rotated coefficients.

    The phase is unwrapped against ``previous`` (the shift at the last report).
    """
    a1, b1 = c.a[1], c.b[0]
    if a1 == 0 and b1 == 0:
        raise DegenerateError("first Fourier mode vanishes; phase template undefined")
    C = np.arctan2(b1, a1) * c.L / (2.0 * np.pi)
    if previous is not None:
        C += c.L * np.round((previous - C) / c.L)
    return float(C), rotate_coefficients(c, C)


def _mass_step_residual(u: Field1D, A: float) -> float:
    v = to_frame(u, A=A, fill="zero")
    return 2.0 * segment_integral(v, -0.5, 0.5) - integral(v)


def solve_scale_pair(u: Field1D, mu: float, previous_A: float = 1.0):
    """Scale factors from the step template (equal mass inside and outside |y| <= 1/2)
    and the mass template (integral of u_hat equal to ``mu``).
    """
    if not mu > 0:
        raise ValueError("target mass mu must be positive")
    # projected fields may undershoot slightly; only the total mass must be positive
    if not integral(u) > 0:
        raise ValueError("scale-pair template needs a profile with positive mass")
    A = _root(
        lambda A: _mass_step_residual(u, A),
        previous_A,
        1.25,
        1e-3 * previous_A,
        1e3 * previous_A,
        geometric=True,
        xtol=1e-14,
    )
    v = to_frame(u, A=A, fill="zero")
    B = integral(v) / mu
    return A, B, v.with_values(v.values / B)


def _cdf_window(f: Field1D, zeta1: float, zeta2: float) -> float:
    return float(f(zeta2) - f(zeta1))


def solve_cdf_scale(f: Field1D, zeta1: float, zeta2: float, nu: float, previous_A: float = 1.0):
    """Scale A with f(A zeta2) - f(A zeta1) = nu.

    The window is read off ``f`` itself at the stretched positions; going
    through the resampled f_hat would add interpolation error whenever a
    zeta is not a grid node.
    """
    if not zeta1 < zeta2:
        raise ValueError("need zeta1 < zeta2")
    if not nu > 0:
        raise ValueError("nu must be positive")
    if np.any(np.diff(f.values) < -1e-12):
        raise ValueError("CDF must be non-decreasing")

    def residual(A):
        return _cdf_window(f, A * zeta1, A * zeta2) - nu

    A = _root(residual, previous_A, 1.25, 1e-3 * previous_A, 1e3 * previous_A, geometric=True, xtol=1e-14)
    return A, to_frame(f, A=A)


def general_moments(u: Field1D):
    """(mass, centroid, second central moment / mass) by trapezoid quadrature."""
    x = u.x
    m0 = integral(u)
    if not m0 > 0:
        raise ValueError("profile must have positive mass")
    C = trapezoid(x * u.values, u.dx) / m0
    var = trapezoid((x - C) ** 2 * u.values, u.dx) / m0
    return m0, C, var


def solve_general_triple(u: Field1D, K: float, mu: float):
    """Centroid shift, second-moment scale and mass amplitude (all linear templates)."""
    if not (K > 0 and mu > 0):
        raise ValueError("K and mu must be positive")
    m0, C, var = general_moments(u)
    if var < 0:
        raise RuntimeError("negative second moment")
    A = np.sqrt(var / K)
    B = m0 / (A * mu)
    return C, A, B, to_frame(u, C=C, A=A, B=B, fill="zero")


# template estimators


class FrameTemplate(TransformerMixin, BaseEstimator):
    """Base class: ``solve`` returns (FrameState, framed observation)."""

    def fit(self, X, y=None):
        self.fitted_ = True
        return self

    def solve(self, X, previous: FrameState | None = None):
        raise NotImplementedError

    def transform(self, X):
        check_is_fitted(self)
        return self.solve(X)[1]

    fill = "clamp"

    def unframe(self, X_hat, frame: FrameState):
        return from_frame(X_hat, frame.C, frame.A, frame.B, fill=self.fill)

    inverse_transform = unframe

    def residuals(self, X_hat) -> np.ndarray:
        """Template residuals of a framed observation (zero when satisfied)."""
        raise NotImplementedError


class IdentityFrame(FrameTemplate):
    """The stationary laboratory frame."""

    def solve(self, X, previous=None):
        return FrameState(), X

    def unframe(self, X_hat, frame):
        return X_hat

    def residuals(self, X_hat):
        return np.zeros(0)


class IntegralShiftTemplate(FrameTemplate):
    """Shift keeping the integral of the shifted profile at its initial value."""

    def __init__(self, target=None):
        self.target = target

    def fit(self, X, y=None):
        self.target_ = integral(X) if self.target is None else float(self.target)
        return self

    def solve(self, X, previous=None):
        check_is_fitted(self)
        C0 = 0.0 if previous is None else previous.C
        C, u_hat = solve_integral_shift(X, self.target_, previous=C0)
        return FrameState(C=C), u_hat

    def residuals(self, X_hat):
        check_is_fitted(self)
        return np.array([integral(X_hat) - self.target_])


class FourierPhaseTemplate(FrameTemplate):
    """Shift placing the first Fourier mode of the difference distribution in phase."""

    def solve(self, X, previous=None):
        check_is_fitted(self)
        C, c_hat = fourier_phase_shift(X, None if previous is None else previous.C)
        return FrameState(C=C), c_hat

    def unframe(self, X_hat, frame):
        return rotate_coefficients(X_hat, -frame.C)

    def repair(self, X_hat: FourierCoeffs, frame: FrameState) -> FourierCoeffs:
        """Restore the phase template after a projection.

        b_hat_1 is recomputed from tan(2 pi C / L) = b_1 / a_1 using the projected
        shift and the projected unshifted a_1; in the rotated frame this is
        b_hat_1 = 0.
        """
        b = X_hat.b.copy()
        b[0] = 0.0
        return FourierCoeffs(X_hat.a, b, X_hat.L)

    def residuals(self, X_hat):
        return np.array([X_hat.b[0]])


class MassStepTemplate(FrameTemplate):
    """(A, B) from the +-1 step template and a fixed rescaled mass ``mu``."""

    fill = "zero"

    def __init__(self, mu=None):
        self.mu = mu

    def fit(self, X, y=None):
        if self.mu is not None:
            self.mu_ = float(self.mu)
        else:
            self.mu_ = integral(X)
        return self

    def solve(self, X, previous=None):
        check_is_fitted(self)
        A0 = 1.0 if previous is None else previous.A
        A, B, u_hat = solve_scale_pair(X, self.mu_, previous_A=A0)
        return FrameState(A=A, B=B), u_hat

    def residuals(self, X_hat):
        check_is_fitted(self)
        step = 2.0 * segment_integral(X_hat, -0.5, 0.5) - integral(X_hat)
        return np.array([step, integral(X_hat) - self.mu_])


class CdfFractionTemplate(FrameTemplate):
    """A keeping the CDF mass in [zeta1, zeta2] of the rescaled CDF equal to ``nu``."""

    def __init__(self, zeta1=-0.25, zeta2=0.5, nu=None):
        self.zeta1 = zeta1
        self.zeta2 = zeta2
        self.nu = nu

    def fit(self, X, y=None):
        if self.nu is not None:
            self.nu_ = float(self.nu)
        else:
            self.nu_ = _cdf_window(X, self.zeta1, self.zeta2)
        return self

    def solve(self, X, previous=None):
        check_is_fitted(self)
        A0 = 1.0 if previous is None else previous.A
        A, f_hat = solve_cdf_scale(X, self.zeta1, self.zeta2, self.nu_, previous_A=A0)
        return FrameState(A=A), f_hat

    def residuals(self, X_hat):
        check_is_fitted(self)
        return np.array([_cdf_window(X_hat, self.zeta1, self.zeta2) - self.nu_])


class CentroidMomentMassTemplate(FrameTemplate):
    """(C, A, B) from the centroid, the second moment ``K`` and the mass ``mu``."""

    fill = "zero"

    def __init__(self, K=None, mu=None):
        self.K = K
        self.mu = mu

    def fit(self, X, y=None):
        m0, _, var = general_moments(X)
        self.K_ = var if self.K is None else float(self.K)
        self.mu_ = m0 if self.mu is None else float(self.mu)
        return self

    def solve(self, X, previous=None):
        check_is_fitted(self)
        C, A, B, u_hat = solve_general_triple(X, self.K_, self.mu_)
        return FrameState(C=C, A=A, B=B), u_hat

    def residuals(self, X_hat):
        check_is_fitted(self)
        m0, C, var = general_moments(X_hat)
        return np.array([C, var - self.K_, m0 - self.mu_])


def with_tau(frame: FrameState, tau: float) -> FrameState:
    return replace(frame, tau=tau)
