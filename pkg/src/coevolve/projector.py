"""Projective outer loops in fixed, co-traveling, renormalized and asymptotic frames.

One outer step runs the inner simulator through a few report times, solves
the frame template at each report, extrapolates the framed observable and
the frame parameters to ``t_project`` and lifts the reconstructed
observable back to an inner state.

Modes
-----
fixed
    Linear extrapolation of the raw observable in t.
cotraveling
    Framed observable and shift C extrapolated linearly in t.
renormalized
    Framed observable extrapolated linearly in the rescaled time tau with
    d tau / dt = A^a B^(b-1); log A and log B extrapolated linearly in tau.
asymptotic
    Three reports; tau from t = t_c + beta exp(tau) with beta solved from
    the A sequence.  Falls back to linear-in-t projection of everything
    while the data are not consistent with exponential-in-tau scales.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field as dc_field
from typing import Any

import numpy as np
from scipy.optimize import brentq
from sklearn.base import BaseEstimator, clone
from sklearn.utils.validation import check_is_fitted

from . import micro, pde
from .exceptions import ConfigurationError, DegenerateError, NoSolutionError
from .field import Field1D, FourierCoeffs, Grid, fourier_analyze
from .frames import (
    FourierPhaseTemplate,
    FrameState,
    FrameTemplate,
    IdentityFrame,
)

log = logging.getLogger(__name__)

MODES = ("fixed", "cotraveling", "renormalized", "asymptotic")
DEGENERATE_G = 1e-8
FIT_RESIDUAL_LIMIT = 0.1


# observables as flat vectors


def _to_vec(obs) -> np.ndarray:
    if isinstance(obs, Field1D):
        return np.asarray(obs.values)
    if isinstance(obs, FourierCoeffs):
        return obs.to_vector()
    return np.atleast_1d(np.asarray(obs, dtype=float))


def _from_vec(like, vec):
    if isinstance(like, Field1D):
        return like.with_values(vec)
    if isinstance(like, FourierCoeffs):
        return like.with_vector(vec)
    if np.ndim(like) == 0:
        return float(vec[0])
    return np.asarray(vec).reshape(np.shape(like))


def _check_compatible(m1, m2):
    if type(m1) is not type(m2) and not (np.isscalar(m1) and np.isscalar(m2)):
        raise ValueError(f"cannot project between {type(m1).__name__} and {type(m2).__name__}")
    if isinstance(m1, Field1D) and not m1.same_grid(m2):
        raise ValueError("observables live on different grids")
    if isinstance(m1, FourierCoeffs) and (m1.K != m2.K or m1.L != m2.L):
        raise ValueError("coefficient sets differ in K or L")


def project_linear(m1, m2, t1: float, t2: float, t_proj: float):
    """Forward Euler projection m2 + (t_proj - t2)(m2 - m1)/(t2 - t1).

    Works componentwise on floats, arrays, fields and Fourier coefficients.
    """
    if not t2 > t1:
        raise ValueError(f"need t2 > t1, got t1={t1}, t2={t2}")
    if t_proj < t2:
        raise ValueError(f"projection time {t_proj} precedes t2={t2}")
    _check_compatible(m1, m2)
    v1, v2 = _to_vec(m1), _to_vec(m2)
    return _from_vec(m2, v2 + (t_proj - t2) * (v2 - v1) / (t2 - t1))


def project_least_squares(samples, times, t_proj: float):
    """Projection from the least-squares line through several samples.

    The line is evaluated at the last sample time and extrapolated to
    ``t_proj``; two samples reduce to :func:`project_linear`.
    """
    times = np.asarray(times, dtype=float)
    if len(samples) != times.size or times.size < 2:
        raise ValueError("need at least two samples with matching times")
    if times.size == 2:
        return project_linear(samples[0], samples[1], times[0], times[1], t_proj)
    if np.any(np.diff(times) <= 0):
        raise ValueError("sample times must increase")
    for s in samples[1:]:
        _check_compatible(samples[0], s)
    V = np.stack([_to_vec(s) for s in samples])
    dt = times - times.mean()
    slope = dt @ (V - V.mean(axis=0)) / (dt @ dt)
    at_last = V.mean(axis=0) + slope * (times[-1] - times.mean())
    return _from_vec(samples[-1], at_last + (t_proj - times[-1]) * slope)


# rescaled time


@dataclass(frozen=True)
class TauMap:
    """Rescaled-time quantities of one pair of reports."""

    A_star: float
    B_star: float
    g: float
    d_tau: float
    xi_A: float
    xi_B: float
    rate0: float

    def offset(self, elapsed: float) -> float:
        """tau(t1 + elapsed) - tau(t1) along the exponential A, B path."""
        if elapsed < 0:
            raise ValueError("elapsed time must be non-negative")
        if abs(self.g) < DEGENERATE_G:
            return elapsed * self.rate0
        g_tau = self.g / self.d_tau
        arg = 1.0 + elapsed * g_tau * self.rate0
        if not arg > 0:
            raise DegenerateError("projection horizon lies beyond the finite-time singularity of tau")
        return float(np.log(arg) / g_tau)


def tau_step_from_reports(A1, B1, A2, B2, dt, a, b) -> TauMap:
    """Rescaled step and log-rates from the scale factors at two reports ``dt`` apart."""
    if not (A1 > 0 and A2 > 0 and B1 > 0 and B2 > 0):
        raise ValueError("scale factors must be positive")
    if not dt > 0:
        raise ValueError("dt must be positive")
    A_star = float(np.log(A2 / A1))
    B_star = float(np.log(B2 / B1))
    g = -a * A_star + (1.0 - b) * B_star
    rate0 = float(A1**a * B1 ** (b - 1.0))
    if abs(g) < DEGENERATE_G:
        d_tau = dt * rate0
    else:
        d_tau = dt * g * rate0 / np.expm1(g)
    return TauMap(A_star, B_star, g, float(d_tau), A_star / d_tau, B_star / d_tau, rate0)


def _beta_residual(log_beta, dt1, dt2, LA1, LA2):
    beta = np.exp(log_beta)
    return np.log1p(dt1 / beta) * LA2 - np.log1p(dt2 / beta) * LA1


def solve_beta(t0, t1, t2, A0, A1, A2) -> float:
    """beta of t = t_c + beta exp(tau) making log A affine in tau at three reports."""
    if not t0 < t1 < t2:
        raise ValueError("need t0 < t1 < t2")
    if not (A0 > 0 and A1 > 0 and A2 > 0):
        raise ValueError("scale factors must be positive")
    LA1, LA2 = np.log(A1 / A0), np.log(A2 / A0)
    if LA1 == 0 and LA2 == 0:
        raise DegenerateError("no scale evolution between the reports")
    dt1, dt2 = t1 - t0, t2 - t0
    lo, hi = np.log(1e-12 * dt2), np.log(1e6 * dt2)
    args = (dt1, dt2, LA1, LA2)
    f_lo, f_hi = _beta_residual(lo, *args), _beta_residual(hi, *args)
    if f_lo == 0:
        return float(np.exp(lo))
    if f_hi == 0:
        return float(np.exp(hi))
    if np.sign(f_lo) == np.sign(f_hi):
        raise NoSolutionError("beta residual has no sign change in the bracket")
    root = brentq(_beta_residual, lo, hi, args=args, xtol=1e-14, rtol=1e-15, maxiter=500)
    return float(np.exp(root))


def tau_of(t, t0, beta):
    return np.log1p((np.asarray(t) - t0) / beta)


# inner steppers


class PdeStepper:
    """Deterministic PDE; the observable is the field itself."""

    def __init__(self, kind, dt):
        self.kind = kind
        self.dt = dt

    def advance(self, state, duration):
        return pde.advance(self.kind, state, self.dt, duration)

    def restrict(self, state):
        return state

    def lift(self, obs, t, reference):
        return obs


class SsaFourierStepper:
    """Lattice SSA observed through Fourier coefficients of the difference distribution."""

    def __init__(self, rates, K=15, method="tree"):
        self.rates = rates
        self.K = K
        self.method = method

    def advance(self, state, duration):
        return micro.ssa_run(state, self.rates, state.t + duration, method=self.method)

    def restrict(self, state):
        M = micro.restrict_smooth(state)
        return fourier_analyze(micro.diff_distribution(M), self.K)

    def lift(self, obs, t, reference):
        return micro.lift_fourier(
            obs, 0.0, reference.J, x_min=reference.x_min, t=t, rng=reference.rng
        )


class WalkerStepper:
    """Random walkers observed through their CDF on a fixed grid."""

    def __init__(self, grid: Grid, dt=1e-4):
        self.grid = grid
        self.dt = dt

    def advance(self, state, duration):
        return micro.walker_run(state, self.dt, pde.steps_for(duration, self.dt))

    def restrict(self, state):
        return micro.cdf_restrict(state, self.grid)

    def lift(self, obs, t, reference):
        return micro.lift_from_cdf(repair_cdf(obs), reference.P, t=t, rng=reference.rng)


def repair_cdf(f: Field1D) -> Field1D:
    """Monotone non-decreasing CDF in [0, 1] closest in spirit to ``f``."""
    return f.with_values(np.clip(np.maximum.accumulate(f.values), 0.0, 1.0))


# outer loop


@dataclass
class StepRecord:
    step: int
    report_times: tuple
    t_project: float
    frames: tuple
    projected_frame: FrameState
    path: str
    xi_A: float = np.nan
    xi_B: float = np.nan
    d_tau: float = np.nan
    tau_project: float = np.nan
    beta: float = np.nan
    reports: tuple = ()
    framed_reports: tuple = ()
    framed_projection: Any = None
    projection: Any = None


@dataclass
class ProjectiveResult:
    records: list
    final_state: Any
    t_final: float
    final_observable: Any
    extra: dict = dc_field(default_factory=dict)


class ProjectiveIntegrator(BaseEstimator):
    """Projective forward Euler around an inner stepper.

    Parameters
    ----------
    mode : {"fixed", "cotraveling", "renormalized", "asymptotic"}
    template : FrameTemplate or None
        Fitted on the initial observable by :meth:`fit`.  ``None`` means the
        identity frame, which is the only choice for ``mode="fixed"``.
    dt_report : float
        Gap between successive reports.
    horizon : float
        Projection horizon T beyond the last report.
    t_skip : float
        Inner run between the lifted state and the first report.
    window : int
        Restriction samples spread evenly over [t1, t2]; more than two turns
        the two-point slope into a least-squares slope (fixed and
        cotraveling modes).
    exponents : (a, b)
        Scale exponents for ``mode="renormalized"``.
    max_outer_steps : int or None
    """

    def __init__(
        self,
        mode="cotraveling",
        template=None,
        dt_report=0.1,
        horizon=0.3,
        t_skip=0.0,
        window=2,
        exponents=None,
        max_outer_steps=None,
    ):
        self.mode = mode
        self.template = template
        self.dt_report = dt_report
        self.horizon = horizon
        self.t_skip = t_skip
        self.window = window
        self.exponents = exponents
        self.max_outer_steps = max_outer_steps

    def _validate(self):
        if self.mode not in MODES:
            raise ConfigurationError(f"unknown mode {self.mode!r}; expected one of {MODES}")
        if not self.dt_report > 0:
            raise ConfigurationError("dt_report must be positive")
        if not self.horizon >= 0:
            raise ConfigurationError("horizon must be non-negative")
        if not self.t_skip >= 0:
            raise ConfigurationError("t_skip must be non-negative")
        if int(self.window) != self.window or self.window < 2:
            raise ConfigurationError("window must be an integer >= 2")
        if self.window > 2 and self.mode in ("renormalized", "asymptotic"):
            raise ConfigurationError(f"window > 2 is only supported in fixed and cotraveling modes")
        if self.mode == "renormalized" and self.exponents is None:
            raise ConfigurationError("renormalized mode needs scale exponents (a, b)")
        if self.mode == "fixed" and not isinstance(self.template, (type(None), IdentityFrame)):
            raise ConfigurationError("fixed mode projects in the laboratory frame; drop the template")
        if self.mode != "fixed" and self.template is None:
            raise ConfigurationError(f"{self.mode} mode needs a template")

    def fit(self, X, y=None):
        """Validate the parameters and fit the template on the initial observable."""
        self._validate()
        template = IdentityFrame() if self.template is None else clone(self.template)
        self.template_ = template.fit(X)
        self.period_ = self.t_skip + self.dt_report * (2 if self.mode == "asymptotic" else 1) + self.horizon
        return self

    # sampling

    def _sample(self, stepper, state, t, offsets):
        """Advance through ``t + offsets``; return observables, times and the last state."""
        obs, times = [], []
        done = 0.0
        for off in offsets:
            if off > done:
                state = stepper.advance(state, off - done)
                done = off
            obs.append(stepper.restrict(state))
            times.append(t + off)
        return obs, np.array(times), state

    def _offsets(self):
        if self.mode == "asymptotic":
            return self.t_skip + self.dt_report * np.arange(3)
        return self.t_skip + self.dt_report * np.linspace(0.0, 1.0, int(self.window))

    # one outer step per mode

    def _solve_all(self, obs, previous):
        frames, framed = [], []
        for o in obs:
            fr, oh = self.template_.solve(o, previous)
            frames.append(fr)
            framed.append(oh)
            previous = fr
        return frames, framed

    def _step_linear(self, frames, framed, times, t_proj):
        Cs = [f.C for f in frames]
        u_hat = project_least_squares(framed, times, t_proj)
        C = project_least_squares(Cs, times, t_proj)
        frame = FrameState(C=C)
        if isinstance(self.template_, FourierPhaseTemplate):
            u_hat = self.template_.repair(u_hat, frame)
        return frame, u_hat, {}

    def _step_renormalized(self, frames, framed, times, t_proj, tau1):
        a, b = self.exponents
        f1, f2 = frames
        t1, t2 = times
        tm = tau_step_from_reports(f1.A, f1.B, f2.A, f2.B, t2 - t1, a, b)
        try:
            s = tm.offset(t_proj - t1)
        except DegenerateError as err:
            log.info("renormalized projection falls back to linear-in-t: %s", err)
            return self._fallback(frames, framed, times, t_proj)
        u_hat = project_linear(framed[0], framed[1], 0.0, tm.d_tau, max(s, tm.d_tau))
        A = f1.A * np.exp(tm.xi_A * s)
        B = f1.B * np.exp(tm.xi_B * s)
        info = dict(
            path="tau", xi_A=tm.xi_A, xi_B=tm.xi_B, d_tau=tm.d_tau, tau_project=tau1 + s
        )
        return FrameState(C=0.0, A=A, B=B, tau=tau1 + s), u_hat, info

    def _fallback(self, frames, framed, times, t_proj):
        t1, t2 = times[-2], times[-1]
        f1, f2 = frames[-2], frames[-1]
        u_hat = project_linear(framed[-2], framed[-1], t1, t2, t_proj)
        C = project_linear(f1.C, f2.C, t1, t2, t_proj)
        A = project_linear(f1.A, f2.A, t1, t2, t_proj)
        B = project_linear(f1.B, f2.B, t1, t2, t_proj)
        if not (A > 0 and B > 0):
            raise DegenerateError(f"linear projection of scale factors left the positive range (A={A}, B={B})")
        return FrameState(C=C, A=A, B=B), u_hat, {"path": "linear-t"}

    def _step_asymptotic(self, frames, framed, times, t_proj):
        t0, t1, t2 = times
        f0, f1, f2 = frames
        try:
            beta = solve_beta(t0, t1, t2, f0.A, f1.A, f2.A)
        except (DegenerateError, NoSolutionError) as err:
            log.info("asymptotic step falls back to linear-in-t: %s", err)
            return self._fallback(frames, framed, times, t_proj)
        tau1, tau2, tau_p = tau_of([t1, t2, t_proj], t0, beta)
        LB1, LB2 = np.log(f1.B / f0.B), np.log(f2.B / f0.B)
        rates = np.array([LB1 / tau1, LB2 / tau2])
        scale = np.max(np.abs(rates))
        mismatch = 0.0 if scale < 1e-12 else abs(rates[0] - rates[1]) / scale
        if mismatch > FIT_RESIDUAL_LIMIT:
            log.info("B sequence inconsistent with beta (residual %.3g); linear-in-t", mismatch)
            frame, u_hat, info = self._fallback(frames, framed, times, t_proj)
            info["beta"] = beta
            return frame, u_hat, info
        u_hat = project_linear(framed[1], framed[2], tau1, tau2, tau_p)
        logA = project_linear(np.log(f1.A), np.log(f2.A), tau1, tau2, tau_p)
        logB = project_linear(np.log(f1.B), np.log(f2.B), tau1, tau2, tau_p)
        C = project_linear(f1.C, f2.C, t1, t2, t_proj)
        info = dict(path="tau", beta=beta, tau_project=float(tau_p))
        info["xi_A"] = (np.log(f2.A) - np.log(f1.A)) / (tau2 - tau1)
        info["xi_B"] = (np.log(f2.B) - np.log(f1.B)) / (tau2 - tau1)
        return FrameState(C=C, A=np.exp(logA), B=np.exp(logB), tau=float(tau_p)), u_hat, info

    # driver

    def run(self, stepper, state, t_end, t0=0.0, previous_frame=None):
        """Integrate from ``t0`` to ``t_end``.

        Whole outer steps are taken while they fit before ``t_end``; the
        remainder is covered by the inner stepper alone.
        """
        check_is_fitted(self)
        if t_end < t0:
            raise ValueError("t_end precedes t0")
        n_outer = int(np.floor((t_end - t0) / self.period_ + 1e-9)) if self.period_ > 0 else 0
        if self.max_outer_steps is not None:
            n_outer = min(n_outer, int(self.max_outer_steps))
        offsets = self._offsets()
        records = []
        t = t0
        tau = 0.0
        previous = previous_frame
        for step in range(n_outer):
            t_proj = t + self.period_
            try:
                obs, times, last_state = self._sample(stepper, state, t, offsets)
                frames, framed = self._solve_all(obs, previous)
                if self.mode == "renormalized":
                    tau1 = tau + self.t_skip * frames[0].A ** self.exponents[0] * frames[0].B ** (
                        self.exponents[1] - 1.0
                    )
                    frame, u_hat, info = self._step_renormalized(frames, framed, times, t_proj, tau1)
                elif self.mode == "asymptotic":
                    frame, u_hat, info = self._step_asymptotic(frames, framed, times, t_proj)
                else:
                    frame, u_hat, info = self._step_linear(frames, framed, times, t_proj)
                    info = {"path": "linear-t"}
                projection = self.template_.unframe(u_hat, frame)
            except Exception as err:
                raise type(err)(f"outer step {step} (t={t:g}): {err}") from err
            info.setdefault("path", "linear-t")
            if "tau_project" in info and self.mode == "renormalized":
                tau = info["tau_project"]
            records.append(
                StepRecord(
                    step=step,
                    report_times=tuple(float(x) for x in times),
                    t_project=t_proj,
                    frames=tuple(frames),
                    projected_frame=frame,
                    reports=tuple(obs),
                    framed_reports=tuple(framed),
                    framed_projection=u_hat,
                    projection=projection,
                    **{k: v for k, v in info.items() if k != "path"},
                    path=info["path"],
                )
            )
            if self.horizon == 0:
                # nothing to extrapolate: the inner state simply carries on
                state = last_state
            else:
                state = stepper.lift(projection, t_proj, last_state)
            t = t_proj
            previous = FrameState(C=frame.C, A=frame.A, B=frame.B)
        if t_end - t > 1e-12:
            state = stepper.advance(state, t_end - t)
            t = t_end
        return ProjectiveResult(records, state, t, stepper.restrict(state))
