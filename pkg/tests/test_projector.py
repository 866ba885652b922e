import numpy as np
import pytest
from hypothesis import assume, given, strategies as st
from scipy.integrate import quad

from coevolve import pde
from coevolve.exceptions import ConfigurationError, DegenerateError, NoSolutionError
from coevolve.field import Field1D, FourierCoeffs, Grid, l2_error
from coevolve.frames import CentroidMomentMassTemplate, IntegralShiftTemplate, MassStepTemplate
from coevolve.projector import (
    PdeStepper,
    ProjectiveIntegrator,
    project_least_squares,
    project_linear,
    solve_beta,
    tau_of,
    tau_step_from_reports,
)

DIF = Grid(-10.0, 10.0, 1001)
NAG = Grid(-30.0, 30.0, 601)
times = st.floats(0.0, 10.0)
values = st.floats(-100.0, 100.0)


class AnalyticStepper:
    """Inner 'simulator' whose state is the time and whose observable is a closed form."""

    def __init__(self, profile):
        self.profile = profile

    def advance(self, state, duration):
        return state + duration

    def restrict(self, state):
        return self.profile(state)

    def lift(self, obs, t, reference):
        return t


# projection


@given(values, values, times, st.floats(0.01, 5.0), st.floats(0.0, 20.0))
def test_linear_data_is_projected_exactly(c0, c1, t1, gap, ahead):
    t2 = t1 + gap
    tp = t2 + ahead
    got = project_linear(c0 + c1 * t1, c0 + c1 * t2, t1, t2, tp)
    assert got == pytest.approx(c0 + c1 * tp, rel=1e-9, abs=1e-7)


@given(times, st.floats(0.01, 5.0))
def test_zero_horizon_returns_the_last_report(t1, gap):
    m1, m2 = np.array([1.0, 2.0]), np.array([3.0, -4.0])
    np.testing.assert_array_equal(project_linear(m1, m2, t1, t1 + gap, t1 + gap), m2)


@given(times, st.floats(0.01, 5.0), st.floats(0.0, 10.0))
def test_quadratic_data_leaves_the_taylor_remainder(t1, gap, ahead):
    t2, tp = t1 + gap, t1 + gap + ahead
    err = tp**2 - project_linear(t1**2, t2**2, t1, t2, tp)
    assert err == pytest.approx((tp - t2) * (tp - t1), rel=1e-8, abs=1e-8)


def test_projection_of_fields_and_coefficients():
    f1 = Field1D.on_grid(DIF, np.zeros(1001))
    f2 = Field1D.on_grid(DIF, np.ones(1001))
    np.testing.assert_allclose(project_linear(f1, f2, 0.0, 1.0, 3.0).values, 3.0)
    c1 = FourierCoeffs(np.zeros(4), np.zeros(3), 60.0)
    c2 = FourierCoeffs(np.ones(4), np.ones(3), 60.0)
    np.testing.assert_allclose(project_linear(c1, c2, 0.0, 1.0, 2.0).to_vector(), 2.0)
    with pytest.raises(ValueError):
        project_linear(f1, c2, 0.0, 1.0, 2.0)
    with pytest.raises(ValueError):
        project_linear(f1, Field1D.on_grid(NAG, np.zeros(601)), 0.0, 1.0, 2.0)


def test_projection_argument_checks():
    with pytest.raises(ValueError):
        project_linear(0.0, 1.0, 1.0, 1.0, 2.0)
    with pytest.raises(ValueError):
        project_linear(0.0, 1.0, 0.0, 1.0, 0.5)


@given(values, values, st.integers(3, 9))
def test_least_squares_projection_is_exact_on_lines(c0, c1, n):
    ts = np.linspace(0.25, 0.5, n)
    samples = [c0 + c1 * t for t in ts]
    assert project_least_squares(samples, ts, 1.0) == pytest.approx(c0 + c1, rel=1e-9, abs=1e-7)


def test_least_squares_with_two_samples_is_the_linear_projection():
    assert project_least_squares([1.0, 2.0], [0.0, 1.0], 3.0) == project_linear(1.0, 2.0, 0.0, 1.0, 3.0)


# rescaled time


@given(st.floats(0.2, 5.0), st.floats(0.2, 5.0), st.floats(-3, 3), st.floats(-3, 3))
def test_constant_scales_give_the_plain_rate(A, B, a, b):
    tm = tau_step_from_reports(A, B, A, B, 0.1, a, b)
    assert tm.d_tau == pytest.approx(0.1 * A**a * B ** (b - 1), rel=1e-12)
    assert tm.xi_A == 0.0 and tm.xi_B == 0.0


@given(st.floats(0.05, 10.0), st.floats(1.001, 5.0))
def test_heat_kernel_frames_give_log_time_ratio(t1, ratio):
    t2 = t1 * ratio
    A1, A2 = np.sqrt(t1), np.sqrt(t2)
    tm = tau_step_from_reports(A1, 1 / A1, A2, 1 / A2, t2 - t1, -2.0, 1.0)
    assert tm.d_tau == pytest.approx(np.log(t2 / t1), rel=0, abs=1e-8)
    # the exponential path reaches the power law at any later time
    tp = t2 + 3.0 * (t2 - t1)
    s = tm.offset(tp - t1)
    assert A1 * np.exp(tm.xi_A * s) == pytest.approx(np.sqrt(tp), rel=1e-10)
    assert (1 / A1) * np.exp(tm.xi_B * s) == pytest.approx(1 / np.sqrt(tp), rel=1e-10)


@given(st.floats(0.5, 2.0), st.floats(0.5, 2.0), st.floats(0.7, 1.4), st.floats(0.7, 1.4),
       st.floats(-3.0, 1.0), st.floats(-1.0, 2.0))
def test_tau_step_matches_quadrature(A1, B1, rA, rB, a, b):
    dt = 0.1
    tm = tau_step_from_reports(A1, B1, A1 * rA, B1 * rB, dt, a, b)
    assume(abs(tm.g) > 1e-6)
    # dt/dtau along A = A1 exp(xi_A s), B = B1 exp(xi_B s)
    rate = lambda s: A1**a * np.exp(a * tm.xi_A * s) * B1 ** (b - 1) * np.exp((b - 1) * tm.xi_B * s)
    elapsed, _ = quad(lambda s: 1.0 / rate(s), 0.0, tm.d_tau, epsabs=0, epsrel=1e-13)
    assert elapsed == pytest.approx(dt, rel=1e-8)
    assert tm.offset(dt) == pytest.approx(tm.d_tau, rel=1e-10)
    try:
        s = tm.offset(2.5 * dt)
    except DegenerateError:
        # shrinking scales can reach the finite-time singularity of tau
        assume(False)
    elapsed, _ = quad(lambda s: 1.0 / rate(s), 0.0, s, epsabs=0, epsrel=1e-13)
    assert elapsed == pytest.approx(2.5 * dt, rel=1e-8)


def test_tau_step_argument_checks():
    with pytest.raises(ValueError):
        tau_step_from_reports(0.0, 1.0, 1.0, 1.0, 0.1, -2, 1)
    with pytest.raises(ValueError):
        tau_step_from_reports(1.0, 1.0, 1.0, 1.0, 0.0, -2, 1)


def test_tau_offset_past_the_singularity_is_degenerate():
    # A shrinking fast with a = -2 makes tau blow up within a finite time
    tm = tau_step_from_reports(1.0, 1.0, 0.5, 1.0, 0.1, -2.0, 1.0)
    with pytest.raises(DegenerateError):
        tm.offset(10.0)


@given(st.floats(1e-3, 100.0), st.floats(-1.0, 1.0), st.floats(0.05, 2.0), st.floats(-2, 2),
       st.floats(0.05, 1.0), st.floats(0.05, 1.0))
def test_solve_beta_recovers_a_planted_value(beta0, t_c, a1, a0, tau1, gap):
    assume(abs(a1) > 0.05)
    taus = np.array([0.0, tau1, tau1 + gap])
    t = t_c + beta0 * np.exp(taus)
    A = np.exp(a0 + a1 * taus)
    assume(np.all(np.diff(t) > 1e-9 * max(1, abs(t[0]))))
    beta = solve_beta(*t, *A)
    assert beta == pytest.approx(beta0, rel=1e-8)
    np.testing.assert_allclose(tau_of(t, t[0], beta), taus, atol=1e-8 * max(1, tau1 + gap))


def test_exponential_in_t_scales_have_no_beta():
    t = np.array([1.0, 1.1, 1.2])
    with pytest.raises(NoSolutionError):
        solve_beta(*t, *np.exp(0.7 * t))
    with pytest.raises(DegenerateError):
        solve_beta(*t, 1.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        solve_beta(1.0, 1.0, 2.0, 1.0, 2.0, 3.0)


# outer loop


def test_integrator_validation():
    u0 = pde.box(DIF)
    with pytest.raises(ConfigurationError):
        ProjectiveIntegrator(mode="sideways").fit(u0)
    with pytest.raises(ConfigurationError):
        ProjectiveIntegrator(mode="cotraveling", template=None).fit(u0)
    with pytest.raises(ConfigurationError):
        ProjectiveIntegrator(mode="fixed", template=MassStepTemplate()).fit(u0)
    with pytest.raises(ConfigurationError):
        ProjectiveIntegrator(mode="renormalized", template=MassStepTemplate()).fit(u0)
    with pytest.raises(ConfigurationError):
        ProjectiveIntegrator(mode="renormalized", template=MassStepTemplate(), exponents=(-2, 1), window=3).fit(u0)
    with pytest.raises(ConfigurationError):
        ProjectiveIntegrator(mode="fixed", dt_report=0.0).fit(u0)


def test_translating_profile_is_projected_exactly():
    speed = -0.7
    stepper = AnalyticStepper(lambda t: Field1D.on_grid(NAG, pde.nagumo_wave(NAG.x - speed * t)))
    pi = ProjectiveIntegrator(mode="cotraveling", template=IntegralShiftTemplate(),
                              dt_report=0.1, horizon=0.3, t_skip=0.1).fit(stepper.restrict(0.0))
    res = pi.run(stepper, 0.0, 2.0)
    for rec in res.records:
        assert rec.projected_frame.C == pytest.approx(speed * rec.t_project, abs=1e-8)
        # each framed report carries a linear-interpolation error dx^2/8 max|u''|;
        # projecting 0.3 past a 0.1 gap amplifies the difference sevenfold
        bound = 7.0 * NAG.dx**2 / 8.0 * 0.05
        np.testing.assert_allclose(rec.framed_projection.values, rec.framed_reports[-1].values, atol=bound)


def test_heat_kernel_is_stationary_under_renormalized_projection():
    stepper = AnalyticStepper(lambda t: pde.heat_kernel(DIF, t))
    t_start = 1.0
    pi = ProjectiveIntegrator(mode="renormalized", template=MassStepTemplate(), exponents=(-2.0, 1.0),
                              dt_report=0.1, horizon=0.2, t_skip=0.1).fit(stepper.restrict(t_start))
    res = pi.run(stepper, t_start, t_start + 1.2, t0=t_start)
    tmpl = pi.template_
    for rec in res.records:
        exact, _ = tmpl.solve(stepper.restrict(rec.t_project))
        # frames come from the template on grid data, so agreement is at the
        # level of its interpolation error rather than the exact algebra
        assert rec.projected_frame.A == pytest.approx(exact.A, rel=1e-4)
        assert rec.projected_frame.B == pytest.approx(exact.B, rel=1e-4)
        np.testing.assert_allclose(rec.framed_projection.values, rec.framed_reports[-1].values, atol=1e-4)
        assert rec.xi_B / rec.xi_A == pytest.approx(-1.0, rel=1e-3)


def test_asymptotic_step_agrees_with_renormalized_step_on_self_similar_data():
    stepper = AnalyticStepper(lambda t: pde.heat_kernel(DIF, t))
    u0 = stepper.restrict(1.0)
    asym = ProjectiveIntegrator(mode="asymptotic", template=CentroidMomentMassTemplate(),
                                dt_report=0.1, horizon=0.2, t_skip=0.0, max_outer_steps=1).fit(u0)
    ren = ProjectiveIntegrator(mode="renormalized", template=CentroidMomentMassTemplate(), exponents=(-2.0, 1.0),
                               dt_report=0.1, horizon=0.2, t_skip=0.1, max_outer_steps=1).fit(u0)
    ra = asym.run(stepper, 1.0, 1.4, t0=1.0).records[0]
    rr = ren.run(stepper, 1.0, 1.4, t0=1.0).records[0]
    assert ra.path == "tau" and rr.path == "tau"
    assert ra.t_project == pytest.approx(rr.t_project)
    for attr in ("A", "B"):
        assert getattr(ra.projected_frame, attr) == pytest.approx(getattr(rr.projected_frame, attr), rel=1e-6)
    np.testing.assert_allclose(ra.framed_projection.values, rr.framed_projection.values, atol=1e-6)


def test_early_burgers_takes_the_linear_fallback():
    kind = pde.BurgersVariant(0.025)
    u0 = pde.gaussian(DIF)
    pi = ProjectiveIntegrator(mode="asymptotic", template=CentroidMomentMassTemplate(),
                              dt_report=0.1, horizon=0.2, max_outer_steps=1).fit(u0)
    rec = pi.run(PdeStepper(kind, 1e-5), u0, 0.4).records[0]
    assert rec.path == "linear-t"
    t1, t2 = rec.report_times[1:]
    f1, f2 = rec.frames[1:]
    for attr in ("C", "A", "B"):
        expected = project_linear(getattr(f1, attr), getattr(f2, attr), t1, t2, rec.t_project)
        assert getattr(rec.projected_frame, attr) == pytest.approx(expected, rel=1e-12, abs=1e-14)
    expected = project_linear(rec.framed_reports[1], rec.framed_reports[2], t1, t2, rec.t_project)
    np.testing.assert_allclose(rec.framed_projection.values, expected.values, atol=1e-14)


def test_zero_horizon_reproduces_the_direct_run():
    kind = pde.Nagumo(0.01, 1.0)
    u0 = pde.nagumo_ramp(NAG)
    pi = ProjectiveIntegrator(mode="fixed", dt_report=0.1, horizon=0.0, t_skip=0.1).fit(u0)
    res = pi.run(PdeStepper(kind, 1e-4), u0, 1.0)
    report_times = sorted({t for r in res.records for t in r.report_times} | {1.0})
    direct = pde.euler_integrate(kind, u0, 1e-4, 10_000, report_times=report_times)
    for rec in res.records:
        for t, obs in zip(rec.report_times, rec.reports):
            np.testing.assert_array_equal(obs.values, direct.at(t).values)
    np.testing.assert_array_equal(res.final_observable.values, direct.at(1.0).values)


def test_failures_name_the_outer_step():
    class Exploding(AnalyticStepper):
        def restrict(self, state):
            if state > 0.45:
                return Field1D.on_grid(DIF, np.zeros(1001))
            return pde.box(DIF)

    stepper = Exploding(None)
    pi = ProjectiveIntegrator(mode="renormalized", template=MassStepTemplate(), exponents=(-2.0, 1.0),
                              dt_report=0.1, horizon=0.1, t_skip=0.1).fit(pde.box(DIF))
    with pytest.raises(ValueError, match="outer step 1"):
        pi.run(stepper, 0.0, 2.0)
