import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.stats import norm
from sklearn.base import clone

from coevolve import pde
from coevolve.exceptions import DegenerateError, NoSolutionError
from coevolve.field import Field1D, FourierCoeffs, Grid, fourier_analyze, fourier_synthesize, integral
from coevolve.frames import (
    CdfFractionTemplate,
    CentroidMomentMassTemplate,
    FourierPhaseTemplate,
    FrameState,
    IdentityFrame,
    IntegralShiftTemplate,
    MassStepTemplate,
    fourier_phase_shift,
    from_frame,
    solve_cdf_scale,
    solve_general_triple,
    solve_integral_shift,
    solve_scale_pair,
    to_frame,
)

NAG = Grid(-30.0, 30.0, 601)
DIF = Grid(-10.0, 10.0, 1001)


def field(grid, values):
    return Field1D.on_grid(grid, values)


def test_frame_state_validation():
    with pytest.raises(ValueError):
        FrameState(A=0.0)
    with pytest.raises(ValueError):
        FrameState(C=np.nan)


@given(st.floats(-3, 3), st.floats(0.6, 1.6), st.floats(0.2, 5))
def test_frame_round_trip(C, A, B):
    u = field(DIF, np.exp(-(DIF.x**2)))
    back = from_frame(to_frame(u, C, A, B, fill="zero"), C, A, B, fill="zero")
    # two linear interpolations; the framed grid resolves u at spacing A dx
    dx = DIF.dx
    bound = (dx**2 + (A * dx) ** 2) / 8.0 * 2.0
    np.testing.assert_allclose(back.values, u.values, atol=1.01 * bound)


def test_fill_modes():
    u = field(DIF, np.ones(1001))
    assert to_frame(u, C=5.0, fill="clamp").values[-1] == 1.0
    assert to_frame(u, C=5.0, fill="zero").values[-1] == 0.0
    with pytest.raises(ValueError):
        to_frame(u, fill="nearest")


# integral shift


def test_integral_shift_of_the_reference_is_zero():
    u = pde.nagumo_wave(NAG.x)
    u = field(NAG, u)
    C, _ = solve_integral_shift(u, integral(u))
    assert abs(C) <= 1e-10


@given(st.floats(-5.0, 5.0))
def test_integral_shift_recovers_a_translation(s):
    ref = field(NAG, pde.nagumo_wave(NAG.x))
    moved = field(NAG, pde.nagumo_wave(NAG.x - s))
    C, u_hat = solve_integral_shift(moved, integral(ref))
    assert C == pytest.approx(s, abs=1e-6)
    assert abs(integral(u_hat) - integral(ref)) <= 1e-10 * integral(ref)


def test_integral_shift_template_residual_post_condition():
    ref = field(NAG, pde.nagumo_wave(NAG.x))
    tmpl = IntegralShiftTemplate().fit(ref)
    frame, u_hat = tmpl.solve(field(NAG, pde.nagumo_wave(NAG.x + 2.5)))
    assert frame.C == pytest.approx(-2.5, abs=1e-6)
    assert abs(tmpl.residuals(u_hat)[0]) <= 1e-9


def test_integral_shift_without_a_root():
    u = field(NAG, np.zeros(601))
    with pytest.raises(NoSolutionError):
        solve_integral_shift(u, 1.0)


# Fourier phase


def test_phase_trivial_cases():
    a = np.zeros(16)
    b = np.zeros(15)
    a[1] = 1.0
    C, _ = fourier_phase_shift(FourierCoeffs(a, b, 60.0))
    assert C == 0.0
    a[1], b[0] = 0.0, 1.0
    C, _ = fourier_phase_shift(FourierCoeffs(a, b, 60.0))
    assert C == pytest.approx(15.0)
    with pytest.raises(DegenerateError):
        fourier_phase_shift(FourierCoeffs(np.zeros(16), np.zeros(15), 60.0))


@given(st.floats(-12.0, 12.0))
def test_phase_follows_a_field_shift(s):
    grid = Grid(-30.0, 30.0, 101)
    bump = lambda x: np.exp(-(((x + 30.0) % 60.0 - 30.0) / 6.0) ** 2)
    c0 = fourier_analyze(field(grid, bump(grid.x)), 15)
    c1 = fourier_analyze(field(grid, bump(grid.x - s)), 15)
    C0, h0 = fourier_phase_shift(c0)
    C1, h1 = fourier_phase_shift(c1, previous=C0 + s)
    assert C1 - C0 == pytest.approx(s, abs=1e-6)
    # the framed coefficients do not see the shift
    np.testing.assert_allclose(h1.to_vector(), h0.to_vector(), atol=1e-6)
    assert abs(h1.b[0]) <= 1e-12


def test_phase_template_unframes_and_repairs():
    rng = np.random.default_rng(0)
    c = FourierCoeffs(rng.normal(size=16), rng.normal(size=15), 60.0)
    tmpl = FourierPhaseTemplate().fit(c)
    frame, c_hat = tmpl.solve(c)
    np.testing.assert_allclose(tmpl.unframe(c_hat, frame).to_vector(), c.to_vector(), atol=1e-12)
    drifted = FourierCoeffs(c_hat.a, c_hat.b + 0.1, 60.0)
    assert tmpl.residuals(tmpl.repair(drifted, frame))[0] == 0.0


# mass and step


def test_box_is_its_own_frame():
    box = pde.box(DIF)
    A, B, u_hat = solve_scale_pair(box, integral(box))
    assert A == pytest.approx(1.0, abs=0.011)
    assert B == pytest.approx(1.0, abs=0.011)


@given(st.floats(0.1, 0.6))
def test_heat_kernel_scale_pairs(t):
    # the 4t kernel keeps its tail mass beyond |x| = 10 below 1e-5
    tmpl = MassStepTemplate().fit(pde.heat_kernel(DIF, t))
    f1, _ = tmpl.solve(pde.heat_kernel(DIF, t))
    f4, u_hat = tmpl.solve(pde.heat_kernel(DIF, 4 * t))
    assert f4.A / f1.A == pytest.approx(2.0, rel=1e-3)
    assert f4.B / f1.B == pytest.approx(0.5, rel=1e-3)
    assert np.max(np.abs(tmpl.residuals(u_hat))) <= 1e-8


def test_scale_pair_rejects_massless_profiles():
    with pytest.raises(ValueError):
        solve_scale_pair(field(DIF, np.zeros(1001)), 1.0)
    with pytest.raises(ValueError):
        solve_scale_pair(pde.box(DIF), -1.0)


# CDF fraction


def test_cdf_scale_identity():
    f = field(DIF, norm.cdf(DIF.x))
    tmpl = CdfFractionTemplate().fit(f)
    frame, f_hat = tmpl.solve(f)
    assert frame.A == pytest.approx(1.0, abs=1e-10)
    assert abs(tmpl.residuals(f_hat)[0]) <= 1e-6


def test_cdf_scale_recovers_a_gaussian_width():
    nu = norm.cdf(0.5) - norm.cdf(-0.25)
    A, _ = solve_cdf_scale(field(DIF, norm.cdf(DIF.x, scale=2.0)), -0.25, 0.5, nu)
    assert A == pytest.approx(2.0, abs=1e-6)


def test_cdf_scale_validation():
    f = field(DIF, norm.cdf(DIF.x))
    with pytest.raises(ValueError):
        solve_cdf_scale(f, 0.5, -0.25, 0.1)
    with pytest.raises(ValueError):
        solve_cdf_scale(f.with_values(f.values[::-1]), -0.25, 0.5, 0.1)
    with pytest.raises(NoSolutionError):
        solve_cdf_scale(f, -0.25, 0.5, 2.0)


# centroid, moment, mass


def test_general_triple_self_normalization():
    u = field(DIF, np.exp(-(DIF.x**2)))
    tmpl = CentroidMomentMassTemplate().fit(u)
    frame, u_hat = tmpl.solve(u)
    assert (frame.C, frame.A, frame.B) == pytest.approx((0.0, 1.0, 1.0), abs=1e-12)
    assert np.max(np.abs(tmpl.residuals(u_hat))) <= 1e-12


def test_general_triple_translation_and_dilation():
    ref = field(DIF, np.exp(-(DIF.x**2)))
    tmpl = CentroidMomentMassTemplate().fit(ref)
    C, A, B, _ = solve_general_triple(field(DIF, np.exp(-((DIF.x - 2.0) ** 2))), tmpl.K_, tmpl.mu_)
    assert (C, A, B) == pytest.approx((2.0, 1.0, 1.0), abs=1e-8)
    # analytic moments: var = 1/2 for exp(-x^2), 2 for exp(-x^2/4)
    C, A, B, _ = solve_general_triple(field(DIF, np.exp(-(DIF.x**2) / 4.0)), 0.5, np.sqrt(np.pi))
    assert (C, A, B) == pytest.approx((0.0, 2.0, 1.0), abs=1e-6)


@given(st.floats(-2, 2), st.floats(0.7, 1.5), st.floats(0.5, 3))
def test_general_triple_residual_post_condition(C, A, B):
    ref = field(DIF, np.exp(-(DIF.x**2)))
    tmpl = CentroidMomentMassTemplate().fit(ref)
    frame, u_hat = tmpl.solve(from_frame(ref, C, A, B, fill="zero"))
    assert (frame.C, frame.A, frame.B) == pytest.approx((C, A, B), rel=1e-3, abs=1e-3)
    res = tmpl.residuals(u_hat)
    # the framed profile is re-sampled once, so moments hold to interpolation accuracy
    assert np.max(np.abs(res)) <= 1e-3


# estimator API


@pytest.mark.parametrize(
    "template",
    [IdentityFrame(), IntegralShiftTemplate(), MassStepTemplate(), CdfFractionTemplate(), CentroidMomentMassTemplate()],
)
def test_templates_follow_the_estimator_protocol(template):
    X = field(DIF, norm.cdf(DIF.x)) if isinstance(template, CdfFractionTemplate) else pde.gaussian(DIF)
    est = clone(template)
    assert est.get_params() == template.get_params()
    X_hat = est.fit(X).transform(X)
    frame, _ = est.solve(X)
    back = est.inverse_transform(X_hat, frame)
    np.testing.assert_allclose(back.values, X.values, atol=1e-3)


def test_unfitted_template_raises():
    from sklearn.exceptions import NotFittedError

    with pytest.raises(NotFittedError):
        MassStepTemplate().solve(pde.box(DIF))
