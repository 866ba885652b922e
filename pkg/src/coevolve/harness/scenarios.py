"""Runnable scenarios: build the inner simulator, run the outer loop, write CSVs."""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from pathlib import Path
from typing import Any

import numpy as np

from .. import frames, micro, pde
from ..field import Field1D, FourierCoeffs, Grid, l2_error, l2_error_squared
from ..projector import PdeStepper, ProjectiveIntegrator, SsaFourierStepper, WalkerStepper
from ..symmetry_id import WalkerBurstSimulator, beta_cdf_test_function, estimate_exponent
from .config import ScenarioConfig, format_config, require_valid
from .metrics import fit_front_speed, mean_and_stderr, sup_error
from .output import output_dir, write_csv

STEP_COLUMNS = (
    "seed", "step", "t1", "t2", "t_project", "tau_project", "d_tau", "beta",
    "C", "A", "B", "C_project", "A_project", "B_project", "xi_A", "xi_B", "path", "error",
)
FOURIER_COLUMNS = ("a3", "a4", "ahat3", "ahat4")
SUMMARY_COLUMNS = (
    "seed", "n_steps", "t_final", "final_error", "max_error",
    "front_speed", "direct_front_speed", "xi_A_last", "xi_B_last",
)
SWEEP_COLUMNS = ("test_function_id", "A", "dT", "seed", "a", "residual")
SWEEP_SUMMARY_COLUMNS = ("test_function_id", "A", "dT", "n_seeds", "a_mean", "a_stderr")


def make_template(cfg: ScenarioConfig):
    name = cfg.template
    if name == "none":
        return None
    if name == "integral_shift":
        return frames.IntegralShiftTemplate()
    if name == "fourier_phase":
        return frames.FourierPhaseTemplate()
    if name == "mass_step":
        return frames.MassStepTemplate()
    if name == "cdf_fraction":
        return frames.CdfFractionTemplate(zeta1=cfg.zeta1, zeta2=cfg.zeta2)
    if name == "centroid_moment_mass":
        return frames.CentroidMomentMassTemplate()
    raise ValueError(f"unknown template {name!r}")


def make_integrator(cfg: ScenarioConfig) -> ProjectiveIntegrator:
    return ProjectiveIntegrator(
        mode=cfg.mode,
        template=make_template(cfg),
        dt_report=cfg.dt_report,
        horizon=cfg.horizon,
        t_skip=cfg.t_skip,
        window=cfg.window,
        exponents=(cfg.a, cfg.b),
    )


@dataclass
class Problem:
    stepper: Any
    state0: Any
    obs0: Any


def grid_of(cfg: ScenarioConfig) -> Grid:
    return Grid(cfg.x_min, cfg.x_max, cfg.n_nodes)


def ramp_cdf(grid: Grid) -> Field1D:
    """CDF of the uniform density on [-1, 1]."""
    return Field1D.on_grid(grid, np.clip((grid.x + 1.0) / 2.0, 0.0, 1.0))


def pde_kind(cfg: ScenarioConfig):
    if cfg.scenario == "nagumo_pde":
        return pde.Nagumo(cfg.alpha, cfg.D)
    if cfg.scenario == "diffusion_pde":
        return pde.Diffusion(cfg.D)
    if cfg.scenario == "burgers_asymptotic":
        return pde.BurgersVariant(cfg.kappa)
    raise ValueError(f"{cfg.scenario} is not a PDE scenario")


def build_problem(cfg: ScenarioConfig, rng=None) -> Problem:
    """Inner stepper and initial state of ``cfg`` (``rng`` for stochastic scenarios)."""
    grid = grid_of(cfg)
    if cfg.scenario in ("nagumo_pde", "diffusion_pde", "burgers_asymptotic"):
        u0 = {
            "nagumo_pde": pde.nagumo_ramp,
            "diffusion_pde": pde.box,
            "burgers_asymptotic": pde.gaussian,
        }[cfg.scenario](grid)
        return Problem(PdeStepper(pde_kind(cfg), cfg.dt), u0, u0)
    if cfg.scenario == "nagumo_ssa":
        rates = micro.KineticRates.nagumo(cfg.alpha, cfg.D, cfg.h, cfg.N0)
        s0 = micro.nagumo_lattice(cfg.J, cfg.h, int(cfg.N0), cfg.x_min, rng)
        stepper = SsaFourierStepper(rates, K=cfg.K, method=cfg.method)
        return Problem(stepper, s0, stepper.restrict(s0))
    if cfg.scenario == "diffusion_walkers":
        s0 = micro.lift_from_cdf(ramp_cdf(grid), cfg.walkers, t=0.0, rng=rng)
        stepper = WalkerStepper(grid, cfg.dt)
        return Problem(stepper, s0, stepper.restrict(s0))
    raise ValueError(f"scenario {cfg.scenario} has no outer loop")


def direct_observables(cfg: ScenarioConfig, problem: Problem, times) -> dict:
    """Observables of an uninterrupted inner run at ``times`` (keyed by rounded time)."""
    times = sorted({round(float(t), 10) for t in times})
    if isinstance(problem.stepper, PdeStepper):
        traj = pde.euler_integrate(
            problem.stepper.kind, problem.state0, cfg.dt,
            pde.steps_for(times[-1], cfg.dt), report_times=times,
        )
        return {round(t, 10): f for t, f in zip(traj.times, traj.fields)}
    out = {}
    state, t = problem.state0, 0.0
    for target in times:
        if target > t:
            state = problem.stepper.advance(state, target - t)
            t = target
        out[target] = problem.stepper.restrict(state)
    return out


def observable_error(cfg: ScenarioConfig, approx, exact) -> float:
    """Scenario-specific distance between a projected and a direct observable."""
    if isinstance(approx, FourierCoeffs):
        return float(np.linalg.norm(approx.to_vector() - exact.to_vector()))
    if cfg.scenario == "diffusion_pde":
        return l2_error_squared(approx, exact)
    if cfg.scenario == "diffusion_walkers":
        return sup_error(approx, exact)
    return l2_error(approx, exact)


def front_positions(template, observables, previous=None):
    """Template shift C solved along a sequence of observables with warm starts."""
    tmpl = template.fit(observables[0]) if not getattr(template, "fitted_", False) else template
    Cs = []
    for obs in observables:
        frame, _ = tmpl.solve(obs, previous)
        Cs.append(frame.C)
        previous = frame
    return np.array(Cs)


@dataclass
class SeedRun:
    seed: Any
    result: Any
    errors: list
    direct: dict = dc_field(default_factory=dict)
    summary: dict = dc_field(default_factory=dict)


@dataclass
class ScenarioResult:
    config: ScenarioConfig
    runs: list
    summary: list
    paths: dict


def _seed_streams(seed):
    if seed is None:
        return None, None
    run, direct = np.random.SeedSequence(seed).spawn(2)
    return np.random.default_rng(run), np.random.default_rng(direct)


def _fourier_extras(record):
    a = record.reports[-1].a
    a_hat = record.framed_reports[-1].a
    return {"a3": float(a[3]), "a4": float(a[4]), "ahat3": float(a_hat[3]), "ahat4": float(a_hat[4])}


def run_seed(cfg: ScenarioConfig, seed=None) -> SeedRun:
    rng_run, rng_direct = _seed_streams(seed)
    problem = build_problem(cfg, rng_run)
    integrator = make_integrator(cfg).fit(problem.obs0)
    result = integrator.run(problem.stepper, problem.state0, cfg.t_end)
    records = result.records
    t_proj = [r.t_project for r in records]

    direct = {}
    errors = [np.nan] * len(records)
    if cfg.direct and records:
        reference = build_problem(cfg, rng_direct)
        direct = direct_observables(cfg, reference, t_proj + [cfg.t_end])
        errors = [observable_error(cfg, r.projection, direct[round(r.t_project, 10)]) for r in records]

    summary = {
        "seed": "none" if seed is None else seed,
        "n_steps": len(records),
        "t_final": result.t_final,
        "final_error": errors[-1] if records else np.nan,
        "max_error": float(np.nanmax(errors)) if records and cfg.direct else np.nan,
        "front_speed": np.nan,
        "direct_front_speed": np.nan,
        "xi_A_last": records[-1].xi_A if records else np.nan,
        "xi_B_last": records[-1].xi_B if records else np.nan,
    }
    if cfg.scenario in ("nagumo_pde", "nagumo_ssa") and len(records) >= 4:
        if cfg.mode == "cotraveling":
            C = [r.projected_frame.C for r in records]
        else:
            shift = frames.FourierPhaseTemplate() if cfg.scenario == "nagumo_ssa" else frames.IntegralShiftTemplate()
            shift.fit(problem.obs0)
            C = front_positions(shift, [r.projection for r in records])
        summary["front_speed"] = fit_front_speed(t_proj, C)
        if direct:
            shift = frames.FourierPhaseTemplate() if cfg.scenario == "nagumo_ssa" else frames.IntegralShiftTemplate()
            shift.fit(problem.obs0)
            summary["direct_front_speed"] = fit_front_speed(
                t_proj, front_positions(shift, [direct[round(t, 10)] for t in t_proj])
            )
    return SeedRun(seed, result, errors, direct, summary)


def step_rows(cfg: ScenarioConfig, run: SeedRun):
    rows = []
    for rec, err in zip(run.result.records, run.errors):
        last, proj = rec.frames[-1], rec.projected_frame
        row = {
            "seed": run.summary["seed"],
            "step": rec.step,
            "t1": rec.report_times[0],
            "t2": rec.report_times[-1],
            "t_project": rec.t_project,
            "tau_project": rec.tau_project,
            "d_tau": rec.d_tau,
            "beta": rec.beta,
            "C": last.C, "A": last.A, "B": last.B,
            "C_project": proj.C, "A_project": proj.A, "B_project": proj.B,
            "xi_A": rec.xi_A, "xi_B": rec.xi_B,
            "path": rec.path,
            "error": err,
        }
        if cfg.scenario == "nagumo_ssa":
            row.update(_fourier_extras(rec))
        rows.append(row)
    return rows


def _prefix(cfg: ScenarioConfig) -> str:
    return f"{cfg.scenario}_{cfg.mode}"


def run_scenario(cfg: ScenarioConfig, out=None) -> ScenarioResult:
    """Run every seed of ``cfg`` and write step, summary and config files."""
    require_valid(cfg)
    if cfg.scenario == "exponent_sweep":
        return run_exponent_sweep(cfg, out)
    seeds = list(cfg.seeds) if cfg.scenario in ("nagumo_ssa", "diffusion_walkers") else [None]
    runs = [run_seed(cfg, seed) for seed in seeds]
    target = output_dir(out or cfg.out or None)
    prefix = _prefix(cfg)
    columns = STEP_COLUMNS + (FOURIER_COLUMNS if cfg.scenario == "nagumo_ssa" else ())
    paths = {
        "steps": write_csv(target / f"{prefix}_steps.csv", "steps", columns,
                           [row for run in runs for row in step_rows(cfg, run)]),
        "summary": write_csv(target / f"{prefix}_summary.csv", "summary", SUMMARY_COLUMNS,
                             [run.summary for run in runs]),
        "config": _write_config(target / f"{prefix}_config.txt", cfg),
    }
    return ScenarioResult(cfg, runs, [run.summary for run in runs], paths)


def _write_config(path: Path, cfg: ScenarioConfig) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(format_config(cfg))
    return path


def function_label(cfg: ScenarioConfig) -> str:
    return f"beta_cdf(gamma={cfg.gamma:g},delta={cfg.delta:g})"


def run_exponent_sweep(cfg: ScenarioConfig, out=None) -> ScenarioResult:
    """Exponent estimates from walker bursts for every (A, dT, seed)."""
    require_valid(cfg)
    grid = grid_of(cfg)
    phi0 = beta_cdf_test_function(cfg.gamma, cfg.delta, grid)
    tf_id = function_label(cfg)
    rows, summary = [], []
    for A in cfg.A_list:
        for dT in cfg.dT_list:
            estimates = []
            for seed in cfg.seeds:
                sim = WalkerBurstSimulator(P=cfg.walkers, dt=cfg.dt, seed=seed)
                est = estimate_exponent(sim, phi0, A, dT, tf_id)
                estimates.append(est.a)
                rows.append({"test_function_id": tf_id, "A": float(A), "dT": float(dT),
                             "seed": seed, "a": est.a, "residual": est.residual})
            mean, stderr = mean_and_stderr(estimates)
            summary.append({"test_function_id": tf_id, "A": float(A), "dT": float(dT),
                            "n_seeds": len(estimates), "a_mean": mean, "a_stderr": stderr})
    target = output_dir(out or cfg.out or None)
    paths = {
        "estimates": write_csv(target / "exponent_sweep_estimates.csv", "exponent_estimates",
                               SWEEP_COLUMNS, rows),
        "summary": write_csv(target / "exponent_sweep_summary.csv", "exponent_summary",
                             SWEEP_SUMMARY_COLUMNS, summary),
        "config": _write_config(target / "exponent_sweep_config.txt", cfg),
    }
    return ScenarioResult(cfg, rows, summary, paths)
