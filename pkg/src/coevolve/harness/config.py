"""Scenario configuration: presets, flat ``key = value`` files and validation.

A config file holds one ``key = value`` pair per line; blank lines and
lines starting with ``#`` are ignored.  Unknown keys are errors.  Values
override the preset of the selected scenario.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from ..exceptions import ConfigurationError

SCENARIOS = (
    "nagumo_pde",
    "nagumo_ssa",
    "diffusion_pde",
    "diffusion_walkers",
    "burgers_asymptotic",
    "exponent_sweep",
)
MODES = ("fixed", "cotraveling", "renormalized", "asymptotic")
TEMPLATES = ("none", "integral_shift", "fourier_phase", "mass_step", "cdf_fraction", "centroid_moment_mass")
STOCHASTIC = ("nagumo_ssa", "diffusion_walkers", "exponent_sweep")


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: str = "nagumo_pde"
    mode: str = "cotraveling"
    template: str = "integral_shift"
    # grid
    x_min: float = -30.0
    x_max: float = 30.0
    n_nodes: int = 601
    # inner stepping
    dt: float = 1e-4
    method: str = "tree"
    # outer loop
    dt_report: float = 0.1
    horizon: float = 0.3
    t_skip: float = 0.1
    t_end: float = 15.0
    window: int = 2
    a: float = -2.0
    b: float = 1.0
    # model parameters
    alpha: float = 0.01
    D: float = 1.0
    kappa: float = 0.025
    # lattice and particles
    J: int = 601
    h: float = 0.1
    N0: float = 1000.0
    K: int = 15
    walkers: int = 1_000_000
    # templates and test functions
    zeta1: float = -0.25
    zeta2: float = 0.5
    gamma: float = 8.0
    delta: float = 10.0
    A_list: tuple = (1.15,)
    dT_list: tuple = (0.01,)
    # run control
    seeds: tuple = ()
    direct: bool = True
    out: str = ""

    def as_dict(self) -> dict:
        return asdict(self)


PRESETS = {
    "nagumo_pde": ScenarioConfig(),
    "nagumo_ssa": ScenarioConfig(
        scenario="nagumo_ssa",
        template="fourier_phase",
        dt_report=0.25,
        horizon=0.5,
        t_skip=0.25,
        window=5,
        seeds=(0,),
        direct=False,
    ),
    "diffusion_pde": ScenarioConfig(
        scenario="diffusion_pde",
        mode="renormalized",
        template="mass_step",
        x_min=-10.0,
        x_max=10.0,
        n_nodes=1001,
        dt=2e-5,
        dt_report=0.1,
        horizon=0.2,
        t_skip=0.1,
        t_end=4.0,
    ),
    "diffusion_walkers": ScenarioConfig(
        scenario="diffusion_walkers",
        mode="renormalized",
        template="cdf_fraction",
        x_min=-10.0,
        x_max=10.0,
        n_nodes=1001,
        dt=1e-4,
        dt_report=0.05,
        horizon=0.1,
        t_skip=0.05,
        t_end=2.0,
        seeds=(0,),
    ),
    "burgers_asymptotic": ScenarioConfig(
        scenario="burgers_asymptotic",
        mode="asymptotic",
        template="centroid_moment_mass",
        x_min=-10.0,
        x_max=10.0,
        n_nodes=1001,
        dt=1e-5,
        dt_report=0.1,
        horizon=0.2,
        t_skip=0.0,
        t_end=9.9,
    ),
    "exponent_sweep": ScenarioConfig(
        scenario="exponent_sweep",
        mode="fixed",
        template="none",
        x_min=-10.0,
        x_max=10.0,
        n_nodes=1001,
        dt=1e-4,
        seeds=tuple(range(8)),
        direct=False,
    ),
}

# template used when a scenario runs in a co-evolving mode
DEFAULT_TEMPLATE = {name: PRESETS[name].template for name in SCENARIOS}
DEFAULT_TEMPLATE["nagumo_pde"] = "integral_shift"

_FIELD_TYPES = {f.name: f.type for f in fields(ScenarioConfig)}


def preset(scenario: str) -> ScenarioConfig:
    if scenario not in PRESETS:
        raise ConfigurationError(f"unknown scenario {scenario!r}; expected one of {SCENARIOS}")
    return PRESETS[scenario]


def _convert(key: str, raw: str):
    kind = _FIELD_TYPES[key]
    raw = raw.strip()
    if kind == "float":
        return float(raw)
    if kind == "int":
        value = float(raw)
        if value != int(value):
            raise ValueError(f"expected an integer, got {raw!r}")
        return int(value)
    if kind == "bool":
        low = raw.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"expected a boolean, got {raw!r}")
    if kind == "tuple":
        parts = [p for p in raw.replace(",", " ").split() if p]
        cast = int if key == "seeds" else float
        return tuple(cast(p) for p in parts)
    return raw


def parse_config_text(text: str, source: str = "<config>") -> dict:
    """Parse ``key = value`` lines into typed values; errors name the line."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigurationError(f"{source}:{lineno}: expected 'key = value', got {stripped!r}")
        key, raw = (s.strip() for s in stripped.split("=", 1))
        if key not in _FIELD_TYPES:
            raise ConfigurationError(f"{source}:{lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigurationError(f"{source}:{lineno}: duplicate key {key!r}")
        try:
            values[key] = _convert(key, raw)
        except ValueError as err:
            raise ConfigurationError(f"{source}:{lineno}: bad value for {key!r}: {err}") from err
    return values


def build_config(scenario: str | None = None, path=None, **overrides) -> ScenarioConfig:
    """Preset of ``scenario`` updated by a config file and then by ``overrides``.

    The scenario may also come from the file's ``scenario`` key.  A mode
    override without an explicit template picks the scenario's default
    co-evolving template (or none for the fixed mode).
    """
    file_values = {}
    if path is not None:
        path = Path(path)
        file_values = parse_config_text(path.read_text(), str(path))
    name = scenario or file_values.get("scenario") or "nagumo_pde"
    if scenario and file_values.get("scenario", scenario) != scenario:
        raise ConfigurationError(
            f"config file is for scenario {file_values['scenario']!r}, not {scenario!r}"
        )
    updates = {**file_values, **{k: v for k, v in overrides.items() if v is not None}}
    updates.pop("scenario", None)
    unknown = set(updates) - set(_FIELD_TYPES)
    if unknown:
        raise ConfigurationError(f"unknown keys: {sorted(unknown)}")
    cfg = replace(preset(name), **updates, scenario=name)
    if "mode" in updates and "template" not in updates:
        template = "none" if cfg.mode == "fixed" else DEFAULT_TEMPLATE[name]
        cfg = replace(cfg, template=template)
    return cfg


def stability_limit(cfg: ScenarioConfig) -> float | None:
    """Largest inner step of the explicit scheme, or None for particle scenarios."""
    dx = (cfg.x_max - cfg.x_min) / (cfg.n_nodes - 1)
    if cfg.scenario in ("nagumo_pde", "diffusion_pde"):
        return dx * dx / (2.0 * cfg.D)
    if cfg.scenario == "burgers_asymptotic":
        # initial amplitude is one; the diffusivity only decays afterwards
        return dx * dx / (2.0 * cfg.kappa * 2.0)
    return None


def validate_config(cfg: ScenarioConfig) -> list[str]:
    """Diagnostics for ``cfg``; an empty list means the configuration is usable."""
    problems = []
    if cfg.scenario not in SCENARIOS:
        return [f"unknown scenario {cfg.scenario!r}"]
    if cfg.mode not in MODES:
        problems.append(f"unknown mode {cfg.mode!r}; expected one of {MODES}")
    if cfg.template not in TEMPLATES:
        problems.append(f"unknown template {cfg.template!r}; expected one of {TEMPLATES}")
    if cfg.mode == "fixed" and cfg.template != "none" and cfg.scenario != "exponent_sweep":
        problems.append("fixed mode projects in the laboratory frame; set template = none")
    if cfg.mode != "fixed" and cfg.template == "none":
        problems.append(f"mode {cfg.mode} needs a template")
    if cfg.mode == "asymptotic" and cfg.template not in ("centroid_moment_mass",):
        problems.append("asymptotic mode needs the centroid_moment_mass template")
    if cfg.mode == "renormalized" and cfg.template not in ("mass_step", "cdf_fraction", "centroid_moment_mass"):
        problems.append(f"renormalized mode needs a scale template, got {cfg.template}")
    if cfg.mode == "cotraveling" and cfg.template not in ("integral_shift", "fourier_phase", "centroid_moment_mass"):
        problems.append(f"cotraveling mode needs a shift template, got {cfg.template}")
    if cfg.scenario == "nagumo_ssa" and cfg.template not in ("none", "fourier_phase"):
        problems.append("nagumo_ssa observes Fourier coefficients; use template fourier_phase or none")
    if not cfg.x_max > cfg.x_min:
        problems.append("x_max must exceed x_min")
    if cfg.n_nodes < 3:
        problems.append("n_nodes must be at least 3")
    if not cfg.dt > 0:
        problems.append("dt must be positive")
    limit = stability_limit(cfg) if cfg.x_max > cfg.x_min and cfg.n_nodes >= 3 else None
    if limit is not None and not cfg.dt < limit:
        problems.append(
            f"stability criterion 2*D*dt < dx^2 violated: dt={cfg.dt:g} must be below {limit:g}"
        )
    if not cfg.dt_report > 0:
        problems.append("dt_report must be positive")
    if cfg.horizon < 0:
        problems.append("horizon must be non-negative")
    if cfg.t_skip < 0:
        problems.append("t_skip must be non-negative")
    if cfg.t_end < 0:
        problems.append("t_end must be non-negative")
    if cfg.window < 2:
        problems.append("window must be at least 2")
    if cfg.window > 2 and cfg.mode in ("renormalized", "asymptotic"):
        problems.append("window > 2 is only supported in fixed and cotraveling modes")
    if not 0 < cfg.alpha < 0.5:
        problems.append("alpha must lie in (0, 1/2)")
    if not (cfg.D > 0 and cfg.kappa > 0):
        problems.append("D and kappa must be positive")
    if not cfg.zeta1 < cfg.zeta2:
        problems.append("zeta1 must be below zeta2")
    if cfg.scenario == "nagumo_ssa":
        if cfg.J != 601:
            problems.append("the averaging restriction is defined for J = 601 sites only")
        if not (1 <= cfg.K and 2 * cfg.K < 100):
            problems.append("K must satisfy 1 <= K < 50 on 101 averaging nodes")
        if cfg.N0 < 1 or not cfg.h > 0:
            problems.append("N0 must be >= 1 and h positive")
    if cfg.scenario in ("diffusion_walkers", "exponent_sweep") and cfg.walkers < 1:
        problems.append("walkers must be positive")
    if cfg.scenario == "exponent_sweep":
        if not cfg.A_list or any(A <= 0 or A == 1 for A in cfg.A_list):
            problems.append("A_list needs positive values different from 1")
        if not cfg.dT_list or any(d <= 0 for d in cfg.dT_list):
            problems.append("dT_list needs positive values")
        if not (cfg.gamma > 0 and cfg.delta > 0):
            problems.append("gamma and delta must be positive")
    if cfg.scenario in STOCHASTIC and not cfg.seeds:
        problems.append(f"scenario {cfg.scenario} is stochastic and needs at least one seed")
    if cfg.method not in ("tree", "scan"):
        problems.append("method must be tree or scan")
    return problems


def require_valid(cfg: ScenarioConfig) -> ScenarioConfig:
    problems = validate_config(cfg)
    if problems:
        raise ConfigurationError("; ".join(problems))
    return cfg


def format_config(cfg: ScenarioConfig) -> str:
    """Render ``cfg`` in the file format accepted by :func:`parse_config_text`."""
    lines = []
    for key, value in cfg.as_dict().items():
        if isinstance(value, tuple):
            value = ", ".join(str(v) for v in value)
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"
