"""Stochastic inner simulators and their lifting / restriction maps.

Two particle models are provided: a spatial Gillespie (direct method)
simulation of Nagumo-type kinetics on a 1-D lattice, and unbiased random
walkers whose empirical CDF diffuses.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from pathlib import Path

import numba
import numpy as np
from scipy.signal import resample

from .exceptions import UnsupportedConfigurationError
from .field import Field1D, FourierCoeffs, Grid, fourier_synthesize, rotate_coefficients

SMOOTH_SITES = 601
SMOOTH_NODES = 101


def _as_rng(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


@dataclass(frozen=True)
class KineticRates:
    """Rate constants of the lattice model.

    Per site: 2N + H -> 3N (k1), 3N -> 2N + H (k_m1), N -> 0 (k2), and hops
    to each neighbour at rate ``d`` per particle.  ``N0`` is the particle
    count corresponding to unit density.
    """

    k1: float
    k_m1: float
    k2: float
    d: float
    N0: float = 1000.0

    def __post_init__(self):
        for name in ("k1", "k_m1", "k2", "d"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.N0 < 1:
            raise ValueError("N0 must be at least 1")

    @classmethod
    def nagumo(cls, alpha: float = 0.01, D: float = 1.0, h: float = 0.1, N0: float = 1000.0):
        """Rates whose mean-field limit is D u_xx + u (1 - u)(u - alpha)."""
        return cls(k1=1.0 + alpha, k_m1=1.0, k2=alpha, d=D / h**2, N0=N0)


@dataclass
class LatticeState:
    """Particle counts per lattice site; site k sits at x_min + k h."""

    counts: np.ndarray
    h: float = 0.1
    t: float = 0.0
    x_min: float = -30.0
    rng: np.random.Generator = field(default_factory=np.random.default_rng, repr=False)

    def __post_init__(self):
        counts = np.array(self.counts, dtype=np.int64)
        if counts.ndim != 1 or counts.size < 2:
            raise ValueError("need at least two lattice sites")
        if np.any(counts < 0):
            raise ValueError("particle counts must be non-negative")
        if not self.h > 0:
            raise ValueError("site spacing h must be positive")
        self.counts = counts
        self.rng = _as_rng(self.rng)

    @property
    def J(self) -> int:
        return self.counts.size

    @property
    def x(self) -> np.ndarray:
        return self.x_min + self.h * np.arange(self.J)

    @property
    def x_max(self) -> float:
        return self.x_min + self.h * (self.J - 1)


@dataclass
class WalkerState:
    positions: np.ndarray
    t: float = 0.0
    rng: np.random.Generator = field(default_factory=np.random.default_rng, repr=False)

    def __post_init__(self):
        positions = np.array(self.positions, dtype=float)
        if positions.ndim != 1 or positions.size == 0:
            raise ValueError("need at least one walker")
        if not np.all(np.isfinite(positions)):
            raise ValueError("walker positions must be finite")
        self.positions = positions
        self.rng = _as_rng(self.rng)

    @property
    def P(self) -> int:
        return self.positions.size


def nagumo_lattice(J: int = SMOOTH_SITES, h: float = 0.1, N0: int = 1000, x_min=-30.0, rng=None):
    """Ramp initial condition: empty up to site 201, linear ramp to N0 at site 401, full beyond."""
    i = np.arange(1, J + 1)
    lo, hi = (J - 1) // 3 + 1, 2 * (J - 1) // 3 + 1
    counts = np.clip(np.rint(N0 * (i - lo) / (hi - lo)), 0, N0).astype(np.int64)
    return LatticeState(counts, h=h, x_min=x_min, rng=rng)


# Gillespie direct method.  Channels are ordered site-major:
# birth, autocatalytic death, decay, hop right, hop left.


@numba.njit(cache=True, inline="always")
def _channel(n, i, J, ch, k1, km1, k2, d, N0):
    if ch == 0:
        return k1 * n * (n - 1) / N0
    if ch == 1:
        return km1 * n * (n - 1) * (n - 2) / (N0 * N0)
    if ch == 2:
        return k2 * n
    if ch == 3:
        return d * n if i < J - 1 else 0.0
    return d * n if i > 0 else 0.0


@numba.njit(cache=True, inline="always")
def _site_total(n, i, J, k1, km1, k2, d, N0):
    s = 0.0
    for ch in range(5):
        s += _channel(n, i, J, ch, k1, km1, k2, d, N0)
    return s


@numba.njit(cache=True, inline="always")
def _fire(counts, i, ch):
    """Apply channel ``ch`` at site ``i``; return the other touched site or -1."""
    if ch == 0:
        counts[i] += 1
        return -1
    counts[i] -= 1
    if ch == 3:
        counts[i + 1] += 1
        return i + 1
    if ch == 4:
        counts[i - 1] += 1
        return i - 1
    return -1


@numba.njit(cache=True)
def _ssa_tree(counts, t, t_end, k1, km1, k2, d, N0, seed):
    np.random.seed(seed)
    J = counts.shape[0]
    size = 1
    while size < J:
        size *= 2
    tree = np.zeros(2 * size)
    for i in range(J):
        tree[size + i] = _site_total(counts[i], i, J, k1, km1, k2, d, N0)
    for node in range(size - 1, 0, -1):
        tree[node] = tree[2 * node] + tree[2 * node + 1]
    n_events = 0
    while True:
        a0 = tree[1]
        if a0 <= 0.0:
            break
        t += -np.log(1.0 - np.random.random()) / a0
        if t > t_end:
            break
        target = np.random.random() * a0
        node = 1
        while node < size:
            left = 2 * node
            if target < tree[left]:
                node = left
            else:
                target -= tree[left]
                node = left + 1
        i = node - size
        if i >= J:  # rounding pushed the target past the last site
            i = J - 1
        ch = 0
        while ch < 4:
            p = _channel(counts[i], i, J, ch, k1, km1, k2, d, N0)
            if target < p:
                break
            target -= p
            ch += 1
        j = _fire(counts, i, ch)
        for s in (i, j):
            if s < 0:
                continue
            node = size + s
            tree[node] = _site_total(counts[s], s, J, k1, km1, k2, d, N0)
            node //= 2
            while node >= 1:
                tree[node] = tree[2 * node] + tree[2 * node + 1]
                node //= 2
        n_events += 1
    return n_events


@numba.njit(cache=True)
def _ssa_scan(counts, t, t_end, k1, km1, k2, d, N0, seed):
    np.random.seed(seed)
    J = counts.shape[0]
    n_events = 0
    while True:
        a0 = 0.0
        for i in range(J):
            a0 += _site_total(counts[i], i, J, k1, km1, k2, d, N0)
        if a0 <= 0.0:
            break
        t += -np.log(1.0 - np.random.random()) / a0
        if t > t_end:
            break
        target = np.random.random() * a0
        sel_i, sel_ch = J - 1, 4
        found = False
        for i in range(J):
            for ch in range(5):
                p = _channel(counts[i], i, J, ch, k1, km1, k2, d, N0)
                if target < p:
                    sel_i, sel_ch = i, ch
                    found = True
                    break
                target -= p
            if found:
                break
        _fire(counts, sel_i, sel_ch)
        n_events += 1
    return n_events


def ssa_run(
    s: LatticeState, r: KineticRates, t_end: float, method: str = "tree"
) -> LatticeState:
    """Run the spatial SSA from ``s.t`` to ``t_end``.

    ``method="tree"`` selects channels through a binary propensity index;
    ``"scan"`` is the O(J) linear scan over the same channel order and is
    meant as a reference for small lattices.  The kernel is seeded from
    ``s.rng``, so a state built from the same seed reproduces its output.
    """
    if t_end < s.t:
        raise ValueError(f"t_end={t_end} precedes the state time {s.t}")
    kernels = {"tree": _ssa_tree, "scan": _ssa_scan}
    if method not in kernels:
        raise ValueError(f"unknown SSA method {method!r}")
    counts = s.counts.copy()
    seed = int(s.rng.integers(0, 2**32 - 1))
    kernels[method](counts, float(s.t), float(t_end), r.k1, r.k_m1, r.k2, r.d, float(r.N0), seed)
    if np.any(counts < 0):
        raise RuntimeError("SSA produced a negative particle count")
    return replace(s, counts=counts, t=float(t_end))


# restriction / lifting for the lattice


def restrict_smooth(s: LatticeState) -> Field1D:
    """Local averages of the 601 site counts onto 101 nodes.

    Node 1 averages sites 1-4, node i averages sites 6i-9 .. 6i-3 and
    node 101 averages sites 598-601 (1-based).
    """
    if s.J != SMOOTH_SITES:
        raise UnsupportedConfigurationError(
            f"local averaging is defined for {SMOOTH_SITES} sites, got {s.J}"
        )
    N = s.counts.astype(float)
    M = np.empty(SMOOTH_NODES)
    M[0] = N[0:4].mean()
    for i in range(2, SMOOTH_NODES):
        M[i - 1] = N[6 * i - 10 : 6 * i - 3].mean()
    M[-1] = N[597:601].mean()
    return Field1D(s.x_min, s.x_max, SMOOTH_NODES, M)


def diff_distribution(M: Field1D) -> Field1D:
    """f_1 = M_1, f_j = M_j - M_(j-1)."""
    return M.with_values(np.diff(M.values, prepend=0.0))


def band_limited_interpolate(values: np.ndarray, factor: int) -> np.ndarray:
    """Refine samples (end points included) by an integer factor.

    The linear trend between the end samples is removed first so that the
    remainder is continuous as a periodic sequence; it is then resampled with
    FFT zero padding and the trend is added back.
    """
    values = np.asarray(values, dtype=float)
    n = values.size
    ramp = np.linspace(values[0], values[-1], n)
    resid = values - ramp
    fine_n = (n - 1) * factor + 1
    fine = np.empty(fine_n)
    fine[:-1] = resample(resid[:-1], (n - 1) * factor)
    fine[-1] = resid[-1]
    return fine + np.linspace(values[0], values[-1], fine_n)


def lift_fourier(
    c: FourierCoeffs,
    shift: float = 0.0,
    J: int = SMOOTH_SITES,
    *,
    x_min: float = -30.0,
    t: float = 0.0,
    rng=None,
) -> LatticeState:
    """Lattice counts consistent with co-traveling Fourier coefficients.

    ``c`` describes the difference distribution in the frame shifted by
    ``shift``.  The unshifted difference distribution is synthesised on the
    averaging nodes, summed into the node profile, refined to the lattice,
    aligned with the averaging windows of :func:`restrict_smooth` and rounded
    to non-negative integers.
    """
    if (J - 1) % (SMOOTH_NODES - 1):
        raise UnsupportedConfigurationError(f"{J} sites do not refine {SMOOTH_NODES} nodes")
    grid = Grid(x_min, x_min + c.L, SMOOTH_NODES)
    f = fourier_synthesize(rotate_coefficients(c, -shift), grid)
    M = np.cumsum(f.values)
    fine = band_limited_interpolate(M, (J - 1) // (SMOOTH_NODES - 1))
    # interior averaging windows are centred one site left of their node, so
    # node values describe the lattice one site to the left
    fine = np.append(fine[1:], fine[-1])
    counts = np.maximum(np.rint(fine), 0).astype(np.int64)
    h = c.L / (J - 1)
    return LatticeState(counts, h=h, t=t, x_min=x_min, rng=_as_rng(rng))


# random walkers


def walker_run(s: WalkerState, dt: float, n_steps: int) -> WalkerState:
    """Advance every walker by ``n_steps`` unbiased jumps of size sqrt(2 dt).

    The sum of the jumps is drawn directly from its binomial law, which is
    the same distribution as stepping one jump at a time.
    """
    if n_steps < 0:
        raise ValueError("n_steps must be non-negative")
    if n_steps == 0:
        return replace(s)
    jump = np.sqrt(2.0 * dt)
    right = s.rng.binomial(n_steps, 0.5, size=s.P)
    positions = s.positions + jump * (2.0 * right - n_steps)
    return replace(s, positions=positions, t=s.t + n_steps * dt)


def cdf_restrict(s: WalkerState, grid: Grid | Field1D) -> Field1D:
    """Fraction of walkers at or left of each node."""
    if isinstance(grid, Field1D):
        grid = grid.grid
    ordered = np.sort(s.positions)
    counts = np.searchsorted(ordered, grid.x, side="right")
    return Field1D.on_grid(grid, counts / s.P)


def lift_from_cdf(f: Field1D, P: int, *, t: float = 0.0, rng=None) -> WalkerState:
    """Deterministic walker placement consistent with a CDF.

    Walkers sit at the quantiles (j - 1/2)/P of the piecewise-linear
    interpolant of ``f``, i.e. uniformly within each cell according to the
    cell's share of the mass.  Mass outside the grid is dropped.
    """
    if P < 1:
        raise ValueError("need at least one walker")
    v = np.asarray(f.values, dtype=float)
    if np.any(np.diff(v) < -1e-12):
        raise ValueError("CDF must be non-decreasing")
    v = np.maximum.accumulate(v)
    total = v[-1] - v[0]
    if not total > 0:
        raise ValueError("CDF carries no mass inside the grid")
    q = v[0] + (np.arange(P) + 0.5) / P * total
    # first node at or above each quantile; the cell to its left holds it
    k = np.clip(np.searchsorted(v, q, side="left"), 1, v.size - 1)
    v0, v1 = v[k - 1], v[k]
    positions = f.x[k - 1] + (q - v0) / (v1 - v0) * f.dx
    return WalkerState(positions, t=t, rng=_as_rng(rng))


# snapshots


def export_lattice_csv(s: LatticeState, path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["site", "count"])
        writer.writerows((i + 1, int(n)) for i, n in enumerate(s.counts))
    return path


def export_walkers_csv(s: WalkerState, path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["particle", "position"])
        writer.writerows((i + 1, repr(float(p))) for i, p in enumerate(s.positions))
    return path
