"""Explicit monotone finite-difference scheme for the terminal-value Isaacs problem

    u_t + H(t, x, Du, D²u, u(t, ·)) = 0,   u(T, ·) = g,

with ``H`` either ``plus`` (min over y of max over z) or ``minus`` (max over z
of min over y).

For each control pair the generator is discretised with central second
differences (Kushner's stencil for the mixed derivative in 2-D), upwind first
differences chosen by the sign of the compensated drift
``b − Σ_j weight_j η_j``, and the jump integral ``Σ_j weight_j [u(x + η_j) − u(x)]``
evaluated by multilinear interpolation.  Every neighbour coefficient is then
non-negative, and the step ``u ← u + Δt · minmax(generator)`` is monotone as
long as ``Δt`` times the largest diagonal rate stays below one.  Outside the
box the solution is extended by its boundary value.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np
from scipy.ndimage import map_coordinates

from .errors import CFLViolation, ConfigError
from .grid import SpatialGrid
from .hamiltonian import GridField

CHOICES = ("plus", "minus")


@dataclass(frozen=True)
class SchemeConfig:
    cfl_safety: float = 0.9
    dt_max: float | None = None
    hamiltonian_choice: str = "plus"
    upwind: bool = field(default=True, init=False)

    def __post_init__(self):
        if not 0 < self.cfl_safety <= 1:
            raise ConfigError("cfl_safety must lie in (0, 1]", "scheme.cfl_safety")
        if self.hamiltonian_choice not in CHOICES:
            raise ConfigError("hamiltonian_choice must be 'plus' or 'minus'", "scheme.hamiltonian_choice")
        if self.dt_max is not None and not self.dt_max > 0:
            raise ConfigError("dt_max must be positive", "scheme.dt_max")

    def to_dict(self):
        return {"cfl_safety": self.cfl_safety, "dt_max": self.dt_max,
                "hamiltonian_choice": self.hamiltonian_choice}

    def fingerprint(self, grid: SpatialGrid | None = None, quadrature=None) -> str:
        blob = self.to_dict()
        if grid is not None:
            blob["grid"] = grid.to_dict()
        if quadrature is not None:
            blob["quadrature"] = [quadrature.cutoff, len(quadrature), quadrature.total_mass]
        return hashlib.sha256(json.dumps(blob, sort_keys=True).encode()).hexdigest()[:16]


@dataclass(eq=False)
class ValueGrid:
    """Value-function samples ``values[k]`` on ``grid`` at ascending ``times[k]``."""

    times: np.ndarray
    values: np.ndarray
    grid: SpatialGrid
    hamiltonian_choice: str
    horizon: float
    problem_fingerprint: str = ""
    scheme_fingerprint: str = ""
    boundary_margin: float = 0.0

    def index_of(self, t: float, tol: float = 1e-9) -> int:
        k = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[k] - t) > tol:
            raise ValueError(f"time {t} is not on the value grid's time lattice")
        return k

    def slice_at(self, t: float) -> np.ndarray:
        return self.values[self.index_of(t)]

    def field(self, k: int) -> GridField:
        return GridField(self.grid, self.values[k])

    def nearest_index(self, t: float) -> int:
        if not -1e-12 <= t <= self.horizon + 1e-12:
            raise ValueError(f"time {t} outside [0, {self.horizon}]")
        return int(np.argmin(np.abs(self.times - t)))

    def value_at(self, t: float, x) -> np.ndarray:
        """Interpolated value on the slice nearest to ``t``."""
        return self.field(self.nearest_index(t)).value(np.atleast_2d(x))

    def to_csv(self, path):
        from .io import write_value_grid_csv
        write_value_grid_csv(self, path)


# -- stencil -----------------------------------------------------------------

def _stencil(u: np.ndarray, grid: SpatialGrid) -> dict:
    pad = np.pad(u, 1, mode="edge")
    if grid.dim == 1:
        return {"c": u.ravel(), "p0": pad[2:], "m0": pad[:-2]}
    inner = slice(1, -1)
    st = {
        "c": u.ravel(),
        "p0": pad[2:, inner], "m0": pad[:-2, inner],
        "p1": pad[inner, 2:], "m1": pad[inner, :-2],
        "pp": pad[2:, 2:], "mm": pad[:-2, :-2],
        "pm": pad[2:, :-2], "mp": pad[:-2, 2:],
    }
    return {k: v.ravel() for k, v in st.items()}


def _jump_terms(problem, grid, quadrature, t, pts, u, c, y, z):
    """Jump integral, compensator drift and diagonal rate for one control pair."""
    eta = problem.jump_field(t, pts, y, z, quadrature.nodes)
    w = quadrature.weights
    n_nodes, n, d = eta.shape
    shifted = (pts[None] + eta).reshape(-1, d)
    vals = map_coordinates(u, grid.to_index(shifted), order=1, mode="nearest").reshape(n_nodes, n)
    reach = np.sum(np.abs(eta) / np.asarray(grid.spacing), axis=2)
    return w @ (vals - c[None, :]), np.einsum("j,jnd->nd", w, eta), w @ np.minimum(reach, 1.0)


def _pair_terms(problem, grid, quadrature, t, pts, u, st, y, z, jump=None):
    """Generator and diagonal rate of the scheme for one frozen control pair.

    ``jump`` may carry precomputed output of ``_jump_terms`` when the jump
    coefficient does not depend on the controls.
    """
    h = grid.spacing
    c = st["c"]
    sigma = problem.diffusion_field(t, pts, y, z)
    a = 0.5 * np.einsum("nik,njk->nij", sigma, sigma)
    b = problem.drift_field(t, pts, y, z)
    gen = np.array(problem.cost_field(t, pts, y, z), dtype=float)
    rate = np.zeros_like(gen)

    for ax in range(grid.dim):
        p, m = st[f"p{ax}"], st[f"m{ax}"]
        gen += a[:, ax, ax] * (p - 2 * c + m) / h[ax] ** 2
        rate += 2 * a[:, ax, ax] / h[ax] ** 2
    if grid.dim == 2:
        a12 = a[:, 0, 1]
        hh = h[0] * h[1]
        axis_sum = st["p0"] + st["m0"] + st["p1"] + st["m1"]
        gen += np.maximum(a12, 0) * (2 * c + st["pp"] + st["mm"] - axis_sum) / hh
        gen += np.maximum(-a12, 0) * (2 * c + st["pm"] + st["mp"] - axis_sum) / hh
        rate -= 2 * np.abs(a12) / hh
        slack = np.minimum(a[:, 0, 0] / h[0] ** 2, a[:, 1, 1] / h[1] ** 2) - np.abs(a12) / hh
        if np.any(slack < -1e-12):
            raise ConfigError("diffusion is not diagonally dominant on this grid; the mixed "
                              "stencil would not be monotone", "grid.dx")

    if not problem.jump.is_zero:
        if jump is None:
            jump = _jump_terms(problem, grid, quadrature, t, pts, u, c, y, z)
        j_gen, j_drift, j_rate = jump
        gen += j_gen
        b = b - j_drift
        rate += j_rate

    for ax in range(grid.dim):
        bp = np.maximum(b[:, ax], 0.0)
        bm = np.minimum(b[:, ax], 0.0)
        gen += bp * (st[f"p{ax}"] - c) / h[ax] + bm * (c - st[f"m{ax}"]) / h[ax]
        rate += np.abs(b[:, ax]) / h[ax]
    return gen, rate


def _all_pairs(problem, grid, quadrature, t, u):
    pts = grid.points
    st = _stencil(u, grid)
    ys, zs = problem.control_grid_y, problem.control_grid_z
    jump = None
    if not problem.jump.is_zero and not problem.jump.family.uses_controls:
        jump = _jump_terms(problem, grid, quadrature, t, pts, u, st["c"], ys[0], zs[0])
    gens = np.empty((len(ys), len(zs), grid.size))
    max_rate = 0.0
    for i, y in enumerate(ys):
        for j, z in enumerate(zs):
            gens[i, j], rate = _pair_terms(problem, grid, quadrature, t, pts, u, st, y, z, jump)
            max_rate = max(max_rate, float(rate.max()))
    return gens, max_rate


def _reduce(gens: np.ndarray, choice: str) -> np.ndarray:
    if choice == "plus":
        return gens.max(axis=1).min(axis=0)
    return gens.min(axis=0).max(axis=0)


def cfl_timestep(problem, grid: SpatialGrid, quadrature, config: SchemeConfig) -> float:
    """Largest step keeping every scheme coefficient non-negative, times ``cfl_safety``."""
    zero = np.zeros(grid.shape)
    max_rate = 0.0
    for t in (0.0, 0.5 * problem.horizon, problem.horizon):
        max_rate = max(max_rate, _all_pairs(problem, grid, quadrature, t, zero)[1])
    cap = config.dt_max if config.dt_max is not None else problem.horizon
    if max_rate == 0.0:
        return float(cap)
    return float(min(config.cfl_safety / max_rate, cap))


def step_backward(problem, grid: SpatialGrid, quadrature, config: SchemeConfig,
                  slice_at_t1: np.ndarray, t0: float, t1: float) -> np.ndarray:
    """One explicit step from ``t1`` back to ``t0``; coefficients are frozen at ``t1``."""
    if not t0 < t1:
        raise ValueError("need t0 < t1")
    u = np.asarray(slice_at_t1, dtype=float).reshape(grid.shape)
    gens, max_rate = _all_pairs(problem, grid, quadrature, t1, u)
    dt = t1 - t0
    if dt * max_rate > 1.0 + 1e-9:
        raise CFLViolation(f"step {dt:.3e} exceeds the monotonicity limit {1.0 / max_rate:.3e}")
    return (u.ravel() + dt * _reduce(gens, config.hamiltonian_choice)).reshape(grid.shape)


def time_lattice(horizon: float, dt: float, checkpoints=None, start: float = 0.0) -> np.ndarray:
    """Ascending times from ``start`` to ``horizon`` hitting every checkpoint.

    Within each block the steps have size ``dt`` measured back from the block's
    right end; the last step of a block is shortened to land on its left end.
    """
    marks = {float(start), float(horizon)}
    if checkpoints is not None:
        marks.update(float(c) for c in checkpoints if start <= c <= horizon)
    marks = sorted(marks)
    out = [marks[-1]]
    for a, b in zip(marks[-2::-1], marks[:0:-1]):
        n = max(1, math.ceil((b - a) / dt - 1e-9))
        out.extend(b - k * dt for k in range(1, n))
        out.append(a)
    return np.array(out[::-1])


def advance(problem, grid, quadrature, config, u, times) -> list:
    """Step ``u`` (given at ``times[-1]``) back through ascending ``times``; returns all slices."""
    slices = [np.asarray(u, dtype=float).reshape(grid.shape)]
    for k in range(len(times) - 1, 0, -1):
        slices.append(step_backward(problem, grid, quadrature, config, slices[-1], times[k - 1], times[k]))
    return slices[::-1]


def boundary_margin(problem, grid, quadrature) -> float:
    """``max|η| + √T · max|σ|`` over grid nodes and control pairs."""
    pts = grid.points
    eta_max = sig_max = 0.0
    for y in problem.control_grid_y:
        for z in problem.control_grid_z:
            sig = problem.diffusion_field(0.0, pts, y, z)
            sig_max = max(sig_max, float(np.max(np.linalg.norm(sig, axis=(1, 2)))))
            if not problem.jump.is_zero:
                eta = problem.jump_field(0.0, pts, y, z, quadrature.nodes)
                eta_max = max(eta_max, float(np.max(np.linalg.norm(eta, axis=2))))
    return eta_max + math.sqrt(problem.horizon) * sig_max


def solve_terminal_value(problem, grid: SpatialGrid, quadrature, config: SchemeConfig,
                         checkpoints=None, terminal=None) -> ValueGrid:
    """March the scheme from ``u(T) = g`` down to ``t = 0`` and keep every slice.

    ``checkpoints`` forces the time lattice through extra times (used to line
    the solver up with a partition); ``terminal`` replaces ``g`` by given node values.
    """
    dt = cfl_timestep(problem, grid, quadrature, config)
    times = time_lattice(problem.horizon, dt, checkpoints)
    if terminal is None:
        u_T = problem.terminal_field(grid.points).reshape(grid.shape)
    else:
        u_T = np.asarray(terminal, dtype=float).reshape(grid.shape)
    slices = advance(problem, grid, quadrature, config, u_T, times)
    return ValueGrid(
        times=times,
        values=np.stack(slices),
        grid=grid,
        hamiltonian_choice=config.hamiltonian_choice,
        horizon=problem.horizon,
        problem_fingerprint=problem.fingerprint(),
        scheme_fingerprint=config.fingerprint(grid, quadrature),
        boundary_margin=boundary_margin(problem, grid, quadrature),
    )


class Regularity(NamedTuple):
    lip_x: float
    holder_t: float


def regularity_report(vg: ValueGrid, max_slices: int = 200, margin: float | None = None) -> Regularity:
    """Empirical Lipschitz constant in x and Hölder-½ constant in t.

    Only nodes at least ``margin`` (default: the value grid's boundary margin)
    away from the box faces are used.  The time quotient is taken over all
    pairs among at most ``max_slices`` evenly spaced slices.
    """
    if len(vg.times) < 2:
        raise ValueError("need at least two time slices")
    mask = vg.grid.interior_mask(vg.boundary_margin if margin is None else margin)
    if not mask.any():
        raise ValueError("boundary margin leaves no interior nodes")
    lip = 0.0
    for ax, h in enumerate(vg.grid.spacing):
        diffs = np.abs(np.diff(vg.values, axis=ax + 1)) / h
        both = np.logical_and(np.take(mask, range(mask.shape[ax] - 1), axis=ax),
                              np.take(mask, range(1, mask.shape[ax]), axis=ax))
        if both.any():
            lip = max(lip, float(diffs[:, both].max()))
    idx = np.unique(np.round(np.linspace(0, len(vg.times) - 1, min(len(vg.times), max_slices))).astype(int))
    vals = vg.values[idx][:, mask]
    times = vg.times[idx]
    holder = 0.0
    for i in range(len(idx) - 1):
        num = np.abs(vals[i + 1:] - vals[i]).max(axis=1)
        holder = max(holder, float(np.max(num / np.sqrt(times[i + 1:] - times[i]))))
    return Regularity(lip, holder)


def comparison_check(problem, grid, quadrature, config, g1, g2, tol: float = 1e-12) -> bool:
    """Solve from ordered terminal data ``g1 <= g2``; true iff the solutions stay ordered."""
    g1 = np.asarray(g1, dtype=float).reshape(grid.shape)
    g2 = np.asarray(g2, dtype=float).reshape(grid.shape)
    if np.any(g1 > g2):
        raise ValueError("comparison_check needs g1 <= g2 at every node")
    u1 = solve_terminal_value(problem, grid, quadrature, config, terminal=g1).values
    u2 = solve_terminal_value(problem, grid, quadrature, config, terminal=g2).values
    return bool(np.all(u1 <= u2 + tol))


def with_choice(config: SchemeConfig, choice: str) -> SchemeConfig:
    return replace(config, hamiltonian_choice=choice)
