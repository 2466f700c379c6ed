"""Cross-checks of the numerical value function.

* the one-block operator ``S(t, τ)`` and the piecewise-constant recursion ``V_π``,
* the dynamic programming residual of a solved value grid,
* a Monte Carlo check of the verification inequalities along simulated paths.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .grid import SpatialGrid
from .hamiltonian import local_operator, _nonlocal
from .simulator import McEstimate, summarize, terminal_states
from .solver import (ValueGrid, _reduce, advance, cfl_timestep, solve_terminal_value,
                     time_lattice, with_choice)


@dataclass(frozen=True)
class Partition:
    points: tuple
    norm: float = 0.0

    def __post_init__(self):
        pts = tuple(float(p) for p in self.points)
        if len(pts) < 2:
            raise ValueError("a partition needs at least two points")
        if pts[0] != 0.0:
            raise ValueError("a partition must start at 0")
        if any(b <= a for a, b in zip(pts, pts[1:])):
            raise ValueError("partition points must be strictly ascending")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "norm", max(b - a for a, b in zip(pts, pts[1:])))

    @classmethod
    def uniform(cls, horizon: float, n: int) -> "Partition":
        pts = [horizon * k / n for k in range(n)] + [float(horizon)]
        return cls(tuple(pts))

    @property
    def horizon(self) -> float:
        return self.points[-1]


def _frozen_flow(problem, grid, quadrature, config, psi, times):
    """Values at ``times[0]`` for every frozen pair: array ``(M, N, *shape)``."""
    ys, zs = problem.control_grid_y, problem.control_grid_z
    out = np.empty((len(ys), len(zs)) + grid.shape)
    for i, y in enumerate(ys):
        for j, z in enumerate(zs):
            single = problem.with_controls([y], [z])
            out[i, j] = advance(single, grid, quadrature, config, psi, times)[0]
    return out


def semigroup_step(problem, quadrature, t: float, tau: float, psi, grid: SpatialGrid, config,
                   dt: float | None = None) -> np.ndarray:
    """``S(t, τ)ψ``: the reduced (min-max or max-min) value over frozen control pairs.

    Each pair ``(y, z)`` is held fixed on ``[t, τ]`` and its linear equation is
    integrated with the solver's one-step operator.  ``dt`` defaults to the
    solver's CFL step for the full problem, so that the sub-steps coincide with
    the solver's lattice when the block ends are checkpoints.
    """
    if not t < tau:
        raise ValueError("need t < tau")
    if dt is None:
        dt = cfl_timestep(problem, grid, quadrature, config)
    psi = np.asarray(psi, dtype=float).reshape(grid.shape)
    times = time_lattice(tau, dt, start=t)
    vals = _frozen_flow(problem, grid, quadrature, config, psi, times)
    reduced = _reduce(vals.reshape(vals.shape[:2] + (-1,)), config.hamiltonian_choice)
    return reduced.reshape(grid.shape)


def value_pi(problem, quadrature, partition: Partition, grid: SpatialGrid, config) -> ValueGrid:
    """``V_π`` at the partition points, composed backward from ``g`` at the horizon."""
    if abs(partition.horizon - problem.horizon) > 1e-12:
        raise ValueError("partition must end at the problem horizon")
    dt = cfl_timestep(problem, grid, quadrature, config)
    pts = partition.points
    slices = [problem.terminal_field(grid.points).reshape(grid.shape)]
    for a, b in zip(pts[-2::-1], pts[:0:-1]):
        slices.append(semigroup_step(problem, quadrature, a, b, slices[-1], grid, config, dt=dt))
    return ValueGrid(times=np.array(pts), values=np.stack(slices[::-1]), grid=grid,
                     hamiltonian_choice=config.hamiltonian_choice, horizon=problem.horizon,
                     problem_fingerprint=problem.fingerprint(),
                     scheme_fingerprint=config.fingerprint(grid, quadrature))


def _max_error(a, b, grid, margin):
    diff = np.abs(np.asarray(a) - np.asarray(b))
    if margin is not None:
        diff = diff[grid.interior_mask(margin)]
    return float(diff.max())


def vpi_convergence(problem, quadrature, partitions, grid: SpatialGrid, config,
                    margin: float | None = None) -> list:
    """``max |V_π(0, ·) − u(0, ·)|`` per partition.

    ``u`` is solved with the same min-max order as the semigroup and with the
    partition points as lattice checkpoints.  ``margin`` restricts the maximum
    to nodes at least that far from the box faces.
    """
    partitions = list(partitions)
    if len(partitions) < 3:
        raise ValueError("need at least three partitions")
    errors = []
    for part in partitions:
        vpi = value_pi(problem, quadrature, part, grid, config)
        u = solve_terminal_value(problem, grid, quadrature, config, checkpoints=part.points)
        errors.append(_max_error(vpi.values[0], u.values[0], grid, margin))
    return errors


def dpp_residual(problem, quadrature, vg: ValueGrid, tau: float, grid: SpatialGrid, config,
                 n_blocks: int | None = None, margin: float | None = None) -> float:
    """Interior ``max |W(0, ·) − vg(0, ·)|`` where ``W`` restarts from ``vg(τ, ·)``.

    ``W`` composes ``n_blocks`` semigroup steps over ``[0, τ]`` in ``vg``'s
    min-max order.  Block ends are taken from ``vg``'s own time nodes, so with
    singleton controls ``W`` retraces the solver and the residual isolates the
    error of freezing the controls on each block.  By default ``n_blocks`` is
    the square root of the number of solver steps in ``[0, τ]``, so the blocks
    shrink as the grid is refined.
    """
    if not 0.0 < tau < vg.horizon:
        raise ValueError("tau must lie strictly between 0 and the horizon")
    k = vg.index_of(tau)
    if n_blocks is None:
        n_blocks = math.ceil(math.sqrt(k))
    n_blocks = max(1, min(int(n_blocks), k))
    cfg = with_choice(config, vg.hamiltonian_choice)
    dt = cfl_timestep(problem, grid, quadrature, cfg)
    marks = vg.times[np.unique(np.round(np.linspace(0, k, n_blocks + 1)).astype(int))]
    w = vg.values[k]
    for a, b in zip(marks[-2::-1], marks[:0:-1]):
        w = semigroup_step(problem, quadrature, a, b, w, grid, cfg, dt=dt)
    if margin is None:
        margin = vg.boundary_margin
    return _max_error(w, vg.values[0], grid, margin)


def refinement_error(problem, quadrature, grid: SpatialGrid, config, x=None, t: float = 0.0,
                     margin: float = 0.0) -> float:
    """First-order Richardson estimate ``2 |u_h − u_{h/2}|`` of the solver error.

    With ``x`` given the estimate is taken at that point (and time ``t``);
    otherwise it is the maximum over coarse nodes at least ``margin`` inside the box.
    """
    fine = SpatialGrid.uniform(grid.lower, grid.upper, np.asarray(grid.spacing) / 2)
    coarse_vg = solve_terminal_value(problem, grid, quadrature, config)
    fine_vg = solve_terminal_value(problem, fine, quadrature, config)
    if x is not None:
        return 2.0 * float(np.max(np.abs(coarse_vg.value_at(t, x) - fine_vg.value_at(t, x))))
    on_coarse = fine_vg.field(0).value(grid.points).reshape(grid.shape)
    return 2.0 * _max_error(coarse_vg.values[0], on_coarse, grid, margin)


@dataclass
class VerificationReport:
    lhs_integral_u: float
    lhs_integral_v: float
    lhs_std_error_u: float
    lhs_std_error_v: float
    payoff: McEstimate
    value_u_at_start: float
    value_v_at_start: float
    scheme_error: float
    tolerance: float
    integral_tolerance: float
    integral_u_ok: bool
    integral_v_ok: bool
    sandwich_satisfied: bool

    def to_dict(self) -> dict:
        out = asdict(self)
        pay = out.pop("payoff")
        out.update({f"payoff_{k}": v for k, v in pay.items()})
        return out


_ROUNDOFF = 1e-9


class _JetIntegrand:
    """Accumulates ``∫ (p + ℒ + 𝒥) ds`` of one value grid along the simulated paths."""

    def __init__(self, problem, quadrature, vg: ValueGrid, n_paths: int):
        self.problem, self.quadrature, self.vg = problem, quadrature, vg
        self.total = np.zeros(n_paths)

    def __call__(self, k, t, dt, X, y, z, ids):
        vg, problem = self.vg, self.problem
        i = vg.nearest_index(t)
        j = i + 1 if i + 1 < len(vg.times) else i - 1
        now, later = vg.field(i), vg.field(j)
        p = (later.value(X) - now.value(X)) / (vg.times[j] - vg.times[i])
        q, A = now.gradient(X), now.hessian(X)
        val = p + local_operator(problem, t, X, q, A, y, z)
        if not problem.jump.is_zero:
            val = val + _nonlocal(problem, self.quadrature, t, X, now, y, z, now.value(X), q)
        self.total[ids] += val * dt


def verify_pair(problem, quadrature, vg_u: ValueGrid, vg_v: ValueGrid, policy_y, policy_z,
                t0: float, x0, n_paths: int, dt: float, seed: int,
                scheme_error: float = 0.0) -> VerificationReport:
    """Monte Carlo check of the verification inequalities and the value sandwich.

    Along paths driven by ``(policy_y, policy_z)`` the jets of each value grid
    (forward difference in time, central differences in space) give the
    integrand ``p + ℒ + 𝒥``; its time integral is averaged over paths.  The
    sandwich holds when the payoff is within ``3·std_error + scheme_error`` of
    both grid values at ``(t0, x0)``.
    """
    if vg_u.grid != vg_v.grid or abs(vg_u.horizon - vg_v.horizon) > 1e-12:
        raise ValueError("value grids are not compatible (different grids or horizons)")
    if abs(vg_u.horizon - problem.horizon) > 1e-12:
        raise ValueError("value grids do not match the problem horizon")
    jets = [_JetIntegrand(problem, quadrature, vg, n_paths) for vg in (vg_u, vg_v)]

    def observe(*args):
        for jet in jets:
            jet(*args)

    _, running, terminal = terminal_states(problem, quadrature, policy_y, policy_z, t0, x0,
                                           problem.horizon, dt, seed, n_paths, observer=observe)
    payoff = summarize(running + terminal, seed)
    iu, iv = (summarize(j.total, seed) for j in jets)
    value_u = float(vg_u.value_at(t0, x0)[0])
    value_v = float(vg_v.value_at(t0, x0)[0])
    tol = 3.0 * payoff.std_error + scheme_error
    # difference quotients of the grid carry roundoff of order eps / h^2
    itol = 3.0 * max(iu.std_error, iv.std_error) + scheme_error + _ROUNDOFF
    sandwich = abs(payoff.mean - value_u) <= tol and abs(payoff.mean - value_v) <= tol
    return VerificationReport(
        lhs_integral_u=iu.mean, lhs_integral_v=iv.mean,
        lhs_std_error_u=iu.std_error, lhs_std_error_v=iv.std_error,
        payoff=payoff, value_u_at_start=value_u, value_v_at_start=value_v,
        scheme_error=float(scheme_error), tolerance=tol, integral_tolerance=itol,
        integral_u_ok=bool(iu.mean <= itol),
        integral_v_ok=bool(iv.mean >= -itol),
        sandwich_satisfied=bool(sandwich),
    )
