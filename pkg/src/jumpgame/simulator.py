"""Euler simulation of the controlled jump-diffusion and Monte Carlo payoffs.

Paths are advanced together as a batch.  Every random draw is keyed by
``(seed, path_id, step, slot)`` (see :mod:`jumpgame.rng`), so path ``i`` is
the same whether it is simulated alone or inside a batch of a million.

Within an Euler step ``[t, t + Δ)`` the controls are read at the left end.
The continuous increment ``b Δ + σ √Δ ξ − (compensator) Δ`` is computed from
the left-end state.  Jumps arrive at sorted uniform times inside the step and
each uses the state just before it.

Slot layout per step: ``0 .. d−1`` Gaussian increments, ``d`` the jump count,
then ``d + 1 + 2k`` and ``d + 2 + 2k`` the time and mark of the ``k``-th jump.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import rng as keyed
from .hamiltonian import pair_values, saddle_from_values
from .levy import JumpEvent, compensator_drift

PLAYERS = ("minimizer", "maximizer")
_CHUNK = 1 << 15


@dataclass(frozen=True, eq=False)
class FeedbackPolicy:
    """State feedback ``(t, x) -> control`` for one player.

    Either a constant control, or the saddle-point control of the value grid's
    Hamiltonian evaluated on finite-difference jets of the grid.
    """

    player: str
    controls: tuple
    constant: float | None = None
    value_grid: object = None
    problem: object = None
    quadrature: object = None

    def __post_init__(self):
        if self.player not in PLAYERS:
            raise ValueError(f"player must be one of {PLAYERS}")
        if self.constant is None and self.value_grid is None:
            raise ValueError("policy needs a constant or a value grid")

    @classmethod
    def constant_control(cls, player: str, value: float, controls=None) -> "FeedbackPolicy":
        controls = (float(value),) if controls is None else tuple(float(c) for c in controls)
        if not any(abs(value - c) <= 1e-12 for c in controls):
            raise ValueError(f"control {value} is not in the grid {list(controls)}")
        return cls(player, controls, constant=float(value))

    def at(self, t: float, x):
        """Control at time ``t`` for one state ``(d,)`` (float) or many ``(n, d)`` (array)."""
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        pts = np.atleast_2d(x)
        if self.constant is not None:
            out = np.full(pts.shape[0], self.constant)
        else:
            out = self._from_grid(t, pts)
        return float(out[0]) if single else out

    def _from_grid(self, t, pts):
        vg, problem = self.value_grid, self.problem
        k = vg.nearest_index(t)
        view = vg.field(k)
        q = view.gradient(pts)
        A = view.hessian(pts)
        vals = pair_values(problem, self.quadrature, min(max(t, 0.0), problem.horizon), pts, q, A, view)
        saddle = saddle_from_values(problem, vals, vg.hamiltonian_choice)
        return np.asarray(saddle.y if self.player == "minimizer" else saddle.z, dtype=float)


def feedback_from_grid(vg, player: str, problem, quadrature=None) -> FeedbackPolicy:
    """Saddle-point feedback of ``vg``'s Hamiltonian for ``player``.

    With a singleton control grid the policy is that constant.
    """
    controls = problem.control_grid_y if player == "minimizer" else problem.control_grid_z
    if len(controls) == 1:
        return FeedbackPolicy(player, tuple(controls), constant=controls[0])
    return FeedbackPolicy(player, tuple(controls), value_grid=vg, problem=problem, quadrature=quadrature)


def constant_policies(problem, y=None, z=None):
    """Constant policies at the given controls (default: first grid entry)."""
    y = problem.control_grid_y[0] if y is None else y
    z = problem.control_grid_z[0] if z is None else z
    return (FeedbackPolicy.constant_control("minimizer", y, problem.control_grid_y),
            FeedbackPolicy.constant_control("maximizer", z, problem.control_grid_z))


@dataclass(eq=False)
class ControlledPath:
    times: np.ndarray
    states: np.ndarray
    controls: np.ndarray
    jumps: list = field(default_factory=list)
    running_cost: float = 0.0
    terminal_cost: float = 0.0
    jump_counts: np.ndarray | None = None
    path_id: int = 0

    @property
    def payoff(self) -> float:
        return self.running_cost + self.terminal_cost

    def __eq__(self, other):
        if not isinstance(other, ControlledPath):
            return NotImplemented
        return (np.array_equal(self.times, other.times) and np.array_equal(self.states, other.states)
                and np.array_equal(self.controls, other.controls) and self.jumps == other.jumps
                and self.running_cost == other.running_cost and self.terminal_cost == other.terminal_cost)


@dataclass(frozen=True)
class McEstimate:
    mean: float
    std_error: float
    n_paths: int
    seed: int


def step_times(t0: float, t1: float, dt: float) -> np.ndarray:
    """``t0, t0 + dt, ...`` up to ``t1``; the last step is shortened to land on ``t1``."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    if not t0 < t1:
        raise ValueError("need t0 < t1")
    n = max(1, math.ceil((t1 - t0) / dt - 1e-9))
    return np.append(t0 + dt * np.arange(n), t1)


def _check_start(problem, t0, x0):
    if not 0.0 <= t0 < problem.horizon:
        raise ValueError(f"t0 must lie in [0, {problem.horizon})")
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    if x0.shape != (problem.dim,):
        raise ValueError(f"x0 must have {problem.dim} components")
    return x0


def _apply_jumps(problem, quadrature, seed, ids, k, t, dt, X, y, z, record):
    """Draw this step's jumps and apply them in time order; returns counts and event lists."""
    n, d = X.shape
    counts = keyed.poisson_count(seed, ids, k, d, quadrature.total_mass * dt)
    events = [[] for _ in range(n)] if record else None
    kmax = int(counts.max()) if n else 0
    if kmax == 0:
        return counts, events
    slots = d + 1 + 2 * np.arange(kmax)
    u_time = keyed.uniform(seed, ids[:, None], k, slots[None, :])
    u_mark = keyed.uniform(seed, ids[:, None], k, slots[None, :] + 1)
    live = np.arange(kmax)[None, :] < counts[:, None]
    u_time = np.where(live, u_time, np.inf)
    order = np.argsort(u_time, axis=1, kind="stable")
    u_time = np.take_along_axis(u_time, order, axis=1)
    u_mark = np.take_along_axis(u_mark, order, axis=1)
    cdf = np.cumsum(quadrature.weights) / quadrature.total_mass
    marks = np.minimum(np.searchsorted(cdf, u_mark, side="right"), len(cdf) - 1)
    y = np.broadcast_to(y, (n,))
    z = np.broadcast_to(z, (n,))
    for i in range(kmax):
        rows = np.flatnonzero(counts > i)
        when = t + dt * u_time[rows, i]
        for j in np.unique(marks[rows, i]):
            sel = rows[marks[rows, i] == j]
            eta = problem.jump_field(t, X[sel], y[sel], z[sel], quadrature.nodes[j:j + 1])[0]
            X[sel] += eta
        if record:
            for r, s, j in zip(rows, when, marks[rows, i]):
                events[r].append(JumpEvent(float(s), tuple(quadrature.nodes[j].tolist())))
    return counts, events


def _simulate_batch(problem, quadrature, policy_y, policy_z, times, x0, seed, ids, record=False,
                    observer=None):
    n, d = len(ids), problem.dim
    X = np.tile(x0, (n, 1))
    running = np.zeros(n)
    has_jumps = quadrature is not None and not problem.jump.is_zero and quadrature.total_mass > 0
    slots = np.arange(d)
    if record:
        states, ctrl, counts_all = [X.copy()], [], []
        events = [[] for _ in range(n)]
    for k in range(len(times) - 1):
        t, dt = times[k], times[k + 1] - times[k]
        y = policy_y.at(t, X)
        z = policy_z.at(t, X)
        if observer is not None:
            observer(k, t, dt, X, y, z)
        incr = problem.drift_field(t, X, y, z) * dt
        if not problem.diffusion.is_zero:
            xi = keyed.normal(seed, ids[:, None], k, slots[None, :])
            incr = incr + math.sqrt(dt) * np.einsum("nij,nj->ni", problem.diffusion_field(t, X, y, z), xi)
        running += problem.cost_field(t, X, y, z) * dt
        if has_jumps:
            incr = incr - compensator_drift(quadrature, problem, t, X, y, z) * dt
            counts, ev = _apply_jumps(problem, quadrature, seed, ids, k, t, dt, X, y, z, record)
        else:
            counts, ev = np.zeros(n, dtype=np.int64), None
        X = X + incr
        if record:
            states.append(X.copy())
            ctrl.append(np.stack([np.broadcast_to(y, (n,)), np.broadcast_to(z, (n,))], axis=1))
            counts_all.append(counts)
            if ev is not None:
                for r in range(n):
                    events[r].extend(ev[r])
    terminal = problem.terminal_field(X)
    if not record:
        return running, terminal, X
    states = np.stack(states, axis=1)
    ctrl = np.stack(ctrl, axis=1) if ctrl else np.zeros((n, 0, 2))
    counts_all = np.stack(counts_all, axis=1)
    return [ControlledPath(times=times.copy(), states=states[i], controls=ctrl[i], jumps=events[i],
                           running_cost=float(running[i]), terminal_cost=float(terminal[i]),
                           jump_counts=counts_all[i], path_id=int(ids[i]))
            for i in range(n)]


def simulate_paths(problem, quadrature, policy_y, policy_z, t0, x0, dt, seed: int,
                   path_ids) -> list:
    """Recorded paths for the given path ids (each id owns its own substream)."""
    x0 = _check_start(problem, t0, x0)
    times = step_times(t0, problem.horizon, dt)
    ids = np.asarray(path_ids, dtype=np.int64).reshape(-1)
    return _simulate_batch(problem, quadrature, policy_y, policy_z, times, x0, seed, ids, record=True)


def simulate_path(problem, quadrature, policy_y, policy_z, t0, x0, dt, seed: int,
                  path_id: int = 0) -> ControlledPath:
    """One Euler path from ``(t0, x0)`` to the horizon."""
    return simulate_paths(problem, quadrature, policy_y, policy_z, t0, x0, dt, seed, [path_id])[0]


def terminal_states(problem, quadrature, policy_y, policy_z, t0, x0, t1, dt, seed, n_paths,
                    chunk: int = _CHUNK, observer=None):
    """States at ``t1``, running costs and terminal costs for paths ``0 .. n_paths − 1``.

    ``observer(k, t, dt, X, y, z, ids)`` is called at every step of every chunk.
    """
    x0 = _check_start(problem, t0, x0)
    times = step_times(t0, t1, dt)
    Xs, costs, terms = [], [], []
    for start in range(0, n_paths, chunk):
        ids = np.arange(start, min(start + chunk, n_paths), dtype=np.int64)
        hook = None if observer is None else (lambda *a, _ids=ids: observer(*a, _ids))
        running, terminal, X = _simulate_batch(problem, quadrature, policy_y, policy_z, times, x0,
                                               seed, ids, observer=hook)
        Xs.append(X)
        costs.append(running)
        terms.append(terminal)
    return np.concatenate(Xs), np.concatenate(costs), np.concatenate(terms)


def summarize(samples: np.ndarray, seed: int) -> McEstimate:
    n = len(samples)
    mean = float(np.mean(samples))
    se = float(np.std(samples, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return McEstimate(mean, se, n, int(seed))


def estimate_payoff(problem, quadrature, policy_y, policy_z, t0, x0, dt, n_paths: int,
                    seed: int) -> McEstimate:
    """Monte Carlo estimate of ``E[∫ f ds + g(X_T)]`` from ``(t0, x0)``."""
    if n_paths < 2:
        raise ValueError("n_paths must be at least 2")
    _, running, terminal = terminal_states(problem, quadrature, policy_y, policy_z, t0, x0,
                                           problem.horizon, dt, seed, n_paths)
    return summarize(running + terminal, seed)


@dataclass(frozen=True)
class MomentScaling:
    slope: float
    horizons: tuple
    means: tuple

    @property
    def ratios(self) -> tuple:
        """``E|X(τ) − x0| / √(τ − t0)`` per horizon."""
        return tuple(m / math.sqrt(h) for m, h in zip(self.means, self.horizons))


def moment_scaling_check(problem, quadrature, t0, x0, horizons, n_paths: int, seed: int,
                         policy_y=None, policy_z=None, steps: int = 8) -> MomentScaling:
    """Fit the log-log slope of ``E|X(τ) − x0|`` against ``τ − t0``.

    Each horizon ``h`` is simulated with ``steps`` Euler steps of size ``h / steps``.
    The slope is NaN when some mean is zero (nothing moves).
    """
    horizons = tuple(float(h) for h in horizons)
    if len(horizons) < 3:
        raise ValueError("need at least three horizons")
    if not all(0 < h <= 1 for h in horizons):
        raise ValueError("horizons must lie in (0, 1]")
    if t0 + max(horizons) > problem.horizon + 1e-12:
        raise ValueError("t0 + horizon exceeds the problem horizon")
    if policy_y is None or policy_z is None:
        py, pz = constant_policies(problem)
        policy_y = policy_y or py
        policy_z = policy_z or pz
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    means = []
    for h in horizons:
        X, _, _ = terminal_states(problem, quadrature, policy_y, policy_z, t0, x0,
                                  min(t0 + h, problem.horizon), h / steps, seed, n_paths)
        means.append(float(np.mean(np.linalg.norm(X - x0, axis=1))))
    if min(means) <= 0:
        slope = float("nan")
    else:
        slope = float(np.polyfit(np.log(horizons), np.log(means), 1)[0])
    return MomentScaling(slope, horizons, tuple(means))
