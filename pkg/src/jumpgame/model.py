"""Game problems: coefficients, control grids, Lévy measure and horizon."""

from __future__ import annotations

import copy
import hashlib
import json
import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .coefficients import CoefficientSpec
from .errors import ConfigError, UnknownPresetError
from .levy import LevyMeasureSpec, a3_integral, build_quadrature

ROLES = ("drift", "diffusion", "jump", "running_cost", "terminal")
_GRID_TOL = 1e-12


@dataclass(frozen=True)
class GameProblem:
    dim: int
    horizon: float
    drift: CoefficientSpec
    diffusion: CoefficientSpec
    jump: CoefficientSpec
    running_cost: CoefficientSpec
    terminal: CoefficientSpec
    control_grid_y: tuple
    control_grid_z: tuple
    levy: LevyMeasureSpec
    name: str = "custom"

    # Vectorised evaluation; see ``coefficients`` for the shape conventions.
    def drift_field(self, t, x, y, z):
        return self.drift.family.func(self.drift.params, t, x, y, z)

    def diffusion_field(self, t, x, y, z):
        return self.diffusion.family.func(self.diffusion.params, t, x, y, z)

    def jump_field(self, t, x, y, z, w):
        w = np.atleast_2d(np.asarray(w, dtype=float))
        return self.jump.family.func(self.jump.params, t, x, y, z, w)

    def cost_field(self, t, x, y, z):
        return self.running_cost.family.func(self.running_cost.params, t, x, y, z)

    def terminal_field(self, x):
        return self.terminal.family.func(self.terminal.params, x)

    @property
    def n_pairs(self) -> int:
        return len(self.control_grid_y) * len(self.control_grid_z)

    def with_controls(self, ys, zs) -> "GameProblem":
        return replace(self, control_grid_y=tuple(float(v) for v in ys),
                       control_grid_z=tuple(float(v) for v in zs))

    def to_dict(self) -> dict:
        out = {"name": self.name, "dim": self.dim, "horizon": self.horizon}
        for role in ROLES:
            out[role] = getattr(self, role).to_dict()
        out["controls"] = {"y": list(self.control_grid_y), "z": list(self.control_grid_z)}
        out["levy"] = self.levy.to_dict()
        return out

    def fingerprint(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


_SINE = {"id": "sine", "params": [1.0, 1.0]}
_FIVE = [-1.0, -0.5, 0.0, 0.5, 1.0]

PRESETS = {
    "null": {},
    "sine-diffusion": {
        "diffusion": {"id": "constant", "params": [0.5]},
        "terminal": _SINE,
    },
    "tug-of-war-drift": {
        "drift": {"id": "control-sum", "params": [1.0, 1.0]},
        "terminal": _SINE,
        "controls": {"y": _FIVE, "z": _FIVE},
    },
    "pure-jump": {
        "jump": {"id": "linear", "params": [1.0]},
        "levy": {"kind": "atomic", "atoms": [[[1.0], 2.0]]},
        "terminal": _SINE,
    },
    "coupled-product": {
        "drift": {"id": "control-product", "params": [1.0]},
        "terminal": _SINE,
        "controls": {"y": [-1.0, 1.0], "z": [-1.0, 1.0]},
    },
    "separable-jump": {
        "drift": {"id": "sine-control-sum", "params": [0.3, 1.0, 1.0]},
        "diffusion": {"id": "constant", "params": [0.3]},
        "jump": {"id": "state-scaled", "params": [0.5, 0.5]},
        "levy": {"kind": "exponential-density", "intensity": 1.0, "rate": 1.0, "sides": "both"},
        "running_cost": {"id": "control-quadratic", "params": [0.5, 0.5]},
        "terminal": _SINE,
        "controls": {"y": [-1.0, 0.0, 1.0], "z": [-0.5, 0.0, 0.5]},
    },
    "drift-advantage": {
        "drift": {"id": "control-sum", "params": [1.0, 0.0]},
        "terminal": {"id": "clamped-ramp", "params": [1.0, 2.0]},
        "controls": {"y": [-1.0, 1.0], "z": [0.0]},
    },
    "separable-2d": {
        "dim": 2,
        "drift": {"id": "control-sum", "params": [1.0, 1.0]},
        "diffusion": {"id": "constant", "params": [0.3]},
        "terminal": {"id": "sine-product", "params": [1.0]},
        "controls": {"y": [-0.5, 0.0, 0.5], "z": [-0.5, 0.0, 0.5]},
    },
    "linear-terminal": {
        "diffusion": {"id": "constant", "params": [0.5]},
        "terminal": {"id": "linear", "params": [1.0]},
    },
}

_BASE = {
    "dim": 1,
    "horizon": 1.0,
    "drift": {"id": "zero", "params": []},
    "diffusion": {"id": "zero", "params": []},
    "jump": {"id": "zero", "params": []},
    "running_cost": {"id": "zero", "params": []},
    "terminal": {"id": "zero", "params": []},
    "controls": {"y": [0.0], "z": [0.0]},
    "levy": {"kind": "atomic", "atoms": [[[1.0], 1.0]]},
}


def resolve_problem_config(config: dict) -> dict:
    """Merge a problem section over its preset (if any) and the zero defaults."""
    config = dict(config or {})
    merged = copy.deepcopy(_BASE)
    preset = config.pop("preset", None)
    if preset is not None:
        if preset not in PRESETS:
            raise UnknownPresetError(f"unknown problem preset {preset!r}; known: {sorted(PRESETS)}",
                                     "problem.preset")
        merged.update(copy.deepcopy(PRESETS[preset]))
        merged["name"] = preset
    merged.update(copy.deepcopy(config))
    merged.setdefault("name", "custom")
    return merged


def _levy_from_dict(d: dict) -> LevyMeasureSpec:
    d = dict(d)
    if "atoms" in d:
        d["atoms"] = tuple((tuple(np.atleast_1d(m).tolist()), mass) for m, mass in d["atoms"])
    known = set(LevyMeasureSpec.__dataclass_fields__)
    extra = set(d) - known
    if extra:
        raise ConfigError(f"unknown keys {sorted(extra)}", "problem.levy")
    return LevyMeasureSpec(**d)


def _grid(values, key):
    if values is None or len(values) == 0:
        raise ConfigError("control grid must be non-empty", key)
    vals = tuple(float(v) for v in values)
    if not all(math.isfinite(v) for v in vals):
        raise ConfigError("control grid values must be finite", key)
    return vals


def build_problem(config: dict) -> GameProblem:
    """Build and validate a :class:`GameProblem` from a problem description.

    ``config`` may name a ``preset`` and override any of its sections.
    """
    cfg = resolve_problem_config(config)
    dim = int(cfg["dim"])
    if dim < 1:
        raise ConfigError("dim must be positive", "problem.dim")
    horizon = float(cfg["horizon"])
    if not horizon > 0:
        raise ConfigError("horizon must be positive", "problem.horizon")
    specs = {}
    for role in ROLES:
        entry = cfg[role]
        if isinstance(entry, str):
            entry = {"id": entry, "params": []}
        specs[role] = CoefficientSpec(role, entry["id"], tuple(entry.get("params", ())))
    controls = cfg["controls"]
    problem = GameProblem(
        dim=dim,
        horizon=horizon,
        control_grid_y=_grid(controls.get("y"), "problem.controls.y"),
        control_grid_z=_grid(controls.get("z"), "problem.controls.z"),
        levy=_levy_from_dict(cfg["levy"]),
        name=str(cfg["name"]),
        **specs,
    )
    if problem.jump.id == "linear" and problem.levy.jump_dim != dim:
        raise ConfigError("linear jump preset needs jump_dim == dim", "problem.jump.id")
    _probe_finite(problem)
    return problem


def _probe_finite(problem: GameProblem):
    rng = np.random.default_rng(0)
    x = rng.uniform(-10, 10, size=(8, problem.dim))
    w = np.ones((1, problem.levy.jump_dim))
    for t in (0.0, problem.horizon):
        for y in problem.control_grid_y:
            for z in problem.control_grid_z:
                parts = [problem.drift_field(t, x, y, z), problem.diffusion_field(t, x, y, z),
                         problem.jump_field(t, x, y, z, w), problem.cost_field(t, x, y, z)]
                if not all(np.all(np.isfinite(p)) for p in parts):
                    raise ConfigError("coefficients are not finite at a probe point", "problem")
    if not np.all(np.isfinite(problem.terminal_field(x))):
        raise ConfigError("terminal cost is not finite at a probe point", "problem.terminal")


@dataclass(frozen=True, eq=False)
class CoefficientSample:
    b: np.ndarray
    sigma: np.ndarray
    f: float
    g: float
    eta_at: Callable[[np.ndarray], np.ndarray]


def _check_control(value, grid, name):
    if not any(abs(value - v) <= _GRID_TOL for v in grid):
        raise ValueError(f"control {name}={value} is not in its grid {list(grid)}")


def eval_coefficients(problem: GameProblem, t: float, x, y: float, z: float) -> CoefficientSample:
    """Evaluate every coefficient at a single point ``(t, x; y, z)``."""
    if not 0.0 <= t <= problem.horizon:
        raise ValueError(f"time {t} outside [0, {problem.horizon}]")
    _check_control(y, problem.control_grid_y, "y")
    _check_control(z, problem.control_grid_z, "z")
    pt = np.asarray(x, dtype=float).reshape(1, problem.dim)

    def eta_at(w):
        return problem.jump_field(t, pt, y, z, np.reshape(w, (1, -1)))[0, 0]

    return CoefficientSample(
        b=problem.drift_field(t, pt, y, z)[0],
        sigma=problem.diffusion_field(t, pt, y, z)[0],
        f=float(problem.cost_field(t, pt, y, z)[0]),
        g=float(problem.terminal_field(pt)[0]),
        eta_at=eta_at,
    )


@dataclass
class AssumptionReport:
    lipschitz_estimates: dict
    bound_estimates: dict
    eta_small_jump_ratio: float
    a3_integral: float
    k_max: float
    passed: dict = field(default_factory=dict)

    @property
    def pass_all(self) -> bool:
        return all(self.passed.values())


def audit_assumptions(problem: GameProblem, sample_budget: int = 1000, rng_seed: int = 0,
                      k_max: float = 10.0, box: float = 50.0, quadrature=None) -> AssumptionReport:
    """Sample Lipschitz quotients and sup-norms of every coefficient.

    States are drawn uniformly from ``[-box, box]^d``; half of the comparison
    states are close neighbours, half are independent draws.
    """
    if sample_budget < 2:
        raise ValueError("sample_budget must be at least 2")
    rng = np.random.default_rng(rng_seed)
    n, d = int(sample_budget), problem.dim
    t = rng.uniform(0.0, problem.horizon)
    x = rng.uniform(-box, box, size=(n, d))
    x2 = rng.uniform(-box, box, size=(n, d))
    near = np.arange(n) < n // 2
    x2[near] = x[near] + rng.normal(scale=1e-3, size=(near.sum(), d))
    y = rng.choice(np.array(problem.control_grid_y), size=n)
    z = rng.choice(np.array(problem.control_grid_z), size=n)
    dist = np.linalg.norm(x - x2, axis=1)
    dist = np.where(dist > 0, dist, np.inf)

    def flat(a):
        return a.reshape(a.shape[0], -1)

    fields = {
        "b": lambda p: flat(problem.drift_field(t, p, y, z)),
        "sigma": lambda p: flat(problem.diffusion_field(t, p, y, z)),
        "f": lambda p: problem.cost_field(t, p, y, z)[:, None],
        "g": lambda p: problem.terminal_field(p)[:, None],
    }
    lip, bounds = {}, {}
    for key, fn in fields.items():
        v1, v2 = fn(x), fn(x2)
        lip[key] = float(np.max(np.linalg.norm(v1 - v2, axis=1) / dist))
        bounds[key] = float(max(np.abs(v1).max(), np.abs(v2).max()))

    quad = quadrature if quadrature is not None else build_quadrature(problem.levy)
    marks = quad.nodes[rng.integers(len(quad), size=min(n, 64))]
    scale = np.minimum(np.linalg.norm(marks, axis=1), 1.0)
    e1 = problem.jump_field(t, x, y, z, marks)
    e2 = problem.jump_field(t, x2, y, z, marks)
    lip["eta"] = float(np.max(np.linalg.norm(e1 - e2, axis=2) / (dist[None, :] * scale[:, None])))
    eta_ratio = float(np.max(np.linalg.norm(e1, axis=2) / scale[:, None]))
    a3 = a3_integral(problem.levy)

    estimates = list(lip.values()) + list(bounds.values()) + [eta_ratio]
    passed = {
        "A1": len(problem.control_grid_y) >= 1 and len(problem.control_grid_z) >= 1,
        "A2": all(np.isfinite(e) and e <= k_max for e in estimates),
        "A3": math.isfinite(a3),
    }
    return AssumptionReport(lipschitz_estimates=lip, bound_estimates=bounds,
                            eta_small_jump_ratio=eta_ratio, a3_integral=a3,
                            k_max=k_max, passed=passed)
