"""Lévy measures: finite quadratures for the nonlocal operator and jump sampling.

Jumps smaller than the cutoff are dropped.  Density presets are split into
geometric shells between the cutoff and an outer radius.  Each shell carries
its exact mass and a node placed so that the shell's contribution to
``∫ min(|w|², 1) ν(dw)`` is reproduced exactly: the second-moment radius on
shells inside the unit ball and the mean radius outside it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammainc, gammaincc

from .errors import ConfigError, QuadratureError

KINDS = ("atomic", "exponential-density", "power-density-truncated")

DEFAULT_CUTOFF = 1e-3
DEFAULT_NODE_BUDGET = 128


@dataclass(frozen=True)
class LevyMeasureSpec:
    """Description of a Lévy measure on ``R^m \\ {0}``.

    ``atomic``: ``atoms`` is a sequence of ``(mark, mass)`` pairs.
    ``exponential-density``: ``intensity * exp(-rate |w|)`` on ``w > 0``
    (or on both half-lines with ``sides="both"``), ``m = 1``.
    ``power-density-truncated``: ``intensity * |w|^(-1-alpha)`` on
    ``0 < |w| <= radius`` with ``0 < alpha < 2``, ``m = 1``.
    """

    kind: str = "atomic"
    jump_dim: int = 1
    atoms: tuple = ()
    intensity: float = 1.0
    rate: float = 1.0
    alpha: float = 1.0
    radius: float = 1.0
    sides: str = "positive"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown Lévy measure kind {self.kind!r}; known: {list(KINDS)}", "problem.levy.kind")
        if int(self.jump_dim) < 1:
            raise ConfigError("jump_dim must be positive", "problem.levy.jump_dim")
        object.__setattr__(self, "jump_dim", int(self.jump_dim))
        if self.kind == "atomic":
            atoms = []
            for mark, mass in self.atoms:
                mark = tuple(float(v) for v in np.atleast_1d(mark))
                if len(mark) != self.jump_dim:
                    raise ConfigError(f"atom {mark} does not have dimension {self.jump_dim}", "problem.levy.atoms")
                if not mass > 0:
                    raise ConfigError("atom masses must be positive", "problem.levy.atoms")
                if not any(mark):
                    raise ConfigError("atoms at the origin are not allowed", "problem.levy.atoms")
                atoms.append((mark, float(mass)))
            if not atoms:
                raise ConfigError("atomic measure needs at least one atom", "problem.levy.atoms")
            object.__setattr__(self, "atoms", tuple(atoms))
            return
        if self.jump_dim != 1:
            raise ConfigError("density presets are one-dimensional", "problem.levy.jump_dim")
        if self.sides not in ("positive", "both"):
            raise ConfigError("sides must be 'positive' or 'both'", "problem.levy.sides")
        if not self.intensity > 0:
            raise ConfigError("intensity must be positive", "problem.levy.intensity")
        if self.kind == "exponential-density" and not self.rate > 0:
            raise ConfigError("rate must be positive", "problem.levy.rate")
        if self.kind == "power-density-truncated":
            if not 0 < self.alpha < 2:
                raise ConfigError("alpha must lie in (0, 2)", "problem.levy.alpha")
            if not self.radius > 0:
                raise ConfigError("radius must be positive", "problem.levy.radius")

    @property
    def n_sides(self) -> int:
        return 2 if self.sides == "both" else 1

    def to_dict(self):
        if self.kind == "atomic":
            return {"kind": self.kind, "jump_dim": self.jump_dim,
                    "atoms": [[list(m), w] for m, w in self.atoms]}
        out = {"kind": self.kind, "jump_dim": self.jump_dim,
               "intensity": self.intensity, "sides": self.sides}
        if self.kind == "exponential-density":
            out["rate"] = self.rate
        else:
            out["alpha"] = self.alpha
            out["radius"] = self.radius
        return out


@dataclass(frozen=True)
class JumpEvent:
    time: float
    mark: tuple


@dataclass(frozen=True, eq=False)
class JumpQuadrature:
    """Finite-node approximation of a Lévy measure restricted to ``|w| >= cutoff``."""

    nodes: np.ndarray
    weights: np.ndarray
    cutoff: float
    truncation_bound: float
    tail_mass: float = 0.0
    total_mass: float = field(init=False)
    compensator_mean: np.ndarray = field(init=False)

    def __post_init__(self):
        nodes = np.array(self.nodes, dtype=float, ndmin=2)
        weights = np.array(self.weights, dtype=float, ndmin=1)
        nodes.flags.writeable = False
        weights.flags.writeable = False
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "total_mass", float(weights.sum()))
        mean = weights @ nodes
        mean.flags.writeable = False
        object.__setattr__(self, "compensator_mean", mean)

    @property
    def jump_dim(self) -> int:
        return self.nodes.shape[1]

    def __len__(self):
        return len(self.weights)


def _exp_moment(k, a, b, rate):
    """``∫_a^b w^k exp(-rate w) dw`` for ``0 <= a <= b <= inf``."""
    s = k + 1
    scale = math.gamma(s) / rate**s
    if rate * a > s:
        upper = 0.0 if math.isinf(b) else gammaincc(s, rate * b)
        return scale * (gammaincc(s, rate * a) - upper)
    top = 1.0 if math.isinf(b) else gammainc(s, rate * b)
    return scale * (top - gammainc(s, rate * a))


def _power_moment(k, a, b, alpha):
    """``∫_a^b w^(k-1-alpha) dw``."""
    e = k - alpha
    if abs(e) < 1e-14:
        return math.log(b / a)
    a_term = 0.0 if a == 0 and e > 0 else a**e
    return (b**e - a_term) / e


def _moments(spec, k, a, b):
    if spec.kind == "exponential-density":
        return _exp_moment(k, a, b, spec.rate)
    return _power_moment(k, a, b, spec.alpha)


def _outer_radius(spec, cutoff):
    if spec.kind == "exponential-density":
        return cutoff + 40.0 / spec.rate
    return spec.radius


def _small_jump_integral(spec, eps):
    """``∫_{0<w<eps} min(w², 1) ν(dw)`` per unit intensity and side."""
    out = _moments(spec, 2, 0.0, min(eps, 1.0))
    if eps > 1.0:
        out += _moments(spec, 0, 1.0, eps)
    return out


def a3_integral(spec: LevyMeasureSpec) -> float:
    """Closed form of ``∫ min(|w|², 1) ν(dw)``."""
    if spec.kind == "atomic":
        return float(sum(mass * min(np.dot(m, m), 1.0) for m, mass in spec.atoms))
    top = math.inf if spec.kind == "exponential-density" else spec.radius
    val = _moments(spec, 2, 0.0, min(1.0, top))
    if top > 1.0:
        val += _moments(spec, 0, 1.0, top)
    return float(spec.intensity * spec.n_sides * val)


def _shell_edges(eps, outer, budget):
    if budget >= 2 and eps < 1.0 < outer:
        share = math.log(1.0 / eps) / math.log(outer / eps)
        inner = min(max(1, round(budget * share)), budget - 1)
        return np.concatenate([np.geomspace(eps, 1.0, inner + 1),
                               np.geomspace(1.0, outer, budget - inner + 1)[1:]])
    return np.geomspace(eps, outer, budget + 1)


def build_quadrature(spec: LevyMeasureSpec, cutoff: float = DEFAULT_CUTOFF,
                     node_budget: int = DEFAULT_NODE_BUDGET) -> JumpQuadrature:
    if not cutoff > 0:
        raise ConfigError("cutoff must be positive", "levy.cutoff")
    if int(node_budget) < 1:
        raise ConfigError("node_budget must be at least 1", "levy.node_budget")
    node_budget = int(node_budget)

    if spec.kind == "atomic":
        kept, dropped = [], 0.0
        for mark, mass in spec.atoms:
            r = math.sqrt(sum(v * v for v in mark))
            if r >= cutoff:
                kept.append((mark, mass))
            else:
                dropped += mass * min(r * r, 1.0)
        if not kept:
            raise QuadratureError(f"no atom survives the cutoff {cutoff}")
        return JumpQuadrature(nodes=[m for m, _ in kept], weights=[w for _, w in kept],
                              cutoff=cutoff, truncation_bound=dropped)

    outer = _outer_radius(spec, cutoff)
    if cutoff >= outer:
        raise QuadratureError(f"cutoff {cutoff} leaves no mass below the outer radius {outer}")
    per_side = max(1, node_budget // spec.n_sides)
    edges = _shell_edges(cutoff, outer, per_side)
    radii, masses = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        m0 = _moments(spec, 0, a, b)
        if not m0 > 0:
            continue
        if b <= 1.0:
            r = math.sqrt(_moments(spec, 2, a, b) / m0)
        else:
            r = _moments(spec, 1, a, b) / m0
        radii.append(min(max(r, a), b))
        masses.append(spec.intensity * m0)
    radii = np.array(radii)
    masses = np.array(masses)
    if spec.sides == "both":
        radii = np.concatenate([-radii[::-1], radii])
        masses = np.concatenate([masses[::-1], masses])
    tail = 0.0
    if spec.kind == "exponential-density":
        tail = spec.intensity * spec.n_sides * _exp_moment(0, outer, math.inf, spec.rate)
    bound = spec.intensity * spec.n_sides * _small_jump_integral(spec, cutoff)
    return JumpQuadrature(nodes=radii[:, None], weights=masses, cutoff=cutoff,
                          truncation_bound=float(bound), tail_mass=float(tail))


def sample_jump_counts(quadrature: JumpQuadrature, t0: float, t1: float,
                       rng: np.random.Generator, size: int) -> np.ndarray:
    """Vectorised Poisson counts on ``(t0, t1]`` for ``size`` independent trials."""
    if not t0 < t1:
        raise ValueError("need t0 < t1")
    return rng.poisson(quadrature.total_mass * (t1 - t0), size=size)


def sample_jumps(quadrature: JumpQuadrature, t0: float, t1: float,
                 rng: np.random.Generator) -> list[JumpEvent]:
    """Compound-Poisson events of the quadrature measure on ``(t0, t1]``, sorted by time."""
    if not t0 < t1:
        raise ValueError("need t0 < t1")
    count = int(rng.poisson(quadrature.total_mass * (t1 - t0)))
    if count == 0:
        return []
    probs = quadrature.weights / quadrature.total_mass
    picks = rng.choice(len(probs), size=count, p=probs)
    times = np.sort(t1 - (t1 - t0) * rng.random(count))
    return [JumpEvent(float(t), tuple(quadrature.nodes[j])) for t, j in zip(times, picks)]


def compensator_drift(quadrature: JumpQuadrature, problem, t, x, y, z) -> np.ndarray:
    """``Σ_j weight_j η(t, x; y, z; w_j)``; accepts one state ``(d,)`` or many ``(n, d)``."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    pts = np.atleast_2d(x)
    if problem.jump.is_zero:
        out = np.zeros_like(pts)
    else:
        eta = problem.jump_field(t, pts, y, z, quadrature.nodes)
        out = np.einsum("j,jnd->nd", quadrature.weights, eta)
    return out[0] if single else out
