"""Closed registry of coefficient families.

Every family is vectorised over states.  Shapes used throughout:

* ``x``: ``(n, d)`` states,
* ``y``, ``z``: scalars or ``(n,)`` arrays of control values,
* ``w``: ``(J, m)`` jump marks.

Drift returns ``(n, d)``, diffusion ``(n, d, d)`` (the Brownian dimension
equals ``d``), jump ``(J, n, d)``, running cost ``(n,)`` and terminal cost
``(n,)``.  Each family declares its arity and a Lipschitz constant in ``x``;
for jump families the constant multiplies ``min(|w|, 1)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ArityError, UnknownPresetError


@dataclass(frozen=True)
class Family:
    name: str
    arity: int
    func: Callable
    lipschitz: Callable[[tuple, int], float]
    zero: bool = False
    uses_controls: bool = False


def _col(c):
    """Broadcast a control (scalar or ``(n,)``) against ``(n, d)`` arrays."""
    c = np.asarray(c, dtype=float)
    return c[:, None] if c.ndim == 1 else c


def _no_lip(params, dim):
    return 0.0


def _zeros_vec(params, t, x, y, z):
    return np.zeros_like(x)


def _const_vec(params, t, x, y, z):
    return np.full_like(x, params[0])


def _control_sum(params, t, x, y, z):
    a, b = params
    return np.broadcast_to(a * _col(y) + b * _col(z), x.shape).astype(float)


def _control_product(params, t, x, y, z):
    return np.broadcast_to(params[0] * _col(y) * _col(z), x.shape).astype(float)


def _sine_control_sum(params, t, x, y, z):
    amp, a, b = params
    return amp * np.sin(x) + a * _col(y) + b * _col(z)


def _mean_revert(params, t, x, y, z):
    kappa, level = params
    return -kappa * np.clip(x, -level, level)


DRIFT = {
    f.name: f
    for f in [
        Family("zero", 0, _zeros_vec, _no_lip, zero=True),
        Family("constant", 1, _const_vec, _no_lip),
        Family("control-sum", 2, _control_sum, _no_lip, uses_controls=True),
        Family("control-product", 1, _control_product, _no_lip, uses_controls=True),
        Family("sine-control-sum", 3, _sine_control_sum, lambda p, d: abs(p[0]), uses_controls=True),
        Family("mean-revert", 2, _mean_revert, lambda p, d: abs(p[0])),
    ]
}


def _diag(values):
    n, d = values.shape
    out = np.zeros((n, d, d))
    idx = np.arange(d)
    out[:, idx, idx] = values
    return out


def _sigma_zero(params, t, x, y, z):
    return np.zeros(x.shape + (x.shape[1],))


def _sigma_const(params, t, x, y, z):
    return _diag(np.full_like(x, params[0]))


def _sigma_cosine(params, t, x, y, z):
    s, a = params
    return _diag(s + a * np.cos(x))


def _sigma_control(params, t, x, y, z):
    s0, s1 = params
    scale = np.broadcast_to(s0 + s1 * _col(y) ** 2, x.shape)
    return _diag(np.array(scale, dtype=float))


DIFFUSION = {
    f.name: f
    for f in [
        Family("zero", 0, _sigma_zero, _no_lip, zero=True),
        Family("constant", 1, _sigma_const, _no_lip),
        Family("cosine", 2, _sigma_cosine, lambda p, d: abs(p[1])),
        Family("control-scaled", 2, _sigma_control, _no_lip, uses_controls=True),
    ]
}


def _eta_zero(params, t, x, y, z, w):
    return np.zeros((w.shape[0],) + x.shape)


def _eta_linear(params, t, x, y, z, w):
    # requires jump_dim == dim, enforced when the problem is built
    return np.broadcast_to(params[0] * w[:, None, :], (w.shape[0],) + x.shape).astype(float)


def _unit_first_axis(x, scale):
    out = np.zeros(scale.shape + (x.shape[1],))
    out[..., 0] = scale
    return out


def _eta_saturated(params, t, x, y, z, w):
    size = params[0] * np.minimum(np.linalg.norm(w, axis=1), 1.0)
    scale = np.broadcast_to(size[:, None], (w.shape[0], x.shape[0]))
    return _unit_first_axis(x, scale)


def _eta_state_scaled(params, t, x, y, z, w):
    c, a = params
    size = c * np.minimum(np.linalg.norm(w, axis=1), 1.0) * np.sign(w[:, 0])
    scale = size[:, None] * (1.0 + a * np.sin(x[:, 0]))[None, :]
    return _unit_first_axis(x, scale)


JUMP = {
    f.name: f
    for f in [
        Family("zero", 0, _eta_zero, _no_lip, zero=True),
        Family("linear", 1, _eta_linear, _no_lip),
        Family("saturated", 1, _eta_saturated, _no_lip),
        Family("state-scaled", 2, _eta_state_scaled, lambda p, d: abs(p[0] * p[1])),
    ]
}


def _cost_zero(params, t, x, y, z):
    return np.zeros(x.shape[0])


def _cost_const(params, t, x, y, z):
    return np.full(x.shape[0], float(params[0]))


def _cost_quadratic(params, t, x, y, z):
    a, b = params
    val = a * np.asarray(y, dtype=float) ** 2 - b * np.asarray(z, dtype=float) ** 2
    return np.broadcast_to(val, (x.shape[0],)).astype(float)


def _cost_product(params, t, x, y, z):
    val = params[0] * np.asarray(y, dtype=float) * np.asarray(z, dtype=float)
    return np.broadcast_to(val, (x.shape[0],)).astype(float)


RUNNING_COST = {
    f.name: f
    for f in [
        Family("zero", 0, _cost_zero, _no_lip, zero=True),
        Family("constant", 1, _cost_const, _no_lip),
        Family("control-quadratic", 2, _cost_quadratic, _no_lip, uses_controls=True),
        Family("control-product", 1, _cost_product, _no_lip, uses_controls=True),
    ]
}


def _g_zero(params, x):
    return np.zeros(x.shape[0])


def _g_const(params, x):
    return np.full(x.shape[0], float(params[0]))


def _g_sine(params, x):
    amp, freq = params
    return amp * np.sin(freq * x[:, 0])


def _g_sine_product(params, x):
    return params[0] * np.prod(np.sin(x), axis=1)


def _g_linear(params, x):
    return params[0] * x[:, 0]


def _g_ramp(params, x):
    c, level = params
    return c * np.clip(x[:, 0], -level, level)


TERMINAL = {
    f.name: f
    for f in [
        Family("zero", 0, _g_zero, _no_lip, zero=True),
        Family("constant", 1, _g_const, _no_lip),
        Family("sine", 2, _g_sine, lambda p, d: abs(p[0] * p[1])),
        Family("sine-product", 1, _g_sine_product, lambda p, d: abs(p[0]) * np.sqrt(d)),
        Family("linear", 1, _g_linear, lambda p, d: abs(p[0])),
        Family("clamped-ramp", 2, _g_ramp, lambda p, d: abs(p[0])),
    ]
}

REGISTRIES = {
    "drift": DRIFT,
    "diffusion": DIFFUSION,
    "jump": JUMP,
    "running_cost": RUNNING_COST,
    "terminal": TERMINAL,
}


@dataclass(frozen=True)
class CoefficientSpec:
    """A family name from one registry plus its parameter vector."""

    role: str
    id: str
    params: tuple = ()

    def __post_init__(self):
        registry = REGISTRIES[self.role]
        if self.id not in registry:
            raise UnknownPresetError(
                f"unknown {self.role} preset {self.id!r}; known: {sorted(registry)}",
                key=f"problem.{self.role}.id",
            )
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        fam = registry[self.id]
        if len(self.params) != fam.arity:
            raise ArityError(
                f"{self.role} preset {self.id!r} takes {fam.arity} parameters, got {len(self.params)}",
                key=f"problem.{self.role}.params",
            )

    @property
    def family(self) -> Family:
        return REGISTRIES[self.role][self.id]

    @property
    def is_zero(self) -> bool:
        return self.family.zero

    def lipschitz(self, dim: int) -> float:
        return float(self.family.lipschitz(self.params, dim))

    def to_dict(self):
        return {"id": self.id, "params": list(self.params)}
