"""Local and nonlocal generators, the min-max Hamiltonians and the Isaacs gap.

All operators accept a single state ``(d,)`` (returning scalars) or a batch
``(n, d)`` with matching batches of gradients ``(n, d)`` and matrices
``(n, d, d)``.  Min-max is exhaustive over the control grids; ties go to the
lowest grid index.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
from scipy.ndimage import map_coordinates

from .grid import SpatialGrid

GAUSS_POINTS = 48


@dataclass(frozen=True, eq=False)
class Jet:
    """Candidate ``(time derivative, gradient, Hessian)`` at a point."""

    p: float
    q: np.ndarray
    Q: np.ndarray

    def __post_init__(self):
        q = np.atleast_1d(np.asarray(self.q, dtype=float))
        Q = np.atleast_2d(np.asarray(self.Q, dtype=float))
        if Q.shape != (q.size, q.size):
            raise ValueError(f"Hessian shape {Q.shape} does not match gradient length {q.size}")
        if np.max(np.abs(Q - Q.T), initial=0.0) > 1e-12:
            raise ValueError("Hessian slot must be symmetric")
        object.__setattr__(self, "p", float(self.p))
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "Q", Q)


# -- field views -------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SmoothField:
    """Closed-form test function with exact derivatives; all callables act on ``(n, d)``."""

    value_fn: Callable
    gradient_fn: Callable
    hessian_fn: Callable
    name: str = "smooth"

    def value(self, x):
        return self.value_fn(np.atleast_2d(x))

    def gradient(self, x):
        return self.gradient_fn(np.atleast_2d(x))

    def hessian(self, x):
        return self.hessian_fn(np.atleast_2d(x))

    @classmethod
    def affine(cls, slope, offset=0.0):
        a = np.atleast_1d(np.asarray(slope, dtype=float))
        return cls(lambda x: x @ a + offset,
                   lambda x: np.broadcast_to(a, x.shape).copy(),
                   lambda x: np.zeros((x.shape[0], a.size, a.size)), "affine")

    @classmethod
    def quadratic(cls, matrix, slope=None, offset=0.0):
        """``x·Mx + slope·x + offset`` with symmetric ``M``."""
        M = np.atleast_2d(np.asarray(matrix, dtype=float))
        M = 0.5 * (M + M.T)
        a = np.zeros(M.shape[0]) if slope is None else np.asarray(slope, dtype=float)
        return cls(lambda x: np.einsum("ni,ij,nj->n", x, M, x) + x @ a + offset,
                   lambda x: 2.0 * x @ M + a,
                   lambda x: np.broadcast_to(2.0 * M, (x.shape[0],) + M.shape).copy(),
                   "quadratic")

    @classmethod
    def sine(cls, freq, phase=0.0, amplitude=1.0):
        """``amplitude * sin(freq·x + phase)``."""
        k = np.atleast_1d(np.asarray(freq, dtype=float))
        return cls(lambda x: amplitude * np.sin(x @ k + phase),
                   lambda x: amplitude * np.cos(x @ k + phase)[:, None] * k,
                   lambda x: -amplitude * np.sin(x @ k + phase)[:, None, None] * np.outer(k, k),
                   "sine")

    @classmethod
    def gaussian_bump(cls, center, width=1.0, height=1.0):
        c = np.atleast_1d(np.asarray(center, dtype=float))
        s2 = float(width) ** 2

        def val(x):
            return height * np.exp(-np.sum((x - c) ** 2, axis=1) / (2 * s2))

        def grad(x):
            return -val(x)[:, None] * (x - c) / s2

        def hess(x):
            r = (x - c) / s2
            eye = np.eye(c.size) / s2
            return val(x)[:, None, None] * (np.einsum("ni,nj->nij", r, r) - eye)

        return cls(val, grad, hess, "gaussian-bump")


@dataclass(frozen=True, eq=False)
class GridField:
    """Multilinear interpolation of node values; queries outside the box are clamped."""

    grid: SpatialGrid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float).reshape(self.grid.shape)
        object.__setattr__(self, "values", vals)

    def value(self, x):
        x = np.atleast_2d(x)
        return map_coordinates(self.values, self.grid.to_index(x), order=1, mode="nearest")

    def gradient(self, x):
        x = np.atleast_2d(x)
        out = np.empty_like(x, dtype=float)
        for a, h in enumerate(self.grid.spacing):
            e = np.zeros(x.shape[1])
            e[a] = h
            out[:, a] = (self.value(x + e) - self.value(x - e)) / (2 * h)
        return out

    def hessian(self, x):
        x = np.atleast_2d(x)
        d = x.shape[1]
        h = self.grid.spacing
        out = np.empty((x.shape[0], d, d))
        centre = self.value(x)
        for a in range(d):
            ea = np.zeros(d)
            ea[a] = h[a]
            out[:, a, a] = (self.value(x + ea) - 2 * centre + self.value(x - ea)) / h[a] ** 2
            for b in range(a + 1, d):
                eb = np.zeros(d)
                eb[b] = h[b]
                mixed = (self.value(x + ea + eb) - self.value(x + ea - eb)
                         - self.value(x - ea + eb) + self.value(x - ea - eb)) / (4 * h[a] * h[b])
                out[:, a, b] = out[:, b, a] = mixed
        return out


# -- operators ---------------------------------------------------------------

def _points(x, dim):
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    return np.atleast_2d(x).reshape(-1, dim), single


def _batch(v, n, shape):
    """Broadcast one value of ``shape`` to ``n`` copies, or reshape a batch."""
    v = np.asarray(v, dtype=float)
    if v.size == int(np.prod(shape)):
        return np.broadcast_to(v.reshape(shape), (n,) + shape)
    return v.reshape((n,) + shape)


def local_operator(problem, t, x, q, A, y, z):
    """``Tr(½σσᵀ A) + b·q + f`` at ``(t, x; y, z)``."""
    pts, single = _points(x, problem.dim)
    n, d = pts.shape
    q = _batch(q, n, (d,))
    A = _batch(A, n, (d, d))
    sigma = problem.diffusion_field(t, pts, y, z)
    a = 0.5 * np.einsum("nik,njk->nij", sigma, sigma)
    out = (np.einsum("nij,nij->n", a, A)
           + np.einsum("ni,ni->n", problem.drift_field(t, pts, y, z), q)
           + problem.cost_field(t, pts, y, z))
    return float(out[0]) if single else out


def nonlocal_operator(problem, quadrature, t, x, field, y, z):
    """``Σ_j weight_j [φ(x + η_j) − φ(x) − η_j·∇φ(x)]`` for a field view ``φ``."""
    pts, single = _points(x, problem.dim)
    if problem.jump.is_zero:
        out = np.zeros(pts.shape[0])
    else:
        out = _nonlocal(problem, quadrature, t, pts, field, y, z, field.value(pts), field.gradient(pts))
    return float(out[0]) if single else out


def _nonlocal(problem, quadrature, t, pts, field, y, z, base, grad):
    eta = problem.jump_field(t, pts, y, z, quadrature.nodes)
    n_nodes, n, d = eta.shape
    shifted = field.value((pts[None, :, :] + eta).reshape(-1, d)).reshape(n_nodes, n)
    inner = shifted - base[None, :] - np.einsum("jnd,nd->jn", eta, grad)
    return quadrature.weights @ inner


def nonlocal_hessian_oracle(problem, quadrature, t, x, field, y, z, n_gauss: int = GAUSS_POINTS):
    """``∫₀¹ (1−ρ) Σ_j weight_j Tr[η_j η_jᵀ D²φ(x + ρ η_j)] dρ`` by Gauss–Legendre in ρ."""
    if n_gauss < 32:
        raise ValueError("use at least 32 Gauss points")
    pts, single = _points(x, problem.dim)
    n, d = pts.shape
    if problem.jump.is_zero:
        out = np.zeros(n)
    else:
        nodes, gw = np.polynomial.legendre.leggauss(n_gauss)
        rho = 0.5 * (nodes + 1.0)
        gw = 0.5 * gw
        eta = problem.jump_field(t, pts, y, z, quadrature.nodes)
        out = np.zeros(n)
        for r, wr in zip(rho, gw):
            hess = field.hessian((pts[None] + r * eta).reshape(-1, d)).reshape(eta.shape[:2] + (d, d))
            quad_form = np.einsum("jni,jnik,jnk->jn", eta, hess, eta)
            out += wr * (1.0 - r) * (quadrature.weights @ quad_form)
    return float(out[0]) if single else out


class Saddle(NamedTuple):
    value: np.ndarray
    y: np.ndarray
    z: np.ndarray
    iy: np.ndarray
    iz: np.ndarray


def pair_values(problem, quadrature, t, x, q, A, field) -> np.ndarray:
    """``ℒ + 𝒥`` for every control pair: array ``(M, N, n)``."""
    pts, _ = _points(x, problem.dim)
    n, d = pts.shape
    q = _batch(q, n, (d,))
    A = _batch(A, n, (d, d))
    ys, zs = problem.control_grid_y, problem.control_grid_z
    out = np.empty((len(ys), len(zs), n))
    if not problem.jump.is_zero:
        base, grad = field.value(pts), field.gradient(pts)
    for i, y in enumerate(ys):
        for j, z in enumerate(zs):
            val = local_operator(problem, t, pts, q, A, y, z)
            if not problem.jump.is_zero:
                val = val + _nonlocal(problem, quadrature, t, pts, field, y, z, base, grad)
            out[i, j] = val
    return out


def saddle_from_values(problem, values: np.ndarray, choice: str) -> Saddle:
    """Reduce pair values ``(M, N, n)``: ``plus`` is min_y max_z, ``minus`` is max_z min_y."""
    n = values.shape[2]
    cols = np.arange(n)
    if choice == "plus":
        iz_all = np.argmax(values, axis=1)                  # (M, n)
        inner = np.take_along_axis(values, iz_all[:, None, :], axis=1)[:, 0, :]
        iy = np.argmin(inner, axis=0)
        iz = iz_all[iy, cols]
        value = inner[iy, cols]
    elif choice == "minus":
        iy_all = np.argmin(values, axis=0)                  # (N, n)
        inner = np.take_along_axis(values, iy_all[None, :, :], axis=0)[0]
        iz = np.argmax(inner, axis=0)
        iy = iy_all[iz, cols]
        value = inner[iz, cols]
    else:
        raise ValueError(f"hamiltonian choice must be 'plus' or 'minus', not {choice!r}")
    ys = np.asarray(problem.control_grid_y)
    zs = np.asarray(problem.control_grid_z)
    return Saddle(value, ys[iy], zs[iz], iy, iz)


def _scalarize(s: Saddle, single: bool) -> Saddle:
    if not single:
        return s
    return Saddle(float(s.value[0]), float(s.y[0]), float(s.z[0]), int(s.iy[0]), int(s.iz[0]))


def h_plus(problem, quadrature, t, x, q, A, field) -> Saddle:
    """``inf_y sup_z [ℒ + 𝒥]`` with the attaining pair."""
    _, single = _points(x, problem.dim)
    vals = pair_values(problem, quadrature, t, x, q, A, field)
    return _scalarize(saddle_from_values(problem, vals, "plus"), single)


def h_minus(problem, quadrature, t, x, q, A, field) -> Saddle:
    """``sup_z inf_y [ℒ + 𝒥]`` with the attaining pair."""
    _, single = _points(x, problem.dim)
    vals = pair_values(problem, quadrature, t, x, q, A, field)
    return _scalarize(saddle_from_values(problem, vals, "minus"), single)


def isaacs_gap(problem, quadrature, samples) -> float:
    """Largest ``H⁺ − H⁻`` over samples of ``(t, x, q, A, field)``."""
    samples = list(samples)
    if not samples:
        raise ValueError("isaacs_gap needs at least one sample")
    gap = 0.0
    for t, x, q, A, field in samples:
        vals = pair_values(problem, quadrature, t, x, q, A, field)
        plus = saddle_from_values(problem, vals, "plus").value
        minus = saddle_from_values(problem, vals, "minus").value
        gap = max(gap, float(np.max(plus - minus)))
    return gap


def random_jet_samples(problem, n: int, rng: np.random.Generator, box: float = 3.0):
    """Random ``(t, x, q, A, field)`` inputs with smooth sine fields."""
    d = problem.dim
    out = []
    for _ in range(n):
        t = rng.uniform(0.0, problem.horizon)
        x = rng.uniform(-box, box, size=d)
        q = rng.normal(size=d)
        B = rng.normal(size=(d, d))
        A = 0.5 * (B + B.T)
        field = SmoothField.sine(rng.normal(size=d), phase=rng.uniform(0, 2 * np.pi))
        out.append((t, x, q, A, field))
    return out
