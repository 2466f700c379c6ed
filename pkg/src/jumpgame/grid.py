"""Uniform tensor grids on a box in R^d (d = 1 or 2)."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class SpatialGrid:
    lower: tuple
    upper: tuple
    spacing: tuple
    shape: tuple

    @classmethod
    def uniform(cls, lower, upper, dx) -> "SpatialGrid":
        """Grid covering ``[lower, upper]`` exactly with spacing at most ``dx`` per axis."""
        lower = tuple(float(v) for v in np.atleast_1d(lower))
        upper = tuple(float(v) for v in np.atleast_1d(upper))
        dx = np.broadcast_to(np.atleast_1d(np.asarray(dx, dtype=float)), (len(lower),))
        if len(upper) != len(lower):
            raise ConfigError("lower and upper bounds differ in length", "grid")
        if len(lower) not in (1, 2):
            raise ConfigError("grids support d = 1 or d = 2 only", "grid")
        shape, spacing = [], []
        for lo, hi, h in zip(lower, upper, dx):
            if not (hi > lo and h > 0):
                raise ConfigError("need upper > lower and dx > 0", "grid")
            cells = max(2, math.ceil((hi - lo) / h - 1e-9))
            shape.append(cells + 1)
            spacing.append((hi - lo) / cells)
        return cls(lower, upper, tuple(spacing), tuple(shape))

    @property
    def dim(self) -> int:
        return len(self.shape)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def axes(self) -> list:
        return [lo + h * np.arange(n) for lo, h, n in zip(self.lower, self.spacing, self.shape)]

    @cached_property
    def points(self) -> np.ndarray:
        """Node coordinates ``(size, d)`` in lexicographic (C) order."""
        mesh = np.meshgrid(*self.axes, indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=1)
        pts.flags.writeable = False
        return pts

    def to_index(self, x: np.ndarray) -> np.ndarray:
        """Fractional node indices ``(d, n)`` of points ``(n, d)``."""
        lo = np.asarray(self.lower)
        h = np.asarray(self.spacing)
        return ((np.asarray(x, dtype=float) - lo) / h).T

    def interior_mask(self, margin: float) -> np.ndarray:
        """Boolean mask over nodes at distance ``>= margin`` from every face."""
        mask = np.ones(self.shape, dtype=bool)
        for a, ax in enumerate(self.axes):
            ok = (ax - self.lower[a] >= margin - 1e-12) & (self.upper[a] - ax >= margin - 1e-12)
            shape = [1] * self.dim
            shape[a] = -1
            mask &= ok.reshape(shape)
        return mask

    def to_dict(self) -> dict:
        return {"lower": list(self.lower), "upper": list(self.upper), "dx": list(self.spacing)}
