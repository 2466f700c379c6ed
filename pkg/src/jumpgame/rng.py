"""Counter-based random numbers keyed by ``(seed, path, step, slot)``.

Each draw is a pure function of its key, so a path's noise does not depend
on how many paths are simulated alongside it or in which order.  The mixer is
the splitmix64 finaliser applied to the key words one after another; normals
and Poisson counts are obtained from the uniforms by inverse CDF.
"""

from __future__ import annotations

import numpy as np
from scipy.special import ndtri
from scipy.stats import poisson

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30, _S27, _S31, _S11 = (np.uint64(s) for s in (30, 27, 31, 11))


def _mix(x: np.ndarray) -> np.ndarray:
    x = x ^ (x >> _S30)
    x = x * _M1
    x = x ^ (x >> _S27)
    x = x * _M2
    return x ^ (x >> _S31)


def _word(v) -> np.ndarray:
    return np.asarray(v).astype(np.int64).astype(np.uint64)


def keyed_bits(seed: int, path, step, slot) -> np.ndarray:
    """64 random bits per key; ``path``, ``step`` and ``slot`` broadcast together."""
    with np.errstate(over="ignore"):
        h = _mix(_word(seed) + _GOLDEN)
        for part in (path, step, slot):
            h = _mix(h ^ (_word(part) + _GOLDEN))
    return h


def uniform(seed: int, path, step, slot) -> np.ndarray:
    """Uniforms in the open interval (0, 1) with 53-bit resolution."""
    bits = keyed_bits(seed, path, step, slot) >> _S11
    return (bits.astype(np.float64) + 0.5) * 2.0 ** -53


def normal(seed: int, path, step, slot) -> np.ndarray:
    return ndtri(uniform(seed, path, step, slot))


def poisson_count(seed: int, path, step, slot, mean: float) -> np.ndarray:
    if mean <= 0:
        return np.zeros(np.broadcast(path, step, slot).shape, dtype=np.int64)
    return poisson.ppf(uniform(seed, path, step, slot), mean).astype(np.int64)
