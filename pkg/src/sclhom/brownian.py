"""Seed-reproducible scalar Brownian paths on dyadic grids with bridge refinement.

Every Gaussian draw is a pure function of (seed, stream_id, level, dyadic index),
realized by a stateless SplitMix64-style hash fed through the normal inverse CDF.
The path at any level is therefore a pure function of (seed, stream_id, level):
refinement, re-sampling, and parallel ensembles all reproduce bit-identical values
regardless of call order or scheduling.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from .errors import IndexOutOfRange, LevelTooDeep

MAX_LEVEL = 30

_MASK = np.uint64(0xFFFFFFFFFFFFFFFF)
_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
# distinct stir constants so (seed, stream, level, index) components cannot alias
_C_STREAM = np.uint64(0xD6E8FEB86659FD93)
_C_LEVEL = np.uint64(0xA5A5A5A5A5A5A5A5)
_C_INDEX = np.uint64(0xC2B2AE3D27D4EB4F)


def _mix(x: np.ndarray) -> np.ndarray:
    # SplitMix64 finalizer; operates on uint64 arrays (wrapping arithmetic).
    x = (x + _GAMMA) & _MASK
    x = (x ^ (x >> np.uint64(30))) * _M1
    x = (x ^ (x >> np.uint64(27))) * _M2
    return x ^ (x >> np.uint64(31))


def _node_normals(seed: int, stream_id: int, level: int, indices: np.ndarray) -> np.ndarray:
    """Standard normals for the dyadic nodes (level, indices), one per index."""
    k = np.asarray(indices, dtype=np.uint64)
    # key components folded in Python ints (no wraparound warnings), masked to 64 bits
    stream_stir = ((stream_id & 0xFFFFFFFFFFFFFFFF) * int(_C_STREAM)) & 0xFFFFFFFFFFFFFFFF
    level_stir = (level * int(_C_LEVEL)) & 0xFFFFFFFFFFFFFFFF
    s = _mix(np.full_like(k, np.uint64(seed & 0xFFFFFFFFFFFFFFFF)))
    s = _mix(s ^ np.uint64(stream_stir))
    s = _mix(s ^ np.uint64(level_stir))
    s = _mix(s ^ (k * _C_INDEX))
    # uniform in (0,1): take top 53 bits, offset by half an ulp to avoid endpoints
    u = ((s >> np.uint64(11)).astype(np.float64) + 0.5) * (2.0 ** -53)
    return ndtri(u)


@dataclass(frozen=True)
class BrownianPath:
    """W on the dyadic grid t_j = j*T/2^level, j = 0..2^level, with W(0)=0."""

    T: float
    level: int
    seed: int
    stream_id: int
    values: np.ndarray

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.T, 2**self.level + 1)

    @property
    def dt(self) -> float:
        return self.T / 2**self.level

    def increment(self, j: int) -> float:
        if not 0 <= j < 2**self.level:
            raise IndexOutOfRange(f"increment index {j} outside [0, {2**self.level})")
        return float(self.values[j + 1] - self.values[j])

    def increments(self) -> np.ndarray:
        return np.diff(self.values)

    def refine(self) -> "BrownianPath":
        if self.level >= MAX_LEVEL:
            raise LevelTooDeep(f"level {self.level + 1} exceeds {MAX_LEVEL}")
        return sample_path(self.seed, self.stream_id, self.T, self.level + 1)

    def at_level(self, level: int) -> "BrownianPath":
        """Same realization at another level (coarser: strided subset, bit-identical)."""
        if level == self.level:
            return self
        if level < self.level:
            stride = 2 ** (self.level - level)
            return BrownianPath(self.T, level, self.seed, self.stream_id,
                                self.values[::stride].copy())
        return sample_path(self.seed, self.stream_id, self.T, level)

    def dump_csv(self, fileobj) -> None:
        fileobj.write("t,W\n")
        for t, w in zip(self.times, self.values):
            fileobj.write(f"{t:.17g},{w:.17g}\n")


def sample_path(seed: int, stream_id: int, T: float, level: int) -> BrownianPath:
    """Build W at the given level by root draw + Brownian-bridge midpoints.

    The root increment uses node (level 0, index 0); the midpoint of parent
    interval k at level ell uses node (ell, k) and is drawn from
    N((W_left+W_right)/2, dt_parent/4).
    """
    if level > MAX_LEVEL:
        raise LevelTooDeep(f"level {level} exceeds {MAX_LEVEL}")
    if T <= 0:
        raise ValueError("T must be positive")
    w = np.zeros(2)
    w[1] = np.sqrt(T) * _node_normals(seed, stream_id, 0, np.array([0]))[0]
    for ell in range(1, level + 1):
        z = _node_normals(seed, stream_id, ell, np.arange(2 ** (ell - 1)))
        new = np.empty(2**ell + 1)
        new[::2] = w
        new[1::2] = 0.5 * (w[:-1] + w[1:]) + np.sqrt(T / 2 ** (ell + 1)) * z
        w = new
    return BrownianPath(float(T), level, seed, stream_id, w)


def refine(path: BrownianPath) -> BrownianPath:
    return path.refine()


def increment(path: BrownianPath, j: int) -> float:
    return path.increment(j)
