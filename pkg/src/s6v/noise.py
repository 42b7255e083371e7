"""Counter-based keyed uniforms.

Every random draw in the package is a pure function of
``(seed, channel, coords, counter)``.  Coupled copies of a model that look
up the same key see the same uniform, which is all the shared-noise
couplings need.

Key schedule (version ``GENERATOR_VERSION``), all arithmetic mod 2**64::

    mix(z)     = splitmix64 finalizer
    fold(k, c) = mix(k + GOLDEN * (c + 1))          # c taken mod 2**64
    key        = fold(mix(seed + GOLDEN * (channel + 1)), counter)
    for c in reversed(coords): key = fold(key, c)
    u          = (key >> 11) * 2**-53

Coordinates are folded last-to-first, so for a lattice channel keyed by
``(i, j)`` a sweep along ``i`` costs one mix per draw once the row key is
cached.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numba import njit, uint64, int64

GENERATOR_VERSION = "splitmix64-fold/1"

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_REPLICATE_SALT = np.uint64(0x5851F42D4C957F2D)
_INV53 = 1.0 / 9007199254740992.0
_MASK64 = (1 << 64) - 1


class Channel(enum.IntEnum):
    VERTEX_H = 0
    VERTEX_V = 1
    BOUNDARY_WEST = 2
    BOUNDARY_SOUTH = 3
    WALK = 4
    ASEP_EDGE = 5
    ASEP_TIME = 6


@njit(cache=True, inline="always")
def mix64(z):
    z = (z ^ (z >> uint64(30))) * _M1
    z = (z ^ (z >> uint64(27))) * _M2
    return z ^ (z >> uint64(31))


@njit(cache=True, inline="always")
def fold(key, c):
    # negative coordinates wrap around mod 2**64
    return mix64(key + GOLDEN * (uint64(int64(c) + int64(1))))


@njit(cache=True, inline="always")
def to_unit(key):
    return float(key >> uint64(11)) * _INV53


@njit(cache=True, inline="always")
def channel_key(seed, channel, counter):
    k = mix64(uint64(seed) + GOLDEN * uint64(channel + 1))
    return fold(k, counter)


@njit(cache=True)
def replicate_key(seed, rep):
    return mix64(mix64(uint64(seed) ^ _REPLICATE_SALT) + GOLDEN * uint64(rep + 1))


@njit(cache=True)
def _uniform_many(seed, channel, coords, counter):
    n, d = coords.shape
    out = np.empty(n, np.float64)
    base = channel_key(seed, channel, counter)
    for r in range(n):
        k = base
        for c in range(d - 1, -1, -1):
            k = fold(k, coords[r, c])
        out[r] = to_unit(k)
    return out


def _as_u64(seed: int) -> np.uint64:
    return np.uint64(int(seed) & _MASK64)


def replicate_seed(seed: int, rep: int) -> int:
    """Seed of replicate ``rep`` derived from a top-level seed."""
    return int(replicate_key(_as_u64(seed), np.int64(rep)))


@dataclass(frozen=True)
class NoiseField:
    seed: int

    def uniform(self, channel: Channel, coords: Sequence[int], counter: int = 0) -> float:
        return uniform_at(self, channel, coords, counter)

    def replicate(self, rep: int) -> "NoiseField":
        return NoiseField(replicate_seed(self.seed, rep))

    @property
    def key(self) -> np.uint64:
        return _as_u64(self.seed)


def uniform_at(field: NoiseField, channel: Channel, coords: Sequence[int], counter: int = 0) -> float:
    if counter < 0:
        raise ValueError("counter must be nonnegative")
    arr = np.asarray([list(coords)], dtype=np.int64).reshape(1, -1)
    return float(_uniform_many(field.key, int(channel), arr, np.int64(counter))[0])


def uniforms_at(field: NoiseField, channel: Channel, coords, counter: int = 0) -> np.ndarray:
    """Vectorised ``uniform_at`` over the rows of an integer array."""
    if counter < 0:
        raise ValueError("counter must be nonnegative")
    arr = np.asarray(coords, dtype=np.int64)
    if arr.ndim == 1:
        arr = arr[:, None]
    return _uniform_many(field.key, int(channel), np.ascontiguousarray(arr), np.int64(counter))
