"""Stochastic six vertex model on a finite box: parameters, boundary data,
sampler and height observables."""
from __future__ import annotations

import io
import math
import struct
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from . import _kernels
from .noise import GENERATOR_VERSION, NoiseField

MAX_DIM = 1 << 20

# vertex configuration codes
EMPTY, V_STRAIGHT, V_TURN, H_STRAIGHT, H_TURN, FULL = range(6)
VERTEX_NAMES = ("empty", "v->v", "v->h", "h->h", "h->v", "full")


@dataclass(frozen=True)
class ModelParams:
    delta1: float
    delta2: float
    kappa: float
    theta: float
    frak_a: Optional[float] = None
    assumption: Optional[tuple[bool, bool, bool]] = None

    @property
    def open_ordered(self) -> bool:
        """0 < delta2 < delta1 < 1, required by most closed forms."""
        return 0.0 < self.delta2 < self.delta1 < 1.0

    def require_open(self) -> None:
        if not self.open_ordered:
            raise ValueError(
                f"need 0 < delta2 < delta1 < 1, got delta1={self.delta1}, delta2={self.delta2}"
            )


def _kappa(d1: float, d2: float) -> float:
    if d2 == 1.0:
        return math.inf if d1 < 1.0 else math.nan
    return (1.0 - d1) / (1.0 - d2)


def _theta(d1: float, d2: float) -> float:
    m = min(d1, 0.5)
    if m + d2 == 0.0:
        return math.nan
    return (m - d2) / (m + d2)


def assumption_flags(d1: float, d2: float, frak_a: float) -> tuple[bool, bool, bool]:
    kappa = _kappa(d1, d2)
    theta = _theta(d1, d2)
    item1 = bool(theta >= frak_a)
    item2 = bool(1.0 - d1 >= frak_a)
    item3 = bool(frak_a * d1 <= 1.0 - kappa <= d1 / frak_a)
    return item1, item2, item3


def derive_params(delta1: float, delta2: float, frak_a: Optional[float] = None) -> ModelParams:
    d1 = float(delta1)
    d2 = float(delta2)
    if not (0.0 <= d1 <= 1.0 and 0.0 <= d2 <= 1.0):
        raise ValueError(f"vertex probabilities must lie in [0,1], got {d1}, {d2}")
    flags = None
    if frak_a is not None:
        if frak_a <= 0:
            raise ValueError("frak_a must be positive")
        flags = assumption_flags(d1, d2, frak_a)
    return ModelParams(d1, d2, _kappa(d1, d2), _theta(d1, d2), frak_a, flags)


@dataclass(frozen=True)
class Segment:
    """Entry probability ``p`` on slots ``start..stop`` (inclusive, stop=None = open)."""
    start: int
    stop: Optional[int]
    p: float

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"segment probability {self.p} outside [0,1]")
        if self.start < 1 or (self.stop is not None and self.stop < self.start):
            raise ValueError(f"bad segment range {self.start}..{self.stop}")


SIDES = ("west", "south")


@dataclass(frozen=True)
class BoundarySpec:
    """Entry law for the west column (rows j) and south row (columns i).

    Slots not covered by any segment are empty; later segments win over
    earlier ones and overrides win over everything.
    """
    west: tuple[Segment, ...] = ()
    south: tuple[Segment, ...] = ()
    overrides: tuple[tuple[str, int, bool], ...] = ()

    @classmethod
    def bernoulli(cls, b1: float, b2: float) -> "BoundarySpec":
        return cls((Segment(1, None, b1),), (Segment(1, None, b2),))

    @classmethod
    def step(cls) -> "BoundarySpec":
        return cls((), (Segment(1, None, 1.0),))

    @classmethod
    def empty(cls) -> "BoundarySpec":
        return cls()

    def with_override(self, side: str, index: int, present: bool) -> "BoundarySpec":
        if side not in SIDES:
            raise ValueError(f"side must be one of {SIDES}")
        kept = tuple(o for o in self.overrides if (o[0], o[1]) != (side, index))
        return replace(self, overrides=kept + ((side, int(index), bool(present)),))

    def with_vertex(self, v0: tuple[int, int], present: bool) -> "BoundarySpec":
        side, index = boundary_slot(v0)
        return self.with_override(side, index, present)

    def probabilities(self, x_max: int, y_max: int) -> tuple[np.ndarray, np.ndarray]:
        west = _resolve(self.west, y_max)
        south = _resolve(self.south, x_max)
        for side, index, present in self.overrides:
            arr = west if side == "west" else south
            if 1 <= index <= arr.shape[0]:
                arr[index - 1] = 1.0 if present else 0.0
        return west, south

    def dominates(self, other: "BoundarySpec", x_max: int, y_max: int) -> bool:
        w1, s1 = self.probabilities(x_max, y_max)
        w2, s2 = other.probabilities(x_max, y_max)
        return bool(np.all(w1 >= w2) and np.all(s1 >= s2))


def _resolve(segments: Iterable[Segment], n: int) -> np.ndarray:
    out = np.zeros(n, np.float64)
    for seg in segments:
        hi = n if seg.stop is None else min(seg.stop, n)
        if seg.start <= hi:
            out[seg.start - 1:hi] = seg.p
    return out


def boundary_slot(v0: tuple[int, int]) -> tuple[str, int]:
    """Map a boundary vertex (i, 0) or (0, j) to its entry slot."""
    i, j = v0
    if j == 0 and i >= 1:
        return "south", i
    if i == 0 and j >= 1:
        return "west", j
    raise ValueError(f"{v0} is not a boundary vertex")


@dataclass(frozen=True)
class PathEnsemble:
    x_max: int
    y_max: int
    h: np.ndarray = field(repr=False)
    v: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.h.shape != (self.x_max + 1, self.y_max) or self.v.shape != (self.x_max, self.y_max + 1):
            raise ValueError("edge planes do not match dims")
        self.h.setflags(write=False)
        self.v.setflags(write=False)

    @property
    def dims(self) -> tuple[int, int]:
        return self.x_max, self.y_max

    def h_in(self, i: int, j: int) -> int:
        return int(self.h[i - 1, j - 1])

    def v_in(self, i: int, j: int) -> int:
        return int(self.v[i - 1, j - 1])

    def vertex_codes(self) -> np.ndarray:
        """Configuration code of every vertex, indexed [i-1, j-1]."""
        vin = self.v[:, :-1].astype(np.int8)
        hin = self.h[:-1, :].astype(np.int8)
        vout = self.v[:, 1:].astype(np.int8)
        hout = self.h[1:, :].astype(np.int8)
        codes = np.full(vin.shape, -1, np.int8)
        codes[(vin == 0) & (hin == 0) & (vout == 0) & (hout == 0)] = EMPTY
        codes[(vin == 1) & (hin == 0) & (vout == 1) & (hout == 0)] = V_STRAIGHT
        codes[(vin == 1) & (hin == 0) & (vout == 0) & (hout == 1)] = V_TURN
        codes[(vin == 0) & (hin == 1) & (vout == 0) & (hout == 1)] = H_STRAIGHT
        codes[(vin == 0) & (hin == 1) & (vout == 1) & (hout == 0)] = H_TURN
        codes[(vin == 1) & (hin == 1) & (vout == 1) & (hout == 1)] = FULL
        return codes

    def is_valid(self) -> bool:
        return bool(np.all(self.vertex_codes() >= 0))

    def edge_count(self) -> int:
        return int(self.h.sum()) + int(self.v.sum())

    def contains(self, other: "PathEnsemble") -> bool:
        return bool(np.all(self.h >= other.h) and np.all(self.v >= other.v))


@dataclass(frozen=True)
class HeightDecomposition:
    W: int
    N: int
    E: int
    S: int
    H: int


def sample_ensemble(params: ModelParams, boundary: BoundarySpec, dims: tuple[int, int],
                    noise: NoiseField) -> PathEnsemble:
    x_max, y_max = (int(d) for d in dims)
    if x_max < 1 or y_max < 1:
        raise ValueError("dims must be positive")
    if x_max > MAX_DIM or y_max > MAX_DIM or x_max * y_max > (1 << 34):
        raise OverflowError(f"dims {dims} exceed bit-plane capacity")
    west_p, south_p = boundary.probabilities(x_max, y_max)
    h, v = _kernels.sample_planes(noise.key, params.delta1, params.delta2, west_p, south_p, x_max, y_max)
    return PathEnsemble(x_max, y_max, h, v)


def _check_point(ens: PathEnsemble, x: int, y: int) -> None:
    if not (0 <= x <= ens.x_max and 0 <= y <= ens.y_max):
        raise IndexError(f"({x}, {y}) outside box {ens.dims}")


def boundary_counts(ens: PathEnsemble, x: int, y: int) -> HeightDecomposition:
    _check_point(ens, x, y)
    W = int(ens.h[0, :y].sum())
    S = int(ens.v[:x, 0].sum())
    E = int(ens.h[x, :y].sum())
    N = int(ens.v[:x, y].sum())
    return HeightDecomposition(W, N, E, S, E - S)


def height_flux(ens: PathEnsemble, x: int, y: int) -> int:
    _check_point(ens, x, y)
    return int(ens.h[x, :y].sum()) - int(ens.v[:x, 0].sum())


def height_grid(ens: PathEnsemble) -> np.ndarray:
    """H(x, y) for all 0 <= x <= x_max, 0 <= y <= y_max, via W - N."""
    W = np.concatenate([[0], np.cumsum(ens.h[0, :], dtype=np.int64)])
    N = np.vstack([np.zeros((1, ens.y_max + 1), np.int64), np.cumsum(ens.v, axis=0, dtype=np.int64)])
    return W[None, :] - N


# ---- serialization -------------------------------------------------------

MAGIC = b"S6VENS\x00\x01"


def dump_ensemble(ens: PathEnsemble) -> bytes:
    """Binary dump: magic, little-endian (x_max, y_max), packed h plane, packed v plane."""
    buf = io.BytesIO()
    buf.write(MAGIC)
    buf.write(struct.pack("<II", ens.x_max, ens.y_max))
    buf.write(np.packbits(ens.h, axis=None).tobytes())
    buf.write(np.packbits(ens.v, axis=None).tobytes())
    return buf.getvalue()


def load_ensemble(data: bytes) -> PathEnsemble:
    if data[:len(MAGIC)] != MAGIC:
        raise ValueError("not an ensemble dump (bad magic)")
    off = len(MAGIC)
    x_max, y_max = struct.unpack_from("<II", data, off)
    off += 8
    nh = (x_max + 1) * y_max
    nv = x_max * (y_max + 1)
    lh = (nh + 7) // 8
    bits = np.frombuffer(data, np.uint8, offset=off)
    h = np.unpackbits(bits[:lh], count=nh).reshape(x_max + 1, y_max)
    v = np.unpackbits(bits[lh:], count=nv).reshape(x_max, y_max + 1)
    return PathEnsemble(x_max, y_max, h, v)


def write_ensemble(ens: PathEnsemble, path) -> None:
    Path(path).write_bytes(dump_ensemble(ens))


def text_grid(ens: PathEnsemble) -> str:
    """Debug grid, top row first; one glyph per vertex.

    ``.`` empty, ``|`` straight up, ``-`` straight right, ``r`` bottom-in
    turning right, ``j`` left-in turning up, ``+`` two arrows.
    """
    glyph = {EMPTY: ".", V_STRAIGHT: "|", V_TURN: "r", H_STRAIGHT: "-", H_TURN: "j", FULL: "+"}
    codes = ens.vertex_codes()
    lines = []
    for j in range(ens.y_max, 0, -1):
        lines.append("".join(glyph.get(int(c), "?") for c in codes[:, j - 1]))
    return "\n".join(lines) + "\n"


def manifest_stamp() -> dict:
    return {"generator": GENERATOR_VERSION}
