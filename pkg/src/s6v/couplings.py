"""Shared-noise couplings, second-class particle constructions, and the
biased label walk."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from numba import njit

from . import _kernels as K
from .model import BoundarySpec, ModelParams, PathEnsemble, boundary_slot, height_grid, sample_ensemble
from .noise import NoiseField, channel_key, fold, replicate_key, to_unit

NORTH, EAST = 0, 1
SIDE_NAMES = ("north", "east")
_ERR_CONSERVATION = -1
_ERR_BAD_MEETING = -2


class CouplingError(RuntimeError):
    """An internal invariant of a coupling was violated."""


@dataclass(frozen=True)
class CoupledEnsembles:
    xi: PathEnsemble
    eta: PathEnsemble
    seed: int

    def violations(self) -> int:
        """Number of edges present in eta but not in xi."""
        return int(np.sum(self.eta.h > self.xi.h)) + int(np.sum(self.eta.v > self.xi.v))


@dataclass(frozen=True)
class GreyPathSet:
    dims: tuple[int, int]
    paths: list  # each an (m, 2) int array of vertices, boundary start to exit point
    labels: np.ndarray  # label of each path, -... to the northwest, 0 through v0
    label_h: np.ndarray = field(repr=False)
    label_v: np.ndarray = field(repr=False)

    def __len__(self):
        return len(self.paths)

    def flux_grid(self) -> np.ndarray:
        """Net grey flux across (0,0)-(x,y) for all x, y, counted from path steps."""
        X, Y = self.dims
        cross = np.zeros((X + 1, Y + 1), np.int64)
        south = np.zeros(X + 1, np.int64)
        for p in self.paths:
            if p[0, 1] == 0:
                south[p[0, 0]] += 1
            for a, b in zip(p[:-1], p[1:]):
                if b[0] == a[0] + 1:
                    cross[a[0], a[1]] += 1
        E = np.cumsum(cross, axis=1)
        S = np.cumsum(south)
        return E - S[:, None]


@dataclass(frozen=True)
class SecondClassTrace:
    v0: tuple[int, int]
    vertices: np.ndarray  # (m, 2), one vertex per antidiagonal, ends outside the box
    side: int
    coord: int
    labels: Optional[np.ndarray] = None

    @property
    def antidiagonals(self) -> np.ndarray:
        return self.vertices.sum(axis=1)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "i", "j", "label"])
        for k, (i, j) in enumerate(self.vertices):
            lab = "" if self.labels is None or k >= len(self.labels) else int(self.labels[k])
            w.writerow([int(i + j), int(i), int(j), lab])
        return buf.getvalue()


def _start(v0: tuple[int, int]) -> tuple[int, int, bool]:
    side, idx = boundary_slot(v0)
    if side == "south":
        return idx, 1, False
    return 1, idx, True


# ---- jitted walkers ---------------------------------------------------------

@njit(cache=True)
def _walk_u(key, counter, n):
    return to_unit(fold(channel_key(key, K.CH_WALK, counter), n))


@njit(cache=True)
def _follow_grey(gh, gv, X, Y, i, j, left, verts):
    """Trace a single grey path; returns (length, side, coord) or an error code."""
    m = 0
    verts[m, 0] = i - 1 if left else i
    verts[m, 1] = j if left else j - 1
    m += 1
    while True:
        verts[m, 0] = i
        verts[m, 1] = j
        m += 1
        nin = gh[i - 1, j - 1] + gv[i - 1, j - 1]
        out_r = gh[i, j - 1]
        out_u = gv[i - 1, j]
        if nin == 1:
            if out_r + out_u != 1:
                return _ERR_CONSERVATION, 0, 0
            right = out_r == 1
        elif nin == 2:
            if out_r + out_u != 2:
                return _ERR_CONSERVATION, 0, 0
            right = not left
        else:
            return _ERR_CONSERVATION, 0, 0
        if right:
            if i == X:
                verts[m, 0] = X + 1
                verts[m, 1] = j
                return m + 1, 1, j
            i += 1
            left = True
        else:
            if j == Y:
                verts[m, 0] = i
                verts[m, 1] = Y + 1
                return m + 1, 0, i
            j += 1
            left = False


@njit(cache=True)
def _grey_paths(gh, gv, X, Y):
    """Decompose grey edges into non-crossing paths, northwest to southeast."""
    cap = X + Y + 3
    nstart = 0
    for j in range(Y):
        nstart += gh[0, j]
    for i in range(X):
        nstart += gv[i, 0]
    verts = np.zeros((nstart, cap, 2), np.int64)
    lengths = np.zeros(nstart, np.int64)
    lab_h = np.full((X + 1, Y), -1, np.int64)
    lab_v = np.full((X, Y + 1), -1, np.int64)
    rank = 0
    for t in range(Y + X):
        if t < Y:
            j = Y - t
            if gh[0, j - 1] == 0:
                continue
            i, left = 1, True
        else:
            i = t - Y + 1
            if gv[i - 1, 0] == 0:
                continue
            j, left = 1, False
        m, side, coord = _follow_grey(gh, gv, X, Y, i, j, left, verts[rank])
        if m < 0:
            return verts, lengths, lab_h, lab_v, m
        lengths[rank] = m
        for k in range(m - 1):
            a0, a1 = verts[rank, k, 0], verts[rank, k, 1]
            b0, b1 = verts[rank, k + 1, 0], verts[rank, k + 1, 1]
            if b0 == a0 + 1:
                lab_h[b0 - 1, b1 - 1] = rank
            else:
                lab_v[b0 - 1, b1 - 1] = rank
        rank += 1
    return verts, lengths, lab_h, lab_v, rank


@njit(cache=True)
def _direct(eh, ev, X, Y, key, d1, d2, i, j, left, verts):
    kh = channel_key(key, K.CH_H, 0)
    kv = channel_key(key, K.CH_V, 0)
    m = 0
    verts[m, 0] = i - 1 if left else i
    verts[m, 1] = j if left else j - 1
    m += 1
    while True:
        verts[m, 0] = i
        verts[m, 1] = j
        m += 1
        if left:
            if eh[i - 1, j - 1] == 1:
                return _ERR_CONSERVATION, 0, 0
            black = ev[i - 1, j - 1]
        else:
            if ev[i - 1, j - 1] == 1:
                return _ERR_CONSERVATION, 0, 0
            black = eh[i - 1, j - 1]
        if black == 1:
            # the black arrow already chose; take the free outgoing edge
            right = ev[i - 1, j] == 1
        elif left:
            right = to_unit(fold(fold(kh, j), i)) < d2
        else:
            right = not (to_unit(fold(fold(kv, j), i)) < d1)
        if right:
            if i == X:
                verts[m, 0] = X + 1
                verts[m, 1] = j
                return m + 1, 1, j
            i += 1
            left = True
        else:
            if j == Y:
                verts[m, 0] = i
                verts[m, 1] = Y + 1
                return m + 1, 0, i
            j += 1
            left = False


@njit(cache=True)
def _antiparticle(ph, pv, X, Y, key, d1, d2, i, j, left, verts):
    m = 0
    verts[m, 0] = i - 1 if left else i
    verts[m, 1] = j if left else j - 1
    m += 1
    while True:
        verts[m, 0] = i
        verts[m, 1] = j
        m += 1
        if (left and ph[i - 1, j - 1] == 0) or (not left and pv[i - 1, j - 1] == 0):
            return _ERR_CONSERVATION, 0, 0
        nin = ph[i - 1, j - 1] + pv[i - 1, j - 1]
        if nin == 2:
            u = _walk_u(key, 0, i + j)
            if left:
                right = u < d1
            else:
                right = not (u < d2)
        else:
            right = ph[i, j - 1] == 1
        if right:
            if i == X:
                verts[m, 0] = X + 1
                verts[m, 1] = j
                return m + 1, 1, j
            i += 1
            left = True
        else:
            if j == Y:
                verts[m, 0] = i
                verts[m, 1] = Y + 1
                return m + 1, 0, i
            j += 1
            left = False


@njit(cache=True)
def _concavity(gh, gv, X, Y, key, d1, d2, i0, j0, left0, va, vb):
    """Joint label walks a (denser system) and b (sparser system).

    Returns (len_a, side_a, coord_a, len_b, side_b, coord_b) or an error code
    in the first slot.
    """
    ia, ja, la = i0, j0, left0
    ib, jb, lb = i0, j0, left0
    va[0, 0] = i0 - 1 if left0 else i0
    va[0, 1] = j0 if left0 else j0 - 1
    vb[0, 0] = va[0, 0]
    vb[0, 1] = va[0, 1]
    ma = 1
    mb = 1
    alive_a = True
    alive_b = True
    side_a = coord_a = side_b = coord_b = 0
    while alive_a or alive_b:
        ra = False
        rb = False
        if alive_a:
            va[ma, 0] = ia
            va[ma, 1] = ja
            ma += 1
        if alive_b:
            vb[mb, 0] = ib
            vb[mb, 1] = jb
            mb += 1
        if alive_a and alive_b and ia == ib and ja == jb:
            n = ia + ja
            nin = gh[ia - 1, ja - 1] + gv[ia - 1, ja - 1]
            if nin == 1:
                if la != lb:
                    return _ERR_CONSERVATION, 0, 0, 0, 0, 0
                ra = gh[ia, ja - 1] == 1
                rb = ra
            elif nin == 2:
                u = _walk_u(key, 2, n)
                if la and lb:
                    if u < 1.0 - d1:
                        ra, rb = False, False
                    elif u < 1.0 - d2:
                        ra, rb = True, False
                    else:
                        ra, rb = True, True
                elif (not la) and (not lb):
                    if u < d2:
                        ra, rb = False, False
                    elif u < d1:
                        ra, rb = True, False
                    else:
                        ra, rb = True, True
                elif lb and not la:
                    if u < d2:
                        ra, rb = False, False
                    elif u < 1.0 - d2:
                        ra, rb = True, False
                    else:
                        ra, rb = True, True
                else:
                    return _ERR_BAD_MEETING, 0, 0, 0, 0, 0
            else:
                return _ERR_CONSERVATION, 0, 0, 0, 0, 0
        else:
            if alive_a:
                nin = gh[ia - 1, ja - 1] + gv[ia - 1, ja - 1]
                if nin == 1:
                    ra = gh[ia, ja - 1] == 1
                elif nin == 2:
                    u = _walk_u(key, 0, ia + ja)
                    ra = (u < d1) if la else not (u < d2)
                else:
                    return _ERR_CONSERVATION, 0, 0, 0, 0, 0
            if alive_b:
                nin = gh[ib - 1, jb - 1] + gv[ib - 1, jb - 1]
                if nin == 1:
                    rb = gh[ib, jb - 1] == 1
                elif nin == 2:
                    u = _walk_u(key, 1, ib + jb)
                    rb = (u < d2) if lb else not (u < d1)
                else:
                    return _ERR_CONSERVATION, 0, 0, 0, 0, 0
        if alive_a:
            if ra:
                if ia == X:
                    va[ma, 0] = X + 1
                    va[ma, 1] = ja
                    ma += 1
                    alive_a = False
                    side_a, coord_a = 1, ja
                else:
                    ia += 1
                    la = True
            else:
                if ja == Y:
                    va[ma, 0] = ia
                    va[ma, 1] = Y + 1
                    ma += 1
                    alive_a = False
                    side_a, coord_a = 0, ia
                else:
                    ja += 1
                    la = False
        if alive_b:
            if rb:
                if ib == X:
                    vb[mb, 0] = X + 1
                    vb[mb, 1] = jb
                    mb += 1
                    alive_b = False
                    side_b, coord_b = 1, jb
                else:
                    ib += 1
                    lb = True
            else:
                if jb == Y:
                    vb[mb, 0] = ib
                    vb[mb, 1] = Y + 1
                    mb += 1
                    alive_b = False
                    side_b, coord_b = 0, ib
                else:
                    jb += 1
                    lb = False
    return ma, side_a, coord_a, mb, side_b, coord_b


@njit(cache=True)
def _edge_labels(verts, m, lab_h, lab_v):
    out = np.empty(m - 1, np.int64)
    for k in range(m - 1):
        b0, b1 = verts[k + 1, 0], verts[k + 1, 1]
        if b0 == verts[k, 0] + 1:
            out[k] = lab_h[b0 - 1, b1 - 1]
        else:
            out[k] = lab_v[b0 - 1, b1 - 1]
    return out


@njit(cache=True)
def _ordering_violations(va, ma, vb, mb, lab_h, lab_v, offset):
    """Count antidiagonals where a < b in label or where a lies northwest of b."""
    la = _edge_labels(va, ma, lab_h, lab_v)
    lb = _edge_labels(vb, mb, lab_h, lab_v)
    bad = 0
    n = min(la.shape[0], lb.shape[0])
    for k in range(n):
        if la[k] - offset < lb[k] - offset:
            bad += 1
    n = min(ma, mb)
    for k in range(n):
        if va[k, 0] < vb[k, 0]:
            bad += 1
    return bad


# ---- public operations ------------------------------------------------------

def basic_couple(params: ModelParams, dense: BoundarySpec, sparse: BoundarySpec,
                 dims: tuple[int, int], noise: NoiseField) -> CoupledEnsembles:
    x_max, y_max = dims
    if not dense.dominates(sparse, x_max, y_max):
        raise ValueError("dense boundary law does not dominate the sparse one")
    xi = sample_ensemble(params, dense, dims, noise)
    eta = sample_ensemble(params, sparse, dims, noise)
    return CoupledEnsembles(xi, eta, noise.seed)


def _grey_planes(pair: CoupledEnsembles) -> tuple[np.ndarray, np.ndarray]:
    if pair.violations():
        raise CouplingError("domination violated: eta has edges missing from xi")
    gh = pair.xi.h.astype(np.int8) - pair.eta.h.astype(np.int8)
    gv = pair.xi.v.astype(np.int8) - pair.eta.v.astype(np.int8)
    return gh.astype(np.uint8), gv.astype(np.uint8)


def grey_discrepancies(pair: CoupledEnsembles, v0: Optional[tuple[int, int]] = None) -> GreyPathSet:
    """Split xi minus eta into labelled non-crossing up-right paths.

    Labels increase from northwest to southeast; the path entering through
    ``v0`` (default: the first grey entry found from the northwest) gets 0.
    """
    gh, gv = _grey_planes(pair)
    X, Y = pair.xi.dims
    verts, lengths, lab_h, lab_v, count = _grey_paths(gh, gv, X, Y)
    if count < 0:
        raise CouplingError("grey edges do not form conserved paths")
    offset = 0
    if v0 is not None:
        side, idx = boundary_slot(v0)
        lab = lab_h[0, idx - 1] if side == "west" else lab_v[idx - 1, 0]
        if lab < 0:
            raise ValueError(f"no grey path through {v0}")
        offset = int(lab)
    paths = [verts[k, :lengths[k]].copy() for k in range(count)]
    labels = np.arange(count, dtype=np.int64) - offset
    mask_h = lab_h >= 0
    mask_v = lab_v >= 0
    lab_h = np.where(mask_h, lab_h - offset, np.iinfo(np.int64).min)
    lab_v = np.where(mask_v, lab_v - offset, np.iinfo(np.int64).min)
    return GreyPathSet((X, Y), paths, labels, lab_h, lab_v)


def grey_flux_mismatches(pair: CoupledEnsembles, grey: GreyPathSet) -> int:
    """Points where H_xi - H_eta differs from the path-counted grey flux."""
    diff = height_grid(pair.xi) - height_grid(pair.eta)
    return int(np.sum(diff != grey.flux_grid()))


def _trace(v0, verts, m, side, coord, labels=None) -> SecondClassTrace:
    if m < 0:
        raise CouplingError("second-class walk hit an inconsistent vertex")
    return SecondClassTrace(tuple(v0), verts[:m].copy(), int(side), int(coord), labels)


def discrepancy_trace(params: ModelParams, eta0: BoundarySpec, v0, dims, noise: NoiseField) -> SecondClassTrace:
    """Second-class path as the single discrepancy of a basic coupling."""
    dense = eta0.with_vertex(v0, True)
    sparse = eta0.with_vertex(v0, False)
    pair = basic_couple(params, dense, sparse, dims, noise)
    gh, gv = _grey_planes(pair)
    i, j, left = _start(v0)
    verts = np.zeros((dims[0] + dims[1] + 3, 2), np.int64)
    m, side, coord = _follow_grey(gh, gv, dims[0], dims[1], i, j, left, verts)
    return _trace(v0, verts, m, side, coord)


def second_class_direct(params: ModelParams, eta: PathEnsemble, v0, noise: NoiseField) -> SecondClassTrace:
    """Grow a second-class path on top of a sampled ensemble."""
    side_name, idx = boundary_slot(v0)
    occupied = eta.h[0, idx - 1] if side_name == "west" else eta.v[idx - 1, 0]
    if occupied:
        raise ValueError(f"boundary vertex {v0} is occupied in eta")
    i, j, left = _start(v0)
    X, Y = eta.dims
    verts = np.zeros((X + Y + 3, 2), np.int64)
    m, side, coord = _direct(eta.h, eta.v, X, Y, noise.key, params.delta1, params.delta2, i, j, left, verts)
    return _trace(v0, verts, m, side, coord)


def antiparticle_walk(params: ModelParams, xi_plus: PathEnsemble, v0, noise: NoiseField) -> SecondClassTrace:
    """Walk along the black arrows of xi_plus starting at v0, switching at full vertices."""
    side_name, idx = boundary_slot(v0)
    occupied = xi_plus.h[0, idx - 1] if side_name == "west" else xi_plus.v[idx - 1, 0]
    if not occupied:
        raise ValueError(f"boundary vertex {v0} is empty in xi_plus")
    i, j, left = _start(v0)
    X, Y = xi_plus.dims
    verts = np.zeros((X + Y + 3, 2), np.int64)
    m, side, coord = _antiparticle(xi_plus.h, xi_plus.v, X, Y, noise.key, params.delta1, params.delta2,
                                   i, j, left, verts)
    return _trace(v0, verts, m, side, coord)


def _check_concavity_params(params: ModelParams) -> None:
    if not (1.0 > params.delta1 > params.delta2 >= 0.0):
        raise ValueError("concavity coupling needs 1 > delta1 > delta2 >= 0")
    if params.delta2 > 0.5:
        raise ValueError("concavity coupling needs delta2 <= 1/2")


@dataclass(frozen=True)
class ConcavityResult:
    dense: SecondClassTrace   # second-class particle of the denser system
    sparse: SecondClassTrace  # second-class particle of the sparser system
    violations: int


def concavity_couple(params: ModelParams, xi0_minus: BoundarySpec, eta0: BoundarySpec, v0, dims,
                     noise: NoiseField) -> ConcavityResult:
    """Joint second-class particles with the denser one weakly southeast."""
    _check_concavity_params(params)
    if not xi0_minus.dominates(eta0, *dims):
        raise ValueError("xi0_minus must dominate eta0")
    # both laws are read with v0 removed
    eta0 = eta0.with_vertex(v0, False)
    pair = basic_couple(params, xi0_minus.with_vertex(v0, True), eta0, dims, noise)
    gh, gv = _grey_planes(pair)
    X, Y = dims
    verts, lengths, lab_h, lab_v, count = _grey_paths(gh, gv, X, Y)
    if count < 0:
        raise CouplingError("grey edges do not form conserved paths")
    i, j, left = _start(v0)
    side, idx = boundary_slot(v0)
    offset = int(lab_h[0, idx - 1] if side == "west" else lab_v[idx - 1, 0])
    va = np.zeros((X + Y + 3, 2), np.int64)
    vb = np.zeros((X + Y + 3, 2), np.int64)
    ma, sa, ca, mb, sb, cb = _concavity(gh, gv, X, Y, noise.key, params.delta1, params.delta2, i, j, left, va, vb)
    if ma < 0:
        raise CouplingError("label walks met in an impossible configuration")
    bad = int(_ordering_violations(va, ma, vb, mb, lab_h, lab_v, offset))
    bad += int(not exits_ordered(sa, ca, sb, cb))
    ta = _trace(v0, va, ma, sa, ca, _edge_labels(va, ma, lab_h, lab_v) - offset)
    tb = _trace(v0, vb, mb, sb, cb, _edge_labels(vb, mb, lab_h, lab_v) - offset)
    return ConcavityResult(ta, tb, bad)


def exits_ordered(side_a, coord_a, side_b, coord_b) -> bool:
    """Exit of a (denser) weakly southeast of the exit of b, along the box boundary."""
    return exit_rank(side_a, coord_a) >= exit_rank(side_b, coord_b)


def exit_rank(side, coord) -> float:
    # walk the exit boundary from the northwest corner clockwise
    return coord if side == NORTH else 1e9 - coord


def exit_point(trace: SecondClassTrace, dims) -> tuple[str, int]:
    X, Y = dims
    i, j = (int(c) for c in trace.vertices[-1])
    if i == X + 1 and 1 <= j <= Y:
        return "east", j
    if j == Y + 1 and 1 <= i <= X:
        return "north", i
    raise ValueError("trace does not leave the box")


# ---- batch drivers for Monte Carlo ------------------------------------------

@njit(cache=True)
def _exit_batch(mode, seed, rep0, nrep, d1, d2, west_p, south_p, X, Y, slot_west, idx):
    """Exit (side, coord) of a second-class particle from boundary slot ``idx``.

    mode 0: discrepancy of a basic coupling; 1: direct growth on eta;
    2: anti-particle walk on xi_plus.
    """
    out = np.empty((nrep, 2), np.int64)
    verts = np.zeros((X + Y + 3, 2), np.int64)
    wp_plus = west_p.copy()
    sp_plus = south_p.copy()
    wp_minus = west_p.copy()
    sp_minus = south_p.copy()
    if slot_west:
        wp_plus[idx - 1] = 1.0
        wp_minus[idx - 1] = 0.0
        i0, j0, left = 1, idx, True
    else:
        sp_plus[idx - 1] = 1.0
        sp_minus[idx - 1] = 0.0
        i0, j0, left = idx, 1, False
    for r in range(nrep):
        key = replicate_key(seed, rep0 + r)
        if mode == 0:
            xh, xv = K.sample_planes(key, d1, d2, wp_plus, sp_plus, X, Y)
            eh, ev = K.sample_planes(key, d1, d2, wp_minus, sp_minus, X, Y)
            m, s, c = _follow_grey(xh - eh, xv - ev, X, Y, i0, j0, left, verts)
        elif mode == 1:
            eh, ev = K.sample_planes(key, d1, d2, wp_minus, sp_minus, X, Y)
            m, s, c = _direct(eh, ev, X, Y, key, d1, d2, i0, j0, left, verts)
        else:
            xh, xv = K.sample_planes(key, d1, d2, wp_plus, sp_plus, X, Y)
            m, s, c = _antiparticle(xh, xv, X, Y, key, d1, d2, i0, j0, left, verts)
        if m < 0:
            out[r, 0] = -1
            out[r, 1] = m
        else:
            out[r, 0] = s
            out[r, 1] = c
    return out


MODES = {"discrepancy": 0, "direct": 1, "antiparticle": 2}


def exit_batch(mode: str, params: ModelParams, boundary: BoundarySpec, v0, dims, seed: int,
               rep0: int, nrep: int) -> np.ndarray:
    """(side, coord) rows for ``nrep`` replicates of one construction."""
    X, Y = dims
    west, south = boundary.probabilities(X, Y)
    side, idx = boundary_slot(v0)
    out = _exit_batch(MODES[mode], np.uint64(seed & ((1 << 64) - 1)), rep0, nrep, params.delta1,
                      params.delta2, west, south, X, Y, side == "west", idx)
    if np.any(out[:, 0] < 0):
        raise CouplingError(f"{mode} construction failed in some replicate")
    return out


@njit(cache=True)
def _concavity_batch(seed, rep0, nrep, d1, d2, wd, sd, ws, ss, X, Y, slot_west, idx):
    """Per replicate: (violations, side_a, coord_a, side_b, coord_b, status)."""
    out = np.zeros((nrep, 6), np.int64)
    va = np.zeros((X + Y + 3, 2), np.int64)
    vb = np.zeros((X + Y + 3, 2), np.int64)
    if slot_west:
        i0, j0, left = 1, idx, True
    else:
        i0, j0, left = idx, 1, False
    for r in range(nrep):
        key = replicate_key(seed, rep0 + r)
        xh, xv = K.sample_planes(key, d1, d2, wd, sd, X, Y)
        eh, ev = K.sample_planes(key, d1, d2, ws, ss, X, Y)
        bad = 0
        for a in range(X + 1):
            for b in range(Y):
                if eh[a, b] > xh[a, b]:
                    bad += 1
        for a in range(X):
            for b in range(Y + 1):
                if ev[a, b] > xv[a, b]:
                    bad += 1
        if bad:
            out[r, 0] = bad
            out[r, 5] = -3
            continue
        gh = xh - eh
        gv = xv - ev
        _, _, lab_h, lab_v, count = _grey_paths(gh, gv, X, Y)
        if count < 0:
            out[r, 5] = count
            continue
        offset = lab_h[0, idx - 1] if slot_west else lab_v[idx - 1, 0]
        ma, sa, ca, mb, sb, cb = _concavity(gh, gv, X, Y, key, d1, d2, i0, j0, left, va, vb)
        if ma < 0:
            out[r, 5] = ma
            continue
        bad = _ordering_violations(va, ma, vb, mb, lab_h, lab_v, offset)
        ra = ca if sa == 0 else 1e9 - ca
        rb = cb if sb == 0 else 1e9 - cb
        if ra < rb:
            bad += 1
        out[r, 0] = bad
        out[r, 1] = sa
        out[r, 2] = ca
        out[r, 3] = sb
        out[r, 4] = cb
    return out


def concavity_batch(params: ModelParams, xi0_minus: BoundarySpec, eta0: BoundarySpec, v0, dims,
                    seed: int, rep0: int, nrep: int) -> np.ndarray:
    _check_concavity_params(params)
    X, Y = dims
    if not xi0_minus.dominates(eta0, X, Y):
        raise ValueError("xi0_minus must dominate eta0")
    wd, sd = xi0_minus.with_vertex(v0, True).probabilities(X, Y)
    ws, ss = eta0.with_vertex(v0, False).probabilities(X, Y)
    side, idx = boundary_slot(v0)
    return _concavity_batch(np.uint64(seed & ((1 << 64) - 1)), rep0, nrep, params.delta1, params.delta2,
                            wd, sd, ws, ss, X, Y, side == "west", idx)


@njit(cache=True)
def _domination_batch(seed, rep0, nrep, d1, d2, wd, sd, ws, ss, X, Y):
    out = np.zeros(nrep, np.int64)
    for r in range(nrep):
        key = replicate_key(seed, rep0 + r)
        xh, xv = K.sample_planes(key, d1, d2, wd, sd, X, Y)
        eh, ev = K.sample_planes(key, d1, d2, ws, ss, X, Y)
        bad = 0
        for a in range(X + 1):
            for b in range(Y):
                if eh[a, b] > xh[a, b]:
                    bad += 1
        for a in range(X):
            for b in range(Y + 1):
                if ev[a, b] > xv[a, b]:
                    bad += 1
        out[r] = bad
    return out


def domination_batch(params: ModelParams, dense: BoundarySpec, sparse: BoundarySpec, dims, seed: int,
                     rep0: int, nrep: int) -> np.ndarray:
    X, Y = dims
    wd, sd = dense.probabilities(X, Y)
    ws, ss = sparse.probabilities(X, Y)
    return _domination_batch(np.uint64(seed & ((1 << 64) - 1)), rep0, nrep, params.delta1, params.delta2,
                             wd, sd, ws, ss, X, Y)


# ---- biased label walk -------------------------------------------------------

@dataclass(frozen=True)
class PeriodicEnvironment:
    """c(x, n) = 1 iff (x - shift * n) mod period == phase; period 0 means all zero.

    With ``wall`` set, every edge at x >= wall is closed, which reflects the
    walk back from the right.
    """
    period: int
    shift: int = 1
    phase: int = 0
    wall: Optional[int] = None

    def table(self, steps: int) -> tuple[np.ndarray, int]:
        width = 2 * steps + 5
        lo = -steps - 2
        xs = np.arange(lo, lo + width)
        ns = np.arange(steps)[:, None]
        if self.period == 0:
            return np.zeros((steps, width), np.uint8), lo
        c = ((xs[None, :] - self.shift * ns) % self.period == self.phase).astype(np.uint8)
        if self.wall is not None:
            c[:, xs >= self.wall] = 0
        return c, lo


def validate_environment(c: np.ndarray) -> None:
    if np.any((c[:, :-1] == 1) & (c[:, 1:] == 1)):
        raise ValueError("environment has adjacent open edges c(x,n) = c(x+1,n) = 1")


@njit(cache=True)
def _biased_walk(key, c, lo, d1, d2, steps, path):
    z = 0
    path[0] = 0
    for n in range(steps):
        col = z - lo
        if c[n, col] == 1:
            if _walk_u(key, 0, n) < d1:
                z += 1
        elif c[n, col - 1] == 1:
            if _walk_u(key, 0, n) < d2:
                z -= 1
        path[n + 1] = z
    return z


@njit(cache=True)
def _biased_walk_batch(seed, rep0, nrep, c, lo, d1, d2, steps):
    out = np.empty(nrep, np.int64)
    path = np.empty(steps + 1, np.int64)
    for r in range(nrep):
        out[r] = _biased_walk(replicate_key(seed, rep0 + r), c, lo, d1, d2, steps, path)
    return out


def _env_table(environment, steps):
    if isinstance(environment, PeriodicEnvironment):
        c, lo = environment.table(steps)
    else:
        c, lo = environment
        c = np.ascontiguousarray(c, dtype=np.uint8)
        if c.shape[0] < steps or lo > -steps - 1 or lo + c.shape[1] < steps + 2:
            raise ValueError("environment table does not cover the reachable window")
    validate_environment(c)
    return c, lo


def biased_walk(environment, delta1: float, delta2: float, steps: int, noise: NoiseField) -> np.ndarray:
    """Trajectory Z(0..steps) of the label walk in a fixed environment."""
    c, lo = _env_table(environment, steps)
    path = np.empty(steps + 1, np.int64)
    _biased_walk(noise.key, c, lo, delta1, delta2, steps, path)
    return path


def biased_walk_batch(environment, delta1: float, delta2: float, steps: int, seed: int,
                      rep0: int, nrep: int) -> np.ndarray:
    c, lo = _env_table(environment, steps)
    return _biased_walk_batch(np.uint64(seed & ((1 << 64) - 1)), rep0, nrep, c, lo, delta1, delta2, steps)
