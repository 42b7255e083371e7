"""Jitted inner loops shared by the sampler, couplings and estimators.

Array layout (0-based storage of 1-based lattice coordinates):
  h[i-1, j-1]  arrow entering vertex (i, j) from the left,  i = 1..x_max+1
  v[i-1, j-1]  arrow entering vertex (i, j) from below,     j = 1..y_max+1
"""
from __future__ import annotations

import numpy as np
from numba import njit

from .noise import Channel, channel_key, fold, replicate_key, to_unit

CH_H = int(Channel.VERTEX_H)
CH_V = int(Channel.VERTEX_V)
CH_W = int(Channel.BOUNDARY_WEST)
CH_S = int(Channel.BOUNDARY_SOUTH)
CH_WALK = int(Channel.WALK)
CH_EDGE = int(Channel.ASEP_EDGE)
CH_TIME = int(Channel.ASEP_TIME)


@njit(cache=True)
def draw_boundary(key, channel, probs):
    n = probs.shape[0]
    out = np.zeros(n, np.uint8)
    base = channel_key(key, channel, 0)
    for t in range(n):
        # strict comparison: p = 0 never fires, p = 1 always does
        if to_unit(fold(base, t + 1)) < probs[t]:
            out[t] = 1
    return out


@njit(cache=True)
def sample_planes(key, d1, d2, west_p, south_p, X, Y):
    h = np.zeros((X + 1, Y), np.uint8)
    v = np.zeros((X, Y + 1), np.uint8)
    v[:, 0] = draw_boundary(key, CH_S, south_p)
    h[0, :] = draw_boundary(key, CH_W, west_p)
    kh = channel_key(key, CH_H, 0)
    kv = channel_key(key, CH_V, 0)
    for j in range(1, Y + 1):
        rh = fold(kh, j)
        rv = fold(kv, j)
        hin = h[0, j - 1]
        for i in range(1, X + 1):
            vin = v[i - 1, j - 1]
            if vin == 1 and hin == 1:
                vout = 1
                hout = 1
            elif vin == 1:
                if to_unit(fold(rv, i)) < d1:
                    vout = 1
                    hout = 0
                else:
                    vout = 0
                    hout = 1
            elif hin == 1:
                if to_unit(fold(rh, i)) < d2:
                    vout = 0
                    hout = 1
                else:
                    vout = 1
                    hout = 0
            else:
                vout = 0
                hout = 0
            v[i - 1, j] = vout
            h[i, j - 1] = hout
            hin = hout
    return h, v


@njit(cache=True)
def heights_one(key, d1, d2, west_p, south_p, X, Y, qx, qy, out):
    """Heights W - N at query points (qx[k], qy[k]); qy sorted ascending."""
    v = draw_boundary(key, CH_S, south_p)
    west = draw_boundary(key, CH_W, west_p)
    kh = channel_key(key, CH_H, 0)
    kv = channel_key(key, CH_V, 0)
    nq = qx.shape[0]
    q = 0
    W = 0
    while q < nq and qy[q] == 0:
        s = 0
        for i in range(qx[q]):
            s += v[i]
        out[q] = -s
        q += 1
    for j in range(1, Y + 1):
        if q >= nq:
            break
        rh = fold(kh, j)
        rv = fold(kv, j)
        hin = west[j - 1]
        W += hin
        for i in range(1, X + 1):
            vin = v[i - 1]
            if vin == 1:
                if hin == 0 and to_unit(fold(rv, i)) >= d1:
                    v[i - 1] = 0
                    hin = 1
            elif hin == 1:
                if to_unit(fold(rh, i)) >= d2:
                    v[i - 1] = 1
                    hin = 0
        while q < nq and qy[q] == j:
            s = 0
            for i in range(qx[q]):
                s += v[i]
            out[q] = W - s
            q += 1


@njit(cache=True)
def heights_batch(seed, rep0, nrep, d1, d2, west_p, south_p, X, Y, qx, qy):
    out = np.empty((nrep, qx.shape[0]), np.int64)
    for r in range(nrep):
        key = replicate_key(seed, rep0 + r)
        heights_one(key, d1, d2, west_p, south_p, X, Y, qx, qy, out[r])
    return out


@njit(cache=True)
def exit_bits_batch(seed, rep0, nrep, d1, d2, west_p, south_p, X, Y):
    """Outgoing edges of the X by Y box per replicate.

    Columns 0..Y-1 are the right exits at rows 1..Y, columns Y..Y+X-1 the top
    exits at columns 1..X.
    """
    out = np.empty((nrep, X + Y), np.uint8)
    for r in range(nrep):
        key = replicate_key(seed, rep0 + r)
        h, v = sample_planes(key, d1, d2, west_p, south_p, X, Y)
        for j in range(Y):
            out[r, j] = h[X, j]
        for i in range(X):
            out[r, Y + i] = v[i, Y]
    return out
