"""Continuous-time exclusion process on a finite window, driven by a
graphical construction, plus the vertex-model-to-exclusion comparison.

Every directed edge (s, s+1) carries two Poisson streams: rate L moves a
particle from s+1 to s (leftward), rate R moves one from s to s+1.  All
streams are superposed into one stream of total rate (M+N)(L+R); the number
of rings up to T comes from the ``ASEP_TIME`` channel and ring k picks its
edge and direction from the ``ASEP_EDGE`` channel at coordinate k.  Coupled
systems read the same rings.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from numba import njit
from scipy import stats

from . import _kernels as K
from .analytics import stationary_pair
from .model import BoundarySpec, derive_params, sample_ensemble
from .noise import NoiseField, channel_key, fold, replicate_key, to_unit

DEFAULT_MARGIN = 64
LEFT_IS_L = "L is the leftward rate"


@dataclass(frozen=True)
class ASEPConfig:
    L: float
    R: float
    b: float
    T: float
    M: int
    N: int
    sites: tuple[int, ...] = (0,)

    @classmethod
    def padded(cls, L: float, R: float, b: float, T: float, sites: Sequence[int] = (0,),
               margin: int = DEFAULT_MARGIN) -> "ASEPConfig":
        reach = max(abs(int(x)) for x in sites) if sites else 0
        pad = reach + math.ceil(4 * (L + R) * T) + margin
        return cls(L, R, b, T, pad, pad, tuple(int(x) for x in sites))

    def validate(self, margin: int = DEFAULT_MARGIN) -> None:
        if self.L < 0 or self.R < 0 or self.T < 0 or not 0.0 <= self.b <= 1.0:
            raise ValueError("rates and horizon must be nonnegative and b in [0,1]")
        reach = max((abs(x) for x in self.sites), default=0)
        need = reach + math.ceil(4 * (self.L + self.R) * self.T) + margin
        if self.M < need or self.N < need:
            raise ValueError(f"window [-{self.M}, {self.N}] too small: need M, N >= {need}")

    @property
    def n_edges(self) -> int:
        return self.M + self.N

    @property
    def mean_events(self) -> float:
        return self.n_edges * (self.L + self.R) * self.T


@dataclass(frozen=True)
class ASEPState:
    config: ASEPConfig
    occupation: np.ndarray = field(repr=False)  # sites -M..N
    time: float
    J0: int
    events: int

    def occ(self, site: int) -> int:
        return int(self.occupation[site + self.config.M])

    def current(self, x: int) -> int:
        """J_t(x): J_t(0) minus particles in 1..x (x >= 0), plus those in x+1..0 (x < 0)."""
        M = self.config.M
        if x >= 0:
            return self.J0 - int(self.occupation[M + 1:M + x + 1].sum())
        return self.J0 + int(self.occupation[M + x + 1:M + 1].sum())


# ---- jitted kernels -------------------------------------------------------

@njit(cache=True)
def _initial(key, M, N, b, b_site0):
    """Bernoulli(b) sites; site s >= 1 keyed like south entry s, s <= 0 like west entry 1-s."""
    occ = np.zeros(M + N + 1, np.int8)
    ks = channel_key(key, K.CH_S, 0)
    kw = channel_key(key, K.CH_W, 0)
    for idx in range(M + N + 1):
        s = idx - M
        u = to_unit(fold(ks, s)) if s >= 1 else to_unit(fold(kw, 1 - s))
        p = b_site0 if s == 0 else b
        if u < p:
            occ[idx] = 1
    return occ


@njit(cache=True)
def _time_uniform(key):
    return to_unit(fold(channel_key(key, K.CH_TIME, 0), 0))


@njit(cache=True, inline="always")
def _ring(kedge, k, n_edges, L, R):
    w = to_unit(fold(kedge, k)) * n_edges * (L + R)
    e = int(w / (L + R))
    if e >= n_edges:
        e = n_edges - 1
    rem = w - e * (L + R)
    return e, rem < L


@njit(cache=True)
def _run(key, occ, n_events, L, R, M):
    """Apply rings in place; returns net left-to-right crossings of edge (0, 1)."""
    n_edges = occ.shape[0] - 1
    kedge = channel_key(key, K.CH_EDGE, 0)
    j0 = 0
    for k in range(n_events):
        e, left = _ring(kedge, k, n_edges, L, R)
        if left:
            if occ[e + 1] == 1 and occ[e] == 0:
                occ[e + 1] = 0
                occ[e] = 1
                if e == M:
                    j0 -= 1
        else:
            if occ[e] == 1 and occ[e + 1] == 0:
                occ[e] = 0
                occ[e + 1] = 1
                if e == M:
                    j0 += 1
    return j0


@njit(cache=True)
def _run_second(key, occ, n_events, L, R):
    """First class = 1, second class = 2; returns final index of the 2."""
    n_edges = occ.shape[0] - 1
    kedge = channel_key(key, K.CH_EDGE, 0)
    for k in range(n_events):
        e, left = _ring(kedge, k, n_edges, L, R)
        if left:
            src, dst = e + 1, e
        else:
            src, dst = e, e + 1
        a = occ[src]
        if a == 0:
            continue
        c = occ[dst]
        if c == 0:
            occ[dst] = a
            occ[src] = 0
        elif a == 1 and c == 2:
            occ[dst] = 1
            occ[src] = 2
    for idx in range(occ.shape[0]):
        if occ[idx] == 2:
            return idx
    return -1


@njit(cache=True)
def _run_pair(key, lo, hi, n_events, L, R):
    """Two systems under shared rings; counts ring-level order violations."""
    n_edges = lo.shape[0] - 1
    kedge = channel_key(key, K.CH_EDGE, 0)
    bad = 0
    for k in range(n_events):
        e, left = _ring(kedge, k, n_edges, L, R)
        if left:
            src, dst = e + 1, e
        else:
            src, dst = e, e + 1
        if lo[src] == 1 and lo[dst] == 0:
            lo[src] = 0
            lo[dst] = 1
        if hi[src] == 1 and hi[dst] == 0:
            hi[src] = 0
            hi[dst] = 1
        if lo[src] > hi[src] or lo[dst] > hi[dst]:
            bad += 1
    return bad


@njit(cache=True)
def _time_uniforms(seed, rep0, nrep):
    out = np.empty(nrep, np.float64)
    for r in range(nrep):
        out[r] = _time_uniform(replicate_key(seed, rep0 + r))
    return out


def _event_count(u, mean: float) -> np.ndarray:
    k = stats.poisson.ppf(u, mean)
    return np.maximum(k, 0).astype(np.int64)


@njit(cache=True)
def _current_batch(seed, rep0, counts, M, N, b, L, R, xs):
    nrep = counts.shape[0]
    out = np.empty((nrep, xs.shape[0]), np.int64)
    for r in range(nrep):
        key = replicate_key(seed, rep0 + r)
        occ = _initial(key, M, N, b, b)
        j0 = _run(key, occ, counts[r], L, R, M)
        for q in range(xs.shape[0]):
            x = xs[q]
            J = j0
            if x >= 0:
                for s in range(1, x + 1):
                    J -= occ[M + s]
            else:
                for s in range(x + 1, 1):
                    J += occ[M + s]
            out[r, q] = J
    return out


@njit(cache=True)
def _second_batch(seed, rep0, counts, M, N, b, L, R):
    nrep = counts.shape[0]
    out = np.empty(nrep, np.int64)
    for r in range(nrep):
        key = replicate_key(seed, rep0 + r)
        occ = _initial(key, M, N, b, 0.0)
        occ[M] = 2
        out[r] = _run_second(key, occ, counts[r], L, R) - M
    return out


@njit(cache=True)
def _attractive_batch(seed, rep0, counts, M, N, b_lo, b_hi, L, R):
    nrep = counts.shape[0]
    out = np.empty(nrep, np.int64)
    for r in range(nrep):
        key = replicate_key(seed, rep0 + r)
        lo = _initial(key, M, N, b_lo, b_lo)
        hi = _initial(key, M, N, b_hi, b_hi)
        out[r] = _run_pair(key, lo, hi, counts[r], L, R)
    return out


# ---- public API -----------------------------------------------------------

def _seed64(seed: int) -> np.uint64:
    return np.uint64(int(seed) & ((1 << 64) - 1))


def event_counts(config: ASEPConfig, seed: int, rep0: int, nrep: int) -> np.ndarray:
    u = _time_uniforms(_seed64(seed), rep0, nrep)
    return _event_count(u, config.mean_events)


def asep_simulate(config: ASEPConfig, noise: NoiseField) -> ASEPState:
    config.validate()
    key = noise.key
    occ = _initial(key, config.M, config.N, config.b, config.b)
    n = int(_event_count(np.array([_time_uniform(key)]), config.mean_events)[0])
    j0 = _run(key, occ, n, config.L, config.R, config.M)
    return ASEPState(config, occ, config.T, int(j0), n)


def asep_second_class(config: ASEPConfig, noise: NoiseField) -> int:
    """Position Q(T) of a second-class particle started at the vacated origin."""
    config.validate()
    key = noise.key
    occ = _initial(key, config.M, config.N, config.b, 0.0)
    occ[config.M] = 2
    n = int(_event_count(np.array([_time_uniform(key)]), config.mean_events)[0])
    idx = _run_second(key, occ, n, config.L, config.R)
    return int(idx - config.M)


def current_batch(config: ASEPConfig, seed: int, rep0: int, nrep: int) -> np.ndarray:
    """J_T(x) for every observation site, one row per replicate."""
    config.validate()
    counts = event_counts(config, seed, rep0, nrep)
    xs = np.asarray(config.sites, np.int64)
    return _current_batch(_seed64(seed), rep0, counts, config.M, config.N, config.b, config.L, config.R, xs)


def second_class_batch(config: ASEPConfig, seed: int, rep0: int, nrep: int) -> np.ndarray:
    config.validate()
    counts = event_counts(config, seed, rep0, nrep)
    return _second_batch(_seed64(seed), rep0, counts, config.M, config.N, config.b, config.L, config.R)


def attractivity_batch(config: ASEPConfig, b_lo: float, b_hi: float, seed: int, rep0: int,
                       nrep: int) -> np.ndarray:
    """Ring-level violations of lo <= hi for coupled systems with densities b_lo <= b_hi."""
    if b_lo > b_hi:
        raise ValueError("need b_lo <= b_hi")
    config.validate()
    counts = event_counts(config, seed, rep0, nrep)
    return _attractive_batch(_seed64(seed), rep0, counts, config.M, config.N, b_lo, b_hi, config.L, config.R)


def characteristic_velocity(L: float, R: float, b: float) -> float:
    return (L - R) * (2 * b - 1)


def stationary_current_mean(L: float, R: float, b: float, T: float, x: int = 0) -> float:
    return b * (1 - b) * T * (R - L) - b * x


# ---- degeneration ---------------------------------------------------------

@dataclass(frozen=True)
class DegenerationRun:
    epsilon: float
    height: int
    x: int
    y: int
    offsets: np.ndarray  # q = i - y for vertical arrows leaving row y


def degeneration_geometry(epsilon: float, t: float, X: int) -> tuple[int, int]:
    y = int(math.floor(t / epsilon + 1e-9))
    return X + y, y


def _degeneration_params(epsilon: float, L: float, R: float, b: float):
    d1, d2 = epsilon * L, epsilon * R
    if not (0.0 < d1 < 1.0 and 0.0 < d2 < 1.0):
        raise ValueError(f"epsilon={epsilon} gives vertex probabilities outside (0,1)")
    params = derive_params(d1, d2)
    return params, stationary_pair(b, params)


def degeneration_run(epsilon: float, L: float, R: float, b: float, t: float, X: int,
                     noise: NoiseField) -> DegenerationRun:
    params, b1 = _degeneration_params(epsilon, L, R, b)
    x, y = degeneration_geometry(epsilon, t, X)
    if x < 1:
        raise ValueError("box width x = X + y must be positive")
    ens = sample_ensemble(params, BoundarySpec.bernoulli(b1, b), (x, y), noise)
    H = int(ens.h[0, :y].sum()) - int(ens.v[:, y].sum())
    cols = np.nonzero(ens.v[:, y])[0] + 1
    return DegenerationRun(epsilon, H, x, y, cols - y)


def degeneration_heights(epsilon: float, L: float, R: float, b: float, t: float, X: int,
                         seed: int, rep0: int, nrep: int) -> np.ndarray:
    params, b1 = _degeneration_params(epsilon, L, R, b)
    x, y = degeneration_geometry(epsilon, t, X)
    west = np.full(y, b1)
    south = np.full(x, b)
    out = K.heights_batch(_seed64(seed), rep0, nrep, params.delta1, params.delta2, west, south, x, y,
                          np.array([x], np.int64), np.array([y], np.int64))
    return out[:, 0]


def degeneration_mean(epsilon: float, L: float, R: float, b: float, t: float, X: int) -> float:
    """Exact stationary mean of the vertex-model height used in the comparison."""
    params, b1 = _degeneration_params(epsilon, L, R, b)
    x, y = degeneration_geometry(epsilon, t, X)
    return y * b1 - x * b
