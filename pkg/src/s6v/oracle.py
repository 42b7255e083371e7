"""Exact laws on tiny boxes by summing over all boundary and vertex branches.

The enumeration follows the sampler's row-major schedule. Probabilities
stay in whatever number type the caller passes, so ``Fraction`` inputs give
exact rational answers.
"""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import mpmath

from .model import BoundarySpec

ENUM_CAP = 16


@dataclass(frozen=True)
class ExactDistribution:
    support: tuple[int, ...]
    probabilities: tuple

    def as_dict(self) -> dict:
        return dict(zip(self.support, self.probabilities))

    def total(self):
        return sum(self.probabilities)

    def mean(self):
        return sum(h * p for h, p in zip(self.support, self.probabilities))

    def variance(self):
        m = self.mean()
        return sum((h - m) ** 2 * p for h, p in zip(self.support, self.probabilities))


def exact(p) -> Fraction:
    """Decimal-exact rational for a float given in short decimal form."""
    if isinstance(p, Fraction):
        return p
    if isinstance(p, int):
        return Fraction(p)
    return Fraction(repr(float(p)))


def exact_stationary_b1(b2, d1, d2) -> Fraction:
    b2, d1, d2 = exact(b2), exact(d1), exact(d2)
    beta1 = (1 - d1) / (1 - d2) * b2 / (1 - b2)
    return beta1 / (1 + beta1)


def _check_cap(x: int, y: int) -> None:
    if x < 1 or y < 1:
        raise ValueError("box dims must be positive")
    if x * y > ENUM_CAP:
        raise ValueError(f"box {x}x{y} exceeds enumeration cap x*y <= {ENUM_CAP}")


def enumerate_box(d1, d2, west_p: Sequence, south_p: Sequence, x: int, y: int,
                  record: Iterable[tuple[str, int, int]] = ()) -> dict:
    """Joint law of (W, N, E, S, *recorded edges) on the box x by y.

    ``record`` lists edges as ("h", i, j) for the arrow entering (i, j) from
    the left and ("v", i, j) for the arrow entering from below.
    """
    _check_cap(x, y)
    rec_index = {tuple(e): k for k, e in enumerate(record)}
    nrec = len(rec_index)
    one = d1 - d1 + 1

    def put(rec, edge, bit):
        k = rec_index.get(edge)
        if k is None:
            return rec
        r = list(rec)
        r[k] = bit
        return tuple(r)

    # state: (frontier bits, W, E, S, recorded) -> probability
    states: dict = defaultdict(lambda: 0)
    start = {((), 0, (None,) * nrec): one}
    for i in range(1, x + 1):
        p = south_p[i - 1]
        nxt = defaultdict(lambda: 0)
        for (bits, s, rec), w in start.items():
            for bit, q in ((1, p), (0, one - p)):
                if q == 0:
                    continue
                nxt[(bits + (bit,), s + bit, put(rec, ("v", i, 1), bit))] += w * q
        start = nxt
    for (bits, s, rec), w in start.items():
        states[(bits, 0, 0, s, rec)] += w

    for j in range(1, y + 1):
        p = west_p[j - 1]
        # a row is processed as a chain of (state, hin) branches
        row = defaultdict(lambda: 0)
        for (bits, W, E, S, rec), w in states.items():
            for bit, q in ((1, p), (0, one - p)):
                if q == 0:
                    continue
                row[(bits, bit, W + bit, E, S, put(rec, ("h", 1, j), bit))] += w * q
        for i in range(1, x + 1):
            nrow = defaultdict(lambda: 0)
            for (bits, hin, W, E, S, rec), w in row.items():
                vin = bits[i - 1]
                if vin and hin:
                    outs = ((1, 1, one),)
                elif vin:
                    outs = ((1, 0, d1), (0, 1, one - d1))
                elif hin:
                    outs = ((0, 1, d2), (1, 0, one - d2))
                else:
                    outs = ((0, 0, one),)
                for vout, hout, q in outs:
                    if q == 0:
                        continue
                    nb = bits[:i - 1] + (vout,) + bits[i:]
                    r = put(put(rec, ("v", i, j + 1), vout), ("h", i + 1, j), hout)
                    nrow[(nb, hout, W, E, S, r)] += w * q
            row = nrow
        states = defaultdict(lambda: 0)
        for (bits, hin, W, E, S, rec), w in row.items():
            states[(bits, W, E + hin, S, rec)] += w

    out = defaultdict(lambda: 0)
    for (bits, W, E, S, rec), w in states.items():
        N = sum(bits)
        if W - N != E - S:
            raise AssertionError("flux identity violated in enumeration")
        out[(W, N, E, S) + rec] += w
    return dict(out)


def _law_arrays(boundary: BoundarySpec, x: int, y: int):
    west, south = boundary.probabilities(x, y)
    return [exact(p) for p in west], [exact(p) for p in south]


def height_from_joint(joint: dict) -> ExactDistribution:
    pmf = defaultdict(lambda: 0)
    for key, w in joint.items():
        W, N = key[0], key[1]
        pmf[W - N] += w
    support = tuple(sorted(pmf))
    return ExactDistribution(support, tuple(pmf[h] for h in support))


def exact_height_dist(delta1, delta2, boundary: BoundarySpec, x: int, y: int,
                      joint: bool = False):
    """Exact pmf of H(x, y); with ``joint`` also the law of (W, N, E, S)."""
    west, south = _law_arrays(boundary, x, y)
    law = enumerate_box(exact(delta1), exact(delta2), west, south, x, y)
    dist = height_from_joint(law)
    if joint:
        return dist, law
    return dist


def exact_mgf(dist: ExactDistribution, epsilon, dps: int = 40):
    with mpmath.workdps(dps):
        eps = mpmath.mpf(epsilon)
        total = mpmath.mpf(0)
        for h, p in zip(dist.support, dist.probabilities):
            pm = mpmath.mpf(p.numerator) / p.denominator if isinstance(p, Fraction) else mpmath.mpf(p)
            total += pm * mpmath.exp(eps * h)
        return total


def exact_two_point(delta1, delta2, b1, b2, x: int, y: int):
    """Return (S, laplacian) for the stationary box.

    S = Cov(v(x, y+1), v(1, 1)) and laplacian is the second difference of
    Var H(., y) centred at x-1, i.e. Var H(x) + Var H(x-2) - 2 Var H(x-1).
    The two agree as laplacian == 2 S.
    """
    if x < 2:
        raise ValueError("two-point identity needs x >= 2")
    d1, d2, b1, b2 = exact(delta1), exact(delta2), exact(b1), exact(b2)
    _check_cap(x, y)
    record = [("v", i, y + 1) for i in range(1, x + 1)] + [("v", 1, 1)]
    law = enumerate_box(d1, d2, [b1] * y, [b2] * x, x, y, record)
    moments = {k: [0, 0] for k in (x - 2, x - 1, x)}
    e_top = e_corner = e_prod = 0
    for key, w in law.items():
        W = key[0]
        tops = key[4:4 + x]
        corner = key[4 + x]
        for k in moments:
            Hk = W - sum(tops[:k])
            moments[k][0] += w * Hk
            moments[k][1] += w * Hk * Hk
        e_top += w * tops[x - 1]
        e_corner += w * corner
        e_prod += w * tops[x - 1] * corner
    var = {k: m2 - m1 * m1 for k, (m1, m2) in moments.items()}
    S = e_prod - e_top * e_corner
    lap = var[x] + var[x - 2] - 2 * var[x - 1]
    return S, lap


def exact_edge_law(delta1, delta2, west_p, south_p, x: int, y: int):
    """Joint law of every edge in the box, keyed by the tuple in ``edges``."""
    edges = [("h", i, j) for i in range(1, x + 2) for j in range(1, y + 1)]
    edges += [("v", i, j) for i in range(1, x + 1) for j in range(1, y + 2)]
    law = enumerate_box(exact(delta1), exact(delta2), [exact(p) for p in west_p],
                        [exact(p) for p in south_p], x, y, edges)
    return edges, {k[4:]: w for k, w in _merge(law).items()}


def _merge(law: dict) -> dict:
    out = defaultdict(lambda: 0)
    for k, w in law.items():
        out[k] += w
    return out


def stationarity_family(x: int, y: int, X: int, Y: int) -> list[tuple[str, int, int]]:
    """Edges entering the staircase above/right of (x, y) inside an X by Y box."""
    fam = [("h", x, j) for j in range(y, Y + 1)]
    fam += [("v", i, y) for i in range(x, X + 1)]
    return fam


def exact_stationarity(delta1, delta2, b1, b2, X: int, Y: int) -> dict:
    """Max deviations from product Bernoulli over all staircase families.

    Returns the largest |marginal - b|, the largest |P(A,B) - P(A)P(B)| over
    pairs, and the largest deviation of the full family joint law from the
    product law. All are exact rationals.
    """
    b1, b2 = exact(b1), exact(b2)
    edges, law = exact_edge_law(delta1, delta2, [b1] * Y, [b2] * X, X, Y)
    pos = {e: k for k, e in enumerate(edges)}
    worst_marg = worst_pair = worst_joint = Fraction(0)
    marg = {}
    for e, k in pos.items():
        marg[e] = sum(w for cfg, w in law.items() if cfg[k] == 1)
    for x in range(1, X + 1):
        for y in range(1, Y + 1):
            fam = stationarity_family(x, y, X, Y)
            probs = {e: (b1 if e[0] == "h" else b2) for e in fam}
            for e in fam:
                worst_marg = max(worst_marg, abs(marg[e] - probs[e]))
            for a in range(len(fam)):
                for b in range(a + 1, len(fam)):
                    ka, kb = pos[fam[a]], pos[fam[b]]
                    pab = sum(w for cfg, w in law.items() if cfg[ka] == 1 and cfg[kb] == 1)
                    worst_pair = max(worst_pair, abs(pab - marg[fam[a]] * marg[fam[b]]))
            idx = [pos[e] for e in fam]
            joint = defaultdict(lambda: Fraction(0))
            for cfg, w in law.items():
                joint[tuple(cfg[k] for k in idx)] += w
            for bits in _all_bits(len(fam)):
                prod = Fraction(1)
                for e, bit in zip(fam, bits):
                    prod *= probs[e] if bit else 1 - probs[e]
                worst_joint = max(worst_joint, abs(joint.get(bits, Fraction(0)) - prod))
    return {"marginal": worst_marg, "pairwise": worst_pair, "joint": worst_joint}


def _all_bits(n: int):
    for m in range(1 << n):
        yield tuple((m >> k) & 1 for k in range(n))


def vertex_law(delta1, delta2, boundary: BoundarySpec, x: int, y: int, i: int, j: int) -> dict:
    """Exact law of the configuration code at vertex (i, j) of an x by y box."""
    from .model import EMPTY, V_STRAIGHT, V_TURN, H_STRAIGHT, H_TURN, FULL
    west, south = _law_arrays(boundary, x, y)
    rec = [("v", i, j), ("h", i, j), ("v", i, j + 1), ("h", i + 1, j)]
    law = enumerate_box(exact(delta1), exact(delta2), west, south, x, y, rec)
    table = {(0, 0, 0, 0): EMPTY, (1, 0, 1, 0): V_STRAIGHT, (1, 0, 0, 1): V_TURN,
             (0, 1, 0, 1): H_STRAIGHT, (0, 1, 1, 0): H_TURN, (1, 1, 1, 1): FULL}
    out = defaultdict(lambda: Fraction(0))
    for key, w in law.items():
        out[table[key[4:8]]] += w
    return dict(out)
