import math

import numpy as np
import pytest

from s6v.model import (MAGIC, BoundarySpec, Segment, assumption_flags, boundary_counts, boundary_slot,
                       derive_params, dump_ensemble, height_flux, height_grid, load_ensemble,
                       sample_ensemble, text_grid)
from s6v.noise import NoiseField


def test_symmetric_params():
    p = derive_params(0.3, 0.3)
    assert p.kappa == 1.0
    assert p.theta == 0.0


def test_kappa_theta_values():
    p = derive_params(0.6, 0.2)
    assert p.kappa == (1 - 0.6) / (1 - 0.2)
    assert p.kappa == pytest.approx(0.5, abs=1e-15)
    assert p.theta == pytest.approx(3 / 7, abs=1e-15)


@pytest.mark.parametrize("d1,d2", [(0.6, 0.2), (0.4, 0.5), (0.7, 0.5), (0.2, 0.2), (0.9, 0.45)])
def test_theta_sign(d1, d2):
    assert (derive_params(d1, d2).theta > 0) == (d2 < min(d1, 0.5))


def test_assumption_flags_third_item():
    d1, d2, a = 0.05, 0.04, 0.05
    flags = assumption_flags(d1, d2, a)
    kappa = (1 - d1) / (1 - d2)
    assert flags[2] == (a * d1 <= 1 - kappa <= d1 / a)
    assert flags == assumption_flags(d1, d2, a)
    assert derive_params(d1, d2, a).assumption == flags


def test_invalid_probabilities():
    with pytest.raises(ValueError):
        derive_params(1.2, 0.1)
    with pytest.raises(ValueError):
        derive_params(0.5, -0.1)


def test_step_boundary_layout():
    w, s = BoundarySpec.step().probabilities(4, 3)
    assert np.all(s == 1.0) and np.all(w == 0.0)


def test_overrides_take_precedence():
    spec = BoundarySpec((Segment(1, None, 0.5),), (Segment(1, 3, 0.2), Segment(2, None, 0.9)))
    spec = spec.with_override("south", 4, False).with_vertex((0, 2), True)
    w, s = spec.probabilities(5, 3)
    assert list(s) == [0.2, 0.9, 0.9, 0.0, 0.9]
    assert list(w) == [0.5, 1.0, 0.5]
    assert boundary_slot((1, 0)) == ("south", 1)
    assert boundary_slot((0, 1)) == ("west", 1)


def test_empty_boundary_gives_empty_ensemble():
    ens = sample_ensemble(derive_params(0.6, 0.2), BoundarySpec.empty(), (6, 5), NoiseField(3))
    assert ens.edge_count() == 0
    assert np.all(height_grid(ens) == 0)
    d = boundary_counts(ens, 6, 5)
    assert (d.W, d.N, d.E, d.S, d.H) == (0, 0, 0, 0, 0)


def test_one_by_one_step_frequencies():
    p = derive_params(0.6, 0.2)
    n = 20000
    up = 0
    for r in range(n):
        ens = sample_ensemble(p, BoundarySpec.step(), (1, 1), NoiseField(1).replicate(r))
        d = boundary_counts(ens, 1, 1)
        if ens.v[0, 1]:
            up += 1
            assert (d.W, d.N, d.E, d.S, d.H) == (0, 1, 0, 1, -1)
            assert height_flux(ens, 1, 1) == -1
        else:
            assert height_flux(ens, 1, 1) == 0
    se = math.sqrt(0.6 * 0.4 / n)
    assert abs(up / n - 0.6) < 4 * se


def test_determinism():
    p = derive_params(0.5, 0.1)
    b = BoundarySpec.bernoulli(0.4, 0.6)
    a = sample_ensemble(p, b, (30, 20), NoiseField(77))
    c = sample_ensemble(p, b, (30, 20), NoiseField(77))
    assert dump_ensemble(a) == dump_ensemble(c)


def test_validity_and_conservation():
    p = derive_params(0.7, 0.3)
    b = BoundarySpec.bernoulli(0.5, 0.5)
    for r in range(300):
        ens = sample_ensemble(p, b, (20, 20), NoiseField(8).replicate(r))
        assert ens.is_valid()
        codes = ens.vertex_codes()
        assert codes.min() >= 0 and codes.max() <= 5
        Hg = height_grid(ens)
        for x, y in [(0, 0), (5, 3), (20, 20), (13, 0), (0, 9)]:
            d = boundary_counts(ens, x, y)
            assert d.W - d.N == d.E - d.S == d.H == height_flux(ens, x, y) == Hg[x, y]


def test_flux_identity_many():
    # W - N = E - S over the whole grid of each ensemble
    p = derive_params(0.45, 0.15)
    b = BoundarySpec.bernoulli(0.3, 0.7)
    for r in range(10 ** 4):
        ens = sample_ensemble(p, b, (20, 20), NoiseField(21).replicate(r))
        h = ens.h.astype(np.int64)
        v = ens.v.astype(np.int64)
        west = np.concatenate([[0], np.cumsum(h[0, :])])
        north = np.cumsum(v[:, 1:], axis=0)
        east = np.cumsum(h[1:, :], axis=1)
        south = np.cumsum(v[:, 0])
        wn = west[None, 1:] - north
        es = east - south[:, None]
        assert np.array_equal(wn, es)


def test_monotone_in_boundary_law():
    p = derive_params(0.6, 0.2)
    lo = BoundarySpec.bernoulli(0.2, 0.3)
    hi = BoundarySpec.bernoulli(0.5, 0.6)
    for r in range(200):
        f = NoiseField(4).replicate(r)
        assert sample_ensemble(p, hi, (25, 25), f).contains(sample_ensemble(p, lo, (25, 25), f))


def test_serialization_roundtrip(tmp_path):
    ens = sample_ensemble(derive_params(0.6, 0.2), BoundarySpec.bernoulli(0.5, 0.5), (9, 7), NoiseField(2))
    raw = dump_ensemble(ens)
    assert raw.startswith(MAGIC)
    back = load_ensemble(raw)
    assert np.array_equal(back.h, ens.h) and np.array_equal(back.v, ens.v)
    with pytest.raises(ValueError):
        load_ensemble(b"nope" + raw[4:])
    lines = text_grid(ens).splitlines()
    assert len(lines) == 7 and all(len(l) == 9 for l in lines)


def test_oversized_dims_rejected():
    with pytest.raises(OverflowError):
        sample_ensemble(derive_params(0.6, 0.2), BoundarySpec.step(), (1 << 21, 1), NoiseField(0))
