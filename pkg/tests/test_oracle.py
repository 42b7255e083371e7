import math
from fractions import Fraction

import pytest

from s6v.model import BoundarySpec
from s6v.oracle import (ENUM_CAP, enumerate_box, exact, exact_height_dist, exact_mgf, exact_stationarity,
                        exact_stationary_b1, exact_two_point, vertex_law)

F = Fraction


def test_one_by_one_step():
    d = exact_height_dist(0.6, 0.2, BoundarySpec.step(), 1, 1)
    assert d.as_dict() == {-1: F(3, 5), 0: F(2, 5)}


def test_empty_boundary_point_mass():
    d = exact_height_dist(0.6, 0.2, BoundarySpec.empty(), 3, 2)
    assert d.as_dict() == {0: 1}


def test_one_by_one_bernoulli():
    d = exact_height_dist(0.6, 0.2, BoundarySpec.bernoulli(0.5, 0.5), 1, 1)
    assert d.as_dict() == {-1: F(3, 20), 0: F(4, 5), 1: F(1, 20)}
    assert d.total() == 1


def test_exact_mgf():
    d = exact_height_dist(0.6, 0.2, BoundarySpec.bernoulli(0.5, 0.5), 1, 1)
    assert exact_mgf(d, 0) == 1
    assert abs(exact_mgf(d, math.log(0.5)) - 1.125) < 1e-15
    sym = exact_height_dist(0.5, 0.5, BoundarySpec.bernoulli(0.5, 0.5), 1, 1)
    if sym.as_dict().get(1) == sym.as_dict().get(-1):
        assert abs(exact_mgf(sym, 0.3) - exact_mgf(sym, -0.3)) < 1e-30


def test_flux_identity_every_outcome():
    # enumerate_box asserts W - N == E - S internally; make it exercise many outcomes
    law = enumerate_box(exact(0.7), exact(0.3), [exact(0.5)] * 3, [exact(0.5)] * 3, 3, 3)
    assert sum(law.values()) == 1
    for (W, N, E, S) in law:
        assert W - N == E - S


@pytest.mark.parametrize("d1,d2", [(0.6, 0.2), (0.5, 0.1), (0.9, 0.3)])
@pytest.mark.parametrize("b2", [0.2, 0.5, 0.8])
def test_two_point_identity(d1, d2, b2):
    b1 = exact_stationary_b1(b2, d1, d2)
    for x in (2, 3):
        for y in (1, 2, 3):
            S, lap = exact_two_point(d1, d2, b1, b2, x, y)
            assert lap == 2 * S


def test_two_point_degenerate():
    for b2 in (0.0, 1.0):
        b1 = 0.0 if b2 == 0.0 else 1.0
        S, lap = exact_two_point(0.6, 0.2, b1, b2, 3, 2)
        assert S == 0 and lap == 0
    with pytest.raises(ValueError):
        exact_two_point(0.6, 0.2, 0.5, 0.5, 1, 2)


def test_stationarity_exact():
    b1 = exact_stationary_b1(0.5, 0.6, 0.2)
    assert b1 == F(1, 3)
    dev = exact_stationarity(0.6, 0.2, b1, 0.5, 3, 3)
    assert dev == {"marginal": 0, "pairwise": 0, "joint": 0}
    bad = exact_stationarity(0.6, 0.2, 0.5, 0.5, 2, 2)
    assert bad["marginal"] > 0


def test_vertex_law_sums_to_one():
    law = vertex_law(0.6, 0.2, BoundarySpec.step(), 3, 3, 2, 2)
    assert sum(law.values()) == 1
    assert set(law) <= set(range(6))


def test_cap():
    with pytest.raises(ValueError):
        exact_height_dist(0.6, 0.2, BoundarySpec.step(), 5, 4)
    assert ENUM_CAP == 16
