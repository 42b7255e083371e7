import math

import numpy as np
import pytest

from s6v.analytics import (OddsPair, admissible, asep_step_constants, characteristic_point, expected_height,
                           invert_beta, limit_shape, mgf_epsilon, rains_ejs_mgf, stationary_pair, step_constants, x0_of_y,
                           y0_of_x)
from s6v.model import BoundarySpec, derive_params
from s6v.oracle import exact_height_dist, exact_mgf


def test_stationary_pair_values():
    assert stationary_pair(0.37, derive_params(0.3, 0.3)) == pytest.approx(0.37, abs=1e-15)
    p = derive_params(0.6, 0.2)
    b1 = stationary_pair(0.5, p)
    assert b1 == pytest.approx(1 / 3, abs=1e-15)
    beta1 = OddsPair.from_b(b1).beta
    assert beta1 == pytest.approx(p.kappa * 1.0, rel=2.3e-16)


def test_mgf_trivial_in_stationary_case():
    p = derive_params(0.6, 0.2)
    b1 = stationary_pair(0.3, p)
    eps, lm = rains_ejs_mgf(b1, 0.3, p, 4, 7)
    assert abs(eps) < 1e-14 and abs(lm) < 1e-13


def test_mgf_one_by_one():
    p = derive_params(0.6, 0.2)
    eps, lm = rains_ejs_mgf(0.5, 0.5, p, 1, 1)
    assert eps == pytest.approx(math.log(0.5), abs=1e-15)
    assert math.exp(lm) == pytest.approx(1.125, abs=1e-14)


def test_mgf_two_by_three_against_oracle():
    p = derive_params(0.6, 0.2)
    eps, lm = rains_ejs_mgf(0.5, 0.5, p, 2, 3)
    assert lm == pytest.approx(3 * math.log(0.75) + 2 * math.log(1.5), abs=1e-14)
    dist = exact_height_dist(0.6, 0.2, BoundarySpec.bernoulli(0.5, 0.5), 2, 3)
    assert abs(float(exact_mgf(dist, eps)) - math.exp(lm)) < 1e-12


def test_epsilon_zero_iff_stationary():
    p = derive_params(0.5, 0.1)
    assert mgf_epsilon(stationary_pair(0.4, p), 0.4, p) == pytest.approx(0, abs=1e-15)
    assert abs(mgf_epsilon(0.4, 0.4, p)) > 0.1


def test_expected_height():
    assert expected_height(0.3, 0.3, 5, 5) == 0
    assert expected_height(1 / 3, 1 / 2, 2, 3) == pytest.approx(0, abs=1e-15)


def test_characteristic_point_examples():
    p = derive_params(0.6, 0.2)
    assert x0_of_y(1000, 0.0, p) == pytest.approx(1000 * p.kappa)
    assert x0_of_y(1000, 1.0, p) == pytest.approx(1125, abs=1e-9)
    q = derive_params(0.3, 0.3)
    for beta in (0.0, 0.5, 3.0):
        assert x0_of_y(321, beta, q) == pytest.approx(321)
    assert characteristic_point("x0_of_y", 1000, OddsPair.from_beta(1.0), p) == pytest.approx(1125)
    with pytest.raises(ValueError):
        characteristic_point("bogus", 1, None, p)


@pytest.mark.parametrize("d1,d2", [(0.6, 0.2), (0.4, 0.1), (0.2001, 0.2), (0.9, 0.3)])
def test_invert_beta_round_trip(d1, d2):
    p = derive_params(d1, d2)
    for beta in (0.05, 0.5, 1.0, 2.0, 20.0):
        x1 = x0_of_y(500, beta, p)
        assert invert_beta(x1, 500, p) == pytest.approx(beta, rel=1e-10)
        assert characteristic_point("invert_beta", x1, None, p, y=500) == pytest.approx(beta, rel=1e-10)


def test_y0_inverts_x0():
    p = derive_params(0.6, 0.2)
    beta1 = 0.8
    x = x0_of_y(700, beta1, p)
    assert y0_of_x(x, beta1 / p.kappa, p) == pytest.approx(700, rel=1e-12)


def test_x0_increasing_in_beta():
    # x0 runs from y*kappa (beta=0) up to y/kappa (beta -> infinity)
    p = derive_params(0.6, 0.2)
    betas = np.linspace(0, 50, 400)
    xs = np.array([x0_of_y(100, b, p) for b in betas])
    assert np.all(np.diff(xs) > 0)
    assert xs[0] == pytest.approx(100 * p.kappa) and xs[-1] < 100 / p.kappa


def test_step_constants():
    p = derive_params(0.6, 0.2)
    # perfect square vanishes on y(1-d1) = x(1-d2), where the fluctuation scale degenerates
    assert limit_shape(100, 200, p) == pytest.approx(0, abs=1e-12)
    with pytest.raises(ValueError):
        step_constants(100, 200 * (1 + 1e-9), p)
    for x, y in [(100, 100), (60, 100), (100, 60)]:
        c = step_constants(x, y, p)
        assert -x * (1 - p.kappa) - 1e-9 <= c.H_script <= 0
        assert c.sigma3 > 0 and c.sigma ** 3 == pytest.approx(c.sigma3)
    with pytest.raises(ValueError):
        step_constants(10, 100, p)
    assert not admissible(10, 100, p)


def test_step_mean_matches_stationary_mean_at_characteristic_point():
    p = derive_params(0.4, 0.1)
    b1 = stationary_pair(0.5, p)
    y = 1500
    x = x0_of_y(y, OddsPair.from_b(b1).beta, p)
    assert step_constants(x, y, p).H_script == pytest.approx(expected_height(b1, 0.5, x, y), rel=1e-12)


def test_asep_step_constants():
    c = asep_step_constants(0, 10.0, 1.0, 0.3)
    assert c.J_script == pytest.approx(-10 * 0.7 / 4)
    assert c.nu3 == pytest.approx(10 * 0.7 / 16)
    assert asep_step_constants(7.0, 10.0, 1.0, 0.3).nu3 == pytest.approx(0, abs=1e-12)
    with pytest.raises(ValueError):
        asep_step_constants(8.0, 10.0, 1.0, 0.3)
    with pytest.raises(ValueError):
        asep_step_constants(0, 10.0, 0.3, 1.0)


def test_open_interval_required():
    with pytest.raises(ValueError):
        step_constants(10, 10, derive_params(1.0, 0.2))
    with pytest.raises(ValueError):
        stationary_pair(1.0, derive_params(0.6, 0.2))
