import io
import math

import numpy as np
import pytest

import s6v.stats as st
from s6v.analytics import stationary_pair
from s6v.model import BoundarySpec, derive_params
from s6v.oracle import exact_height_dist, exact_two_point

P = derive_params(0.6, 0.2)


def test_wilson_coverage_synthetic():
    rng = np.random.default_rng(1)
    for p in (0.01, 0.2, 0.5):
        k = rng.binomial(400, p, size=4000)
        lo, hi = st.wilson(k, 400, 0.95)
        cover = ((lo <= p) & (p <= hi)).mean()
        assert 0.93 <= cover <= 0.97


def test_tail_curve_basics():
    x = np.arange(10)
    c = st.tail_from_samples(x, [0, 3, 8, 20], "x")
    assert list(c.counts) == [9, 6, 1, 0]
    assert c.p_hat[0] <= 1 and c.monotone()
    assert np.all(c.ci_lo <= c.p_hat) and np.all(c.p_hat <= c.ci_hi)
    with pytest.raises(ValueError):
        st.tail_from_samples([], [1])
    lo = st.tail_from_samples(-x, [3], "x", side="lower")
    assert lo.counts[0] == 6
    text = st.tail_csv_text([c])
    assert text.splitlines()[0] == ",".join(st.CSV_HEADER)


def test_template_and_shape():
    u = np.array([1.0, 2.0, 3.0, 4.0])
    p = 0.5 * np.exp(-0.7 * u ** 1.5)
    n = 10 ** 9
    c = st.TailCurve("t", u, (p * n).astype(int), n, p, p * 0.99, p * 1.01, "")
    fit = st.shape_fit(c, 1.5)
    assert fit.r2 > 0.999 and fit.slope == pytest.approx(-0.7, rel=1e-6) and fit.passed()
    tpl = st.fit_template(c, "kpz", 1.0)
    assert tpl.c == pytest.approx(0.7, rel=1e-6) and np.all(tpl(u) >= p * (1 - 1e-9))
    assert np.all(c.check_bound(tpl(u)))


def test_estimate_tail_threshold_zero():
    b1 = stationary_pair(0.5, P)
    spec = st.height_observable(P, BoundarySpec.bernoulli(b1, 0.5), 5, 5)
    c = st.estimate_tail(spec, [0], 1000, 1)
    assert c.p_hat[0] <= 1
    with pytest.raises(ValueError):
        st.estimate_tail(spec, [0], 0, 1)
    with pytest.raises(ValueError):
        st.ObservableSpec("nonsense", "x", lambda s, r, n: np.zeros(n))


def test_sampler_matches_oracle():
    b = BoundarySpec.bernoulli(0.3, 0.7)
    dist = exact_height_dist(0.6, 0.2, b, 3, 4)
    spec = st.height_observable(P, b, 3, 4)
    h = spec.sample(4, 0, 10 ** 5)
    _, pval, dof = st.pmf_chisquare(h, dist.support, [float(q) for q in dist.probabilities])
    assert dof > 2 and pval > 1e-3


def test_stationarity_mc_and_negative_control():
    b1 = stationary_pair(0.5, P)
    ok = st.test_stationarity(P, b1, 0.5, 40, 40, 10 ** 5, 3)
    assert ok.passed
    bad = st.test_stationarity(P, 0.5, 0.5, 40, 40, 10 ** 5, 3, pairs=False, require_stationary=False)
    assert not bad.marginal_passed
    with pytest.raises(ValueError):
        st.test_stationarity(P, 0.5, 0.5, 4, 4, 10, 3)


def test_two_point_small_box():
    b1 = stationary_pair(0.5, P)
    S, lap = exact_two_point(0.6, 0.2, b1, 0.5, 3, 3)
    est = st.two_point_estimate(P, b1, 0.5, 3, 3, 2 * 10 ** 5, 5)
    assert est.agree(3.0)
    assert abs(est.S_direct - float(S)) < 4 * est.se_direct
    assert abs(est.S_laplacian - float(S)) < 4 * est.se_laplacian
    with pytest.raises(ValueError):
        st.two_point_estimate(P, b1, 0.5, 1, 3, 10, 5)


def test_two_point_degenerate_density():
    est = st.two_point_estimate(P, 0.0, 0.0, 4, 4, 1000, 5)
    assert est.S_direct == 0 and est.S_laplacian == 0


def test_scaling_needs_four_abscissae():
    with pytest.raises(ValueError):
        st.fit_variance_scaling(derive_params(0.4, 0.1), 0.5, [300], 10, 1)


def test_off_characteristic_variance_is_diffusive():
    # far from the characteristic point Var H grows linearly in |x - x0|
    p = derive_params(0.4, 0.1)
    b2 = 0.5
    b1 = stationary_pair(b2, p)
    y = 60
    (x0, _), = st.characteristic_lattice_points(p, b2, [y])
    offs = np.array([200, 400, 800])
    draw = st.height_draw(p, BoundarySpec.bernoulli(b1, b2), [(x0 + d, y) for d in offs])
    H = st.map_replicates(draw, 2, 0, 4000).astype(float)
    v = H.var(axis=0, ddof=1)
    slope = np.polyfit(np.log(offs), np.log(v), 1)[0]
    assert 0.85 < slope < 1.15


def test_step_tail_trivial_u_zero():
    p = derive_params(0.4, 0.1)
    rep = st.step_tail_check(p, 150, 150, [0.0, 1.0, 2.0], 2000, 3, C=0.0)
    assert rep.bound[0] == 1.0 and rep.passed_each[0]
    assert rep.mode == "supplied"
    fitted = st.step_tail_check(p, 150, 150, [0.0, 1.0, 2.0], 2000, 3)
    assert fitted.mode == "fitted" and fitted.train is not None
    assert fitted.valid.seed_range != fitted.train.seed_range
    with pytest.raises(ValueError):
        st.step_tail_check(p, 10, 150, [1.0], 10, 3)


def test_large_deviation_height():
    p = derive_params(0.02, 0.01)
    n = 100
    for b in (BoundarySpec.bernoulli(stationary_pair(0.5, p), 0.5), BoundarySpec.step()):
        rep = st.ld_height_check(p, b, n, [20, 25, 30], 20000, 1)
        assert rep.passed
    with pytest.raises(ValueError):
        st.ld_height_check(p, BoundarySpec.step(), n, [5], 10, 1)


def test_map_replicates_order_and_workers():
    b1 = stationary_pair(0.5, P)
    draw = st.height_draw(P, BoundarySpec.bernoulli(b1, 0.5), [(4, 4), (2, 1)])
    a = st.map_replicates(draw, 7, 0, 100, workers=1, chunk=100)
    b = st.map_replicates(draw, 7, 0, 100, workers=2, chunk=17)
    assert np.array_equal(a, b)


def test_two_sample_chisquare():
    rng = np.random.default_rng(3)
    a = rng.integers(0, 5, 5000)
    b = rng.integers(0, 5, 5000)
    assert st.two_sample_chisquare(a, b)[1] > 1e-4
    assert st.two_sample_chisquare(a, (b + (b == 0)) % 5)[1] < 1e-6
