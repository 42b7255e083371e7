"""Monte Carlo estimators, tail curves and hypothesis tests.

Every estimator draws replicates ``rep0 .. rep0+N-1`` of a single seed, so
two calls with disjoint replicate ranges are independent and a call can be
split across workers and concatenated in replicate order.
"""
from __future__ import annotations

import csv
import io
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import stats as sps
from statsmodels.stats.proportion import proportion_confint

from . import _kernels as K
from .analytics import expected_height, stationary_pair, step_constants, x0_of_y, OddsPair
from .model import BoundarySpec, ModelParams

log = logging.getLogger(__name__)

FAMILY_LEVEL = 1e-3
CSV_HEADER = ("observable", "u", "p_hat", "ci_lo", "ci_hi", "N", "seed_range")


def _seed64(seed: int) -> np.uint64:
    return np.uint64(int(seed) & ((1 << 64) - 1))


# ---- replicate plumbing ----------------------------------------------------

def _call(args):
    fn, seed, rep0, n = args
    return fn(seed, rep0, n)


def map_replicates(fn: Callable[[int, int, int], np.ndarray], seed: int, rep0: int, n: int,
                   workers: int = 1, chunk: Optional[int] = None) -> np.ndarray:
    """Evaluate ``fn(seed, start, count)`` over chunks and concatenate in replicate order.

    ``fn`` must be picklable when ``workers > 1``.
    """
    if n <= 0:
        raise ValueError("need at least one replicate")
    if chunk is None:
        chunk = max(1, math.ceil(n / max(1, 4 * workers)))
    jobs = [(fn, seed, s, min(chunk, rep0 + n - s)) for s in range(rep0, rep0 + n, chunk)]
    if workers <= 1 or len(jobs) == 1:
        parts = [_call(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_call, jobs))
    return np.concatenate(parts, axis=0)


# ---- jackknife ---------------------------------------------------------------

def grouped_jackknife(data: np.ndarray, stat: Callable[[np.ndarray], np.ndarray],
                      groups: int = 100) -> tuple[np.ndarray, np.ndarray]:
    """Full-sample statistic and delete-one-group jackknife standard error."""
    data = np.asarray(data)
    n = data.shape[0]
    g = min(groups, n)
    if g < 2:
        raise ValueError("jackknife needs at least two observations")
    full = np.asarray(stat(data), dtype=float)
    bounds = np.linspace(0, n, g + 1).astype(int)
    reps = []
    for a, b in zip(bounds[:-1], bounds[1:]):
        reps.append(np.asarray(stat(np.concatenate([data[:a], data[b:]])), dtype=float))
    reps = np.array(reps)
    se = np.sqrt((g - 1) / g * ((reps - reps.mean(axis=0)) ** 2).sum(axis=0))
    return full, se


def variance_with_se(x: np.ndarray, groups: int = 100) -> tuple[float, float]:
    v, se = grouped_jackknife(np.asarray(x, float), lambda d: np.var(d, ddof=1), groups)
    return float(v), float(se)


# ---- tail curves -------------------------------------------------------------

def wilson(k, n, level: float = 0.95) -> tuple[np.ndarray, np.ndarray]:
    lo, hi = proportion_confint(np.asarray(k), n, alpha=1.0 - level, method="wilson")
    return np.asarray(lo, float), np.asarray(hi, float)


@dataclass(frozen=True)
class TailCurve:
    observable: str
    u: np.ndarray
    counts: np.ndarray
    N: int
    p_hat: np.ndarray
    ci_lo: np.ndarray
    ci_hi: np.ndarray
    seed_range: str
    level: float = 0.95

    def monotone(self) -> bool:
        return bool(np.all(np.diff(self.p_hat) <= 0))

    def strictly_decaying(self) -> bool:
        return bool(np.all(np.diff(self.p_hat) < 0))

    @property
    def stderr(self) -> np.ndarray:
        return np.sqrt(self.p_hat * (1 - self.p_hat) / self.N)

    def rows(self) -> list[tuple]:
        return [(self.observable, float(u), float(p), float(lo), float(hi), self.N, self.seed_range)
                for u, p, lo, hi in zip(self.u, self.p_hat, self.ci_lo, self.ci_hi)]

    def check_bound(self, bound: np.ndarray) -> np.ndarray:
        """Per-threshold: the bound is not exceeded beyond the confidence interval."""
        return self.ci_lo <= np.asarray(bound, float)


def write_tail_csv(curves: Sequence[TailCurve], out) -> None:
    own = isinstance(out, (str, bytes)) or hasattr(out, "__fspath__")
    fh = open(out, "w", newline="") if own else out
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for c in curves:
            for row in c.rows():
                w.writerow(row[:1] + tuple(repr(v) if isinstance(v, float) else v for v in row[1:]))
    finally:
        if own:
            fh.close()


def tail_csv_text(curves: Sequence[TailCurve]) -> str:
    buf = io.StringIO()
    write_tail_csv(curves, buf)
    return buf.getvalue()


def tail_from_samples(samples: np.ndarray, thresholds: Sequence[float], observable: str = "x",
                      side: str = "upper", seed_range: str = "", level: float = 0.95) -> TailCurve:
    """P[X > u] (upper), P[X < -u] (lower) or P[|X| > u] (abs) at each u."""
    x = np.asarray(samples, float).ravel()
    if x.size == 0:
        raise ValueError("empty sample set")
    u = np.asarray(thresholds, float)
    if side == "upper":
        k = (x[None, :] > u[:, None]).sum(axis=1)
    elif side == "lower":
        k = (x[None, :] < -u[:, None]).sum(axis=1)
    elif side == "abs":
        k = (np.abs(x)[None, :] > u[:, None]).sum(axis=1)
    else:
        raise ValueError(f"unknown side {side!r}")
    n = x.size
    lo, hi = wilson(k, n, level)
    return TailCurve(observable, u, k, n, k / n, lo, hi, seed_range, level)


# ---- observables -------------------------------------------------------------

OBSERVABLE_KINDS = ("height", "exit", "current", "second_class")


@dataclass(frozen=True)
class ObservableSpec:
    """A scalar observable drawn as ``(draw(seed, rep0, n) - center) / scale``."""
    kind: str
    label: str
    draw: Callable[[int, int, int], np.ndarray] = field(repr=False)
    center: float = 0.0
    scale: float = 1.0

    def __post_init__(self):
        if self.kind not in OBSERVABLE_KINDS:
            raise ValueError(f"observable kind must be one of {OBSERVABLE_KINDS}")

    def sample(self, seed: int, rep0: int, n: int, workers: int = 1) -> np.ndarray:
        raw = map_replicates(self.draw, seed, rep0, n, workers)
        return (np.asarray(raw, float) - self.center) / self.scale


@dataclass(frozen=True)
class _HeightDraw:
    d1: float
    d2: float
    west: np.ndarray
    south: np.ndarray
    X: int
    Y: int
    qx: np.ndarray
    qy: np.ndarray

    def __call__(self, seed, rep0, n):
        return K.heights_batch(_seed64(seed), rep0, n, self.d1, self.d2, self.west, self.south,
                               self.X, self.Y, self.qx, self.qy)


def height_draw(params: ModelParams, boundary: BoundarySpec, points: Sequence[tuple[int, int]],
                dims: Optional[tuple[int, int]] = None) -> _HeightDraw:
    """Batch sampler of H at several points of one lattice; columns follow ``points``."""
    pts = [(int(a), int(b)) for a, b in points]
    X = max(a for a, _ in pts) if dims is None else dims[0]
    Y = max(b for _, b in pts) if dims is None else dims[1]
    X = max(X, 1)
    Y = max(Y, 1)
    order = sorted(range(len(pts)), key=lambda k: pts[k][1])
    qx = np.array([pts[k][0] for k in order], np.int64)
    qy = np.array([pts[k][1] for k in order], np.int64)
    west, south = boundary.probabilities(X, Y)
    inner = _HeightDraw(params.delta1, params.delta2, west, south, X, Y, qx, qy)
    return _Reorder(inner, np.argsort(order))


@dataclass(frozen=True)
class _Reorder:
    inner: _HeightDraw
    back: np.ndarray

    def __call__(self, seed, rep0, n):
        return self.inner(seed, rep0, n)[:, self.back]


@dataclass(frozen=True)
class _Column:
    inner: Callable
    col: int

    def __call__(self, seed, rep0, n):
        return self.inner(seed, rep0, n)[:, self.col]


def height_observable(params: ModelParams, boundary: BoundarySpec, x: int, y: int,
                      center: float = 0.0, scale: float = 1.0) -> ObservableSpec:
    return ObservableSpec("height", f"H({x},{y})", _Column(height_draw(params, boundary, [(x, y)]), 0),
                          center, scale)


def estimate_tail(spec: ObservableSpec, thresholds: Sequence[float], N: int, seed: int, rep0: int = 0,
                  side: str = "upper", level: float = 0.95, workers: int = 1) -> TailCurve:
    if N <= 0:
        raise ValueError("empty sample set")
    x = spec.sample(seed, rep0, N, workers)
    return tail_from_samples(x, thresholds, f"{spec.label}:{side}", side,
                             f"{seed}:{rep0}-{rep0 + N - 1}", level)


# ---- bound templates ---------------------------------------------------------

def _g_kpz(u, s):
    return u ** 1.5 / math.sqrt(s)


def _g_linear(u, s):
    return u


def _g_gauss(u, s):
    return u * u * s


def _g_cubic(u, s):
    return u ** 3 / (s * s)


TEMPLATES = {"kpz": _g_kpz, "linear": _g_linear, "gaussian": _g_gauss, "cubic": _g_cubic}


@dataclass(frozen=True)
class BoundTemplate:
    """C * exp(-c * g(u)) with g chosen from ``TEMPLATES``."""
    kind: str
    C: float
    c: float
    scale: float = 1.0

    def __call__(self, u) -> np.ndarray:
        g = TEMPLATES[self.kind]
        u = np.asarray(u, float)
        return self.C * np.exp(-self.c * g(u, self.scale))


def fit_template(curve: TailCurve, kind: str, scale: float = 1.0) -> BoundTemplate:
    """Rate c from a log-linear fit, then the smallest C dominating every point."""
    g = TEMPLATES[kind](np.asarray(curve.u, float), scale)
    ok = curve.counts > 0
    if ok.sum() < 2:
        raise ValueError("need at least two thresholds with nonzero counts to fit a template")
    slope = sps.linregress(g[ok], np.log(curve.p_hat[ok])).slope
    c = max(-slope, 0.0)
    C = float(np.max(curve.p_hat[ok] * np.exp(c * g[ok])))
    return BoundTemplate(kind, C, c, scale)


@dataclass(frozen=True)
class ShapeFit:
    power: float
    slope: float
    intercept: float
    r2: float
    monotone: bool

    def passed(self, r2_min: float = 0.9) -> bool:
        return self.monotone and self.slope < 0 and self.r2 >= r2_min


def shape_fit(curve: TailCurve, power: float) -> ShapeFit:
    """Regress log P on u**power; zero counts make the fit fail."""
    if np.any(curve.counts == 0):
        return ShapeFit(power, math.nan, math.nan, 0.0, curve.monotone())
    res = sps.linregress(np.asarray(curve.u, float) ** power, np.log(curve.p_hat))
    return ShapeFit(power, float(res.slope), float(res.intercept), float(res.rvalue ** 2),
                    curve.strictly_decaying())


# ---- stationarity ------------------------------------------------------------

@dataclass(frozen=True)
class StationarityReport:
    N: int
    b1: float
    b2: float
    marginal_p: np.ndarray      # Bonferroni-corrected
    pair_p: np.ndarray          # Bonferroni-corrected, upper triangle order
    level: float

    @property
    def passed(self) -> bool:
        m = self.marginal_p.min(initial=1.0)
        p = self.pair_p.min(initial=1.0)
        return bool(m > self.level and p > self.level)

    @property
    def marginal_passed(self) -> bool:
        return bool(self.marginal_p.min(initial=1.0) > self.level)


def test_stationarity(params: ModelParams, b1: float, b2: float, x: int, y: int, N: int, seed: int,
                      rep0: int = 0, pairs: bool = True, level: float = FAMILY_LEVEL,
                      require_stationary: bool = True) -> StationarityReport:
    """Chi-square tests that the exits of the x by y box are iid Bernoulli.

    Right exits should be Bernoulli(b1), top exits Bernoulli(b2), and every
    pair independent. All tests form one Bonferroni family.
    """
    if require_stationary and abs(stationary_pair(b2, params) - b1) > 1e-12:
        raise ValueError("(b1, b2) is not a stationary pair: beta1 != kappa * beta2")
    west, south = BoundarySpec.bernoulli(b1, b2).probabilities(x, y)
    bits = K.exit_bits_batch(_seed64(seed), rep0, N, params.delta1, params.delta2, west, south, x, y)
    p = np.concatenate([np.full(y, b1), np.full(x, b2)])
    k = bits.sum(axis=0, dtype=np.int64)
    with np.errstate(divide="ignore", invalid="ignore"):
        chi = (k - N * p) ** 2 / (N * p * (1 - p))
    chi = np.where(np.isfinite(chi), chi, np.where(k == N * p, 0.0, np.inf))
    marg = sps.chi2.sf(chi, 1)
    pair = np.empty(0)
    m = bits.shape[1]
    if pairs and m > 1:
        B = bits.astype(np.float64)
        n11 = B.T @ B
        iu = np.triu_indices(m, 1)
        a = n11[iu]
        ka, kb = k[iu[0]].astype(float), k[iu[1]].astype(float)
        den = ka * (N - ka) * kb * (N - kb)
        with np.errstate(divide="ignore", invalid="ignore"):
            chi2 = N * (N * a - ka * kb) ** 2 / den
        chi2 = np.where(den > 0, chi2, 0.0)
        pair = sps.chi2.sf(chi2, 1)
    tests = marg.size + pair.size
    return StationarityReport(N, b1, b2, np.minimum(1.0, marg * tests), np.minimum(1.0, pair * tests), level)


test_stationarity.__test__ = False  # keep pytest from collecting it on import


# ---- variance scaling --------------------------------------------------------

@dataclass(frozen=True)
class ScalingFit:
    abscissae: np.ndarray       # y (1 - kappa)
    points: tuple[tuple[int, int], ...]
    variances: np.ndarray
    variance_se: np.ndarray
    slope: float
    slope_se: float
    intercept: float
    N: int


def _loglog_slope(logx: np.ndarray):
    def stat(h):
        v = np.var(h, axis=0, ddof=1)
        s, c = np.polyfit(logx, np.log(v), 1)
        return np.concatenate([[s, c], v])
    return stat


def characteristic_lattice_points(params: ModelParams, b2: float, y_list: Sequence[int]) -> list[tuple[int, int]]:
    beta1 = OddsPair.from_b(stationary_pair(b2, params)).beta
    return [(int(round(x0_of_y(y, beta1, params))), int(y)) for y in y_list]


def fit_variance_scaling(params: ModelParams, b2: float, y_list: Sequence[int], N: int, seed: int,
                         rep0: int = 0, groups: int = 50, workers: int = 1) -> ScalingFit:
    """Var H at the characteristic point of each y, and the log-log slope against y(1-kappa)."""
    if len(y_list) < 4:
        raise ValueError("variance scaling needs at least 4 abscissae")
    params.require_open()
    b1 = stationary_pair(b2, params)
    pts = characteristic_lattice_points(params, b2, y_list)
    draw = height_draw(params, BoundarySpec.bernoulli(b1, b2), pts)
    H = map_replicates(draw, seed, rep0, N, workers).astype(float)
    ab = np.array([y * (1 - params.kappa) for y in y_list], float)
    full, se = grouped_jackknife(H, _loglog_slope(np.log(ab)), groups)
    return ScalingFit(ab, tuple(pts), full[2:], se[2:], float(full[0]), float(se[0]), float(full[1]), N)


# ---- two-point function ------------------------------------------------------

@dataclass(frozen=True)
class TwoPointEstimate:
    S_direct: float
    se_direct: float
    S_laplacian: float
    se_laplacian: float
    se_difference: float
    N: int

    @property
    def z(self) -> float:
        d = self.S_direct - self.S_laplacian
        return d / self.se_difference if self.se_difference > 0 else (0.0 if d == 0 else math.inf)

    def agree(self, k: float = 3.0) -> bool:
        return abs(self.z) <= k


def _two_point_stat(d):
    corner = -d[:, 0]                  # vertical arrow entering (1, 1)
    top = d[:, 2] - d[:, 3]            # vertical arrow leaving (x, y) upward
    direct = np.mean(top * corner) - np.mean(top) * np.mean(corner)
    direct *= d.shape[0] / (d.shape[0] - 1)
    v = np.var(d[:, 1:], axis=0, ddof=1)
    lap = 0.5 * (v[2] + v[0] - 2 * v[1])
    return np.array([direct, lap, direct - lap])


def two_point_estimate(params: ModelParams, b1: float, b2: float, x: int, y: int, N: int, seed: int,
                       rep0: int = 0, groups: int = 100, workers: int = 1) -> TwoPointEstimate:
    """S = Cov(top exit at column x, bottom entry at column 1), estimated two ways.

    The direct route is the sample covariance; the other is half the second
    difference Var H(x) + Var H(x-2) - 2 Var H(x-1) along row y.
    """
    if x < 2:
        raise ValueError("two-point estimate needs x >= 2")
    pts = [(1, 0), (x - 2, y), (x - 1, y), (x, y)]
    draw = height_draw(params, BoundarySpec.bernoulli(b1, b2), pts, dims=(x, y))
    H = map_replicates(draw, seed, rep0, N, workers).astype(float)
    full, se = grouped_jackknife(H, _two_point_stat, groups)
    return TwoPointEstimate(float(full[0]), float(se[0]), float(full[1]), float(se[1]), float(se[2]), N)


# ---- stationary height tails -------------------------------------------------

@dataclass(frozen=True)
class HeightTailReport:
    point: tuple[int, int]
    scale: float
    upper: TailCurve
    lower: TailCurve
    upper_shape: ShapeFit
    lower_shape: ShapeFit


def stationary_height_tails(params: ModelParams, b2: float, y: int, u: Sequence[float], N: int, seed: int,
                            rep0: int = 0, workers: int = 1) -> HeightTailReport:
    """Tails of (H - E H) / (y(1-kappa))^(1/3) at the characteristic point."""
    b1 = stationary_pair(b2, params)
    (x, _), = characteristic_lattice_points(params, b2, [y])
    s = (y * (1 - params.kappa)) ** (1.0 / 3.0)
    spec = height_observable(params, BoundarySpec.bernoulli(b1, b2), x, y, expected_height(b1, b2, x, y), s)
    z = spec.sample(seed, rep0, N, workers)
    rng = f"{seed}:{rep0}-{rep0 + N - 1}"
    up = tail_from_samples(z, u, f"{spec.label}:upper", "upper", rng)
    lo = tail_from_samples(z, u, f"{spec.label}:lower", "lower", rng)
    return HeightTailReport((x, y), s, up, lo, shape_fit(up, 1.5), shape_fit(lo, 1.5))


# ---- step-data tail ----------------------------------------------------------

def step_template(u, C: float, scale: float) -> np.ndarray:
    """exp(-(4/3) u^(3/2) + C u^2 / scale), scale = (y(1-kappa))^(1/3)."""
    u = np.asarray(u, float)
    return np.exp(-4.0 / 3.0 * u ** 1.5 + C * u * u / scale)


@dataclass(frozen=True)
class StepTailReport:
    point: tuple[int, int]
    H_script: float
    sigma: float
    C: float
    mode: str                  # "supplied" or "fitted"
    train: Optional[TailCurve]
    valid: TailCurve
    bound: np.ndarray
    passed_each: np.ndarray

    @property
    def passed(self) -> bool:
        return bool(np.all(self.passed_each))


def _fit_step_C(curve: TailCurve, scale: float) -> float:
    u = np.asarray(curve.u, float)
    ok = (curve.counts > 0) & (u > 0)
    if not ok.any():
        return 0.0
    return float(np.max((np.log(curve.p_hat[ok]) + 4.0 / 3.0 * u[ok] ** 1.5) * scale / u[ok] ** 2))


def step_tail_check(params: ModelParams, x: int, y: int, u_list: Sequence[float], N: int, seed: int,
                    C: Optional[float] = None, rep0: int = 0, slack: float = 3.0,
                    workers: int = 1) -> StepTailReport:
    """P[(H - H_script) / sigma > u] for step data against the template.

    Without ``C`` the constant is fitted on replicates rep0..rep0+N-1 and the
    check runs on the disjoint block rep0+N..rep0+2N-1.
    """
    const = step_constants(x, y, params)
    scale = (y * (1 - params.kappa)) ** (1.0 / 3.0)
    spec = height_observable(params, BoundarySpec.step(), x, y, const.H_script, const.sigma)
    train = None
    mode = "supplied"
    start = rep0
    if C is None:
        train = estimate_tail(spec, u_list, N, seed, rep0, "upper", workers=workers)
        C = _fit_step_C(train, scale)
        mode = "fitted"
        start = rep0 + N
    valid = estimate_tail(spec, u_list, N, seed, start, "upper", workers=workers)
    bound = step_template(u_list, C, scale)
    ok = valid.p_hat <= bound + slack * valid.stderr
    return StepTailReport((x, y), const.H_script, const.sigma, float(C), mode, train, valid, bound, ok)


# ---- large-deviation height check --------------------------------------------

def ld_height_bound(k, n: int, delta1: float) -> np.ndarray:
    k = np.asarray(k, float)
    return 2.0 * np.exp(-k * (1.0 + np.log(k / (n * delta1))))


@dataclass(frozen=True)
class LDReport:
    curve: TailCurve
    bound: np.ndarray

    @property
    def passed(self) -> bool:
        return bool(np.all(self.curve.check_bound(self.bound)))


def ld_height_check(params: ModelParams, boundary: BoundarySpec, n: int, k_list: Sequence[int], N: int,
                    seed: int, rep0: int = 0) -> LDReport:
    """P[|H(n, n)| > k] against 2 exp(-k (1 + log(k / (n delta1))))."""
    d1 = params.delta1
    if n * d1 < 1:
        raise ValueError("need n * delta1 >= 1")
    if min(k_list) < 10 * n * d1:
        raise ValueError("need k >= 10 n delta1")
    spec = height_observable(params, boundary, n, n)
    curve = estimate_tail(spec, k_list, N, seed, rep0, "abs")
    return LDReport(curve, ld_height_bound(k_list, n, d1))


# ---- exact-vs-MC pmf comparison ----------------------------------------------

def pmf_chisquare(samples: np.ndarray, support: Sequence[int], probs: Sequence[float],
                  min_expected: float = 5.0) -> tuple[float, float, int]:
    """Pearson chi-square of integer samples against an exact pmf.

    Cells with small expectation are pooled into their neighbour. Returns
    (statistic, p-value, degrees of freedom).
    """
    support = np.asarray(support)
    probs = np.asarray(probs, float)
    x = np.asarray(samples)
    n = x.size
    if np.any(~np.isin(x, support)):
        return math.inf, 0.0, 0
    obs = np.array([(x == s).sum() for s in support], float)
    exp = probs * n
    o_cells, e_cells = [], []
    o_acc = e_acc = 0.0
    for o, e in zip(obs, exp):
        o_acc += o
        e_acc += e
        if e_acc >= min_expected:
            o_cells.append(o_acc)
            e_cells.append(e_acc)
            o_acc = e_acc = 0.0
    if e_acc > 0 or o_acc > 0:
        if e_cells:
            o_cells[-1] += o_acc
            e_cells[-1] += e_acc
        else:
            o_cells.append(o_acc)
            e_cells.append(e_acc)
    if len(e_cells) < 2:
        return 0.0, 1.0, 0
    e = np.array(e_cells)
    o = np.array(o_cells)
    e *= o.sum() / e.sum()
    res = sps.chisquare(o, e)
    return float(res.statistic), float(res.pvalue), len(e_cells) - 1


def two_sample_chisquare(a, b, min_count: int = 10) -> tuple[float, float, int]:
    """Homogeneity test of two categorical samples.

    Rows of 2-d inputs are categories. Categories with fewer than
    ``min_count`` pooled observations are merged into one cell. Returns
    (statistic, p-value, degrees of freedom).
    """
    a = np.asarray(a)
    b = np.asarray(b)
    both = np.concatenate([a, b], axis=0)
    if both.ndim == 1:
        both = both[:, None]
    _, inv = np.unique(both, axis=0, return_inverse=True)
    inv = inv.ravel()
    ca = np.bincount(inv[:len(a)], minlength=inv.max() + 1)
    cb = np.bincount(inv[len(a):], minlength=inv.max() + 1)
    tot = ca + cb
    big = tot >= min_count
    rows_a = list(ca[big]) + ([ca[~big].sum()] if (~big).any() else [])
    rows_b = list(cb[big]) + ([cb[~big].sum()] if (~big).any() else [])
    table = np.array([rows_a, rows_b], float)
    table = table[:, table.sum(axis=0) > 0]
    if table.shape[1] < 2:
        return 0.0, 1.0, 0
    res = sps.chi2_contingency(table, correction=False)
    return float(res.statistic), float(res.pvalue), int(res.dof)
