"""Closed-form equilibrium quantities for the stationary model."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from .model import ModelParams


@dataclass(frozen=True)
class OddsPair:
    b: float
    beta: float

    @classmethod
    def from_b(cls, b: float) -> "OddsPair":
        if not 0.0 <= b < 1.0:
            raise ValueError(f"density {b} must lie in [0,1)")
        return cls(b, b / (1.0 - b))

    @classmethod
    def from_beta(cls, beta: float) -> "OddsPair":
        if beta < 0:
            raise ValueError("odds must be nonnegative")
        return cls(beta / (1.0 + beta), beta)


@dataclass(frozen=True)
class StepConstants:
    H_script: float
    sigma: float
    sigma3: float


@dataclass(frozen=True)
class AsepStepConstants:
    J_script: float
    nu: float
    nu3: float


def _require_prob_open(name: str, p: float) -> None:
    if not 0.0 < p < 1.0:
        raise ValueError(f"{name}={p} must lie in (0,1)")


def stationary_pair(b2: float, params: ModelParams) -> float:
    """b1 with odds(b1) = kappa * odds(b2)."""
    _require_prob_open("b2", b2)
    if not (0.0 < params.kappa < math.inf):
        raise ValueError(f"kappa={params.kappa} must be positive and finite")
    beta1 = params.kappa * (b2 / (1.0 - b2))
    return beta1 / (1.0 + beta1)


def mgf_epsilon(a1: float, a2: float, params: ModelParams) -> float:
    """The tilt eps with exp(eps) * odds(a1) = kappa * odds(a2)."""
    return math.log(params.kappa) + math.log(a2) - math.log1p(-a2) - math.log(a1) + math.log1p(-a1)


def rains_ejs_mgf(a1: float, a2: float, params: ModelParams, x: int, y: int) -> tuple[float, float]:
    """Return (eps, log E[exp(eps * H(x, y))]) for (a1, a2) Bernoulli entries."""
    _require_prob_open("a1", a1)
    _require_prob_open("a2", a2)
    if not (0.0 < params.delta1 < 1.0 and 0.0 < params.delta2 < 1.0):
        raise ValueError("vertex probabilities must lie in (0,1)")
    eps = mgf_epsilon(a1, a2, params)
    log_mgf = y * math.log1p(a1 * math.expm1(eps)) + x * math.log1p(a2 * math.expm1(-eps))
    return eps, log_mgf


def expected_height(b1: float, b2: float, x: float, y: float) -> float:
    return y * b1 - x * b2


def x0_of_y(y: float, beta1: float, params: ModelParams) -> float:
    k = params.kappa
    return y * k * ((1.0 + beta1 / k) / (1.0 + beta1)) ** 2


def y0_of_x(x: float, beta2: float, params: ModelParams) -> float:
    k = params.kappa
    return x / k * ((1.0 + k * beta2) / (1.0 + beta2)) ** 2


def invert_beta(x1: float, y: float, params: ModelParams, tol: float = 1e-12) -> float:
    """Odds beta with x0_of_y(y, beta) == x1."""
    k = params.kappa
    if not 0.0 < k < 1.0:
        raise ValueError(f"kappa={k} must lie in (0,1)")
    lo_x, hi_x = y * k, y / k
    if not lo_x < x1 < hi_x:
        raise ValueError(f"x1={x1} outside ({lo_x}, {hi_x})")
    num = math.sqrt(x1) - math.sqrt(k * y)
    den = math.sqrt(y / k) - math.sqrt(x1)
    beta = num / den
    if beta > 0 and math.isfinite(beta) and abs(x0_of_y(y, beta, params) - x1) <= tol * x1:
        return beta
    return _bisect_beta(x1, y, params, tol)


def _bisect_beta(x1: float, y: float, params: ModelParams, tol: float) -> float:
    # x0_of_y is increasing in beta; grow the bracket then bisect
    lo, hi = 0.0, 1.0
    while x0_of_y(y, hi, params) < x1:
        hi *= 2.0
        if hi > 1e300:
            raise ArithmeticError("bracket search diverged")
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        if x0_of_y(y, mid, params) < x1:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol * max(hi, 1e-300):
            break
    return 0.5 * (lo + hi)


def characteristic_point(mode: str, value: float, odds: Optional[OddsPair], params: ModelParams,
                         y: Optional[float] = None) -> float:
    if mode == "x0_of_y":
        return x0_of_y(value, odds.beta, params)
    if mode == "y0_of_x":
        return y0_of_x(value, odds.beta, params)
    if mode == "invert_beta":
        if y is None:
            raise ValueError("invert_beta needs y")
        return invert_beta(value, y, params)
    raise ValueError(f"unknown mode {mode!r}")


def admissible(x: float, y: float, params: ModelParams, frak_a: float = 0.0) -> bool:
    k = params.kappa
    r = y / x
    return k + frak_a * (1.0 - k) <= r <= (1.0 - (1.0 - k) * frak_a) / k


def limit_shape(x: float, y: float, params: ModelParams) -> float:
    """Deterministic first-order value of the step-data height at (x, y)."""
    params.require_open()
    d1, d2 = params.delta1, params.delta2
    if x < 0 or y < 0:
        raise ValueError("coordinates must be nonnegative")
    return -((math.sqrt(y * (1.0 - d1)) - math.sqrt(x * (1.0 - d2))) ** 2) / (d1 - d2)


def step_constants(x: float, y: float, params: ModelParams, frak_a: float = 0.0) -> StepConstants:
    """Limit shape value and fluctuation scale of the step-data height at (x, y)."""
    params.require_open()
    k = params.kappa
    if x <= 0 or y <= 0 or not admissible(x, y, params, frak_a):
        raise ValueError(f"direction y/x={y / x if x else math.inf} not admissible for kappa={k}")
    H = limit_shape(x, y, params)
    sigma3 = (math.sqrt(x * y) / (k * (k ** -0.5 - k ** 0.5) ** 3)
              * (1.0 - math.sqrt(y * k / x)) ** 2 * (1.0 - math.sqrt(x * k / y)) ** 2)
    if not sigma3 > 0:
        raise ValueError("degenerate fluctuation scale at this direction")
    return StepConstants(H, sigma3 ** (1.0 / 3.0), sigma3)


def asep_step_constants(x: float, t: float, L: float, R: float) -> AsepStepConstants:
    if not L > R >= 0:
        raise ValueError("need L > R >= 0")
    d = L - R
    if t <= 0 or abs(x) > d * t:
        raise ValueError(f"|x|={abs(x)} exceeds (L-R)t={d * t}")
    J = -t / (4.0 * d) * (x / t - d) ** 2
    nu3 = t / (16.0 * d ** 3) * (d * d - (x / t) ** 2) ** 2
    return AsepStepConstants(J, nu3 ** (1.0 / 3.0), nu3)
