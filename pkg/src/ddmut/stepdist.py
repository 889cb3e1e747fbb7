"""Step-size distributions and the black-box distance transform.

Known-structure runs draw integer steps from a binomial and target raw
distances. Black-box runs first squash the metric through
``1 - exp(-(gamma * d)^2)`` so all reachable distances land in a unit-scale
interval, then draw real-valued steps from the maximum-entropy density with a
prescribed mean on that interval. The transform parameters (the epsilon pair
and gamma) are estimated once per run by growing and shrinking distance
chains around a random anchor.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from .core import Budget, Metric, RngStream, as_cardinalities
from .umda import UmdaConfig, umda_run

__all__ = [
    "DegenerateMetricError",
    "EpsilonScanError",
    "transform_distance",
    "solve_rate",
    "log_normalizer",
    "BinomialStepDist",
    "MaxEntropyStepDist",
    "update_mean",
    "TransformParams",
    "estimate_transform_params",
]

EPS_SCAN_STEP = 1e-4
EPS_FLOOR = 1e-300  # keeps log(eps2) finite when the distance spread is extreme


class DegenerateMetricError(RuntimeError):
    """The metric offers no usable spread of distances around the anchor."""


class EpsilonScanError(RuntimeError):
    """No epsilon pair with eps2 <= eps1 was found within the scan range."""


def transform_distance(d, gamma: float):
    """Squash a raw distance into [0, 1) via ``1 - exp(-(gamma * d)^2)``.

    Strictly increasing in d, exactly 0 only at d = 0. Accepts scalars or
    arrays.
    """
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    return -np.expm1(-np.square(gamma * np.asarray(d, dtype=np.float64)))


def _canonical_residual(r: float, m: float) -> float:
    # Mean condition for the unit-interval exponential density, written so it
    # stays finite for very negative r (exp underflows to zero harmlessly).
    e = math.exp(r)
    return e * (r - 1.0) + 1.0 - r * m * (e - 1.0)


def solve_rate(mean: float, lo: float = 0.0, hi: float = 1.0, *, tol: float = 1e-12, max_iter: int = 200) -> float:
    """Exponential tilt of the max-entropy density on [lo, hi] with this mean.

    Only means strictly below the interval midpoint are supported; the
    returned rate is strictly negative. For the unit interval the root lies
    in [-1/mean, 0). Solved by bisection on a rescaled unit interval.
    """
    width = hi - lo
    if width <= 0:
        raise ValueError("interval is empty")
    m = (mean - lo) / width
    if not 0.0 < m < 0.5:
        raise ValueError("mean must lie strictly between lo and the interval midpoint")
    limit = max(1e6, 10.0 / m)
    a, b = -limit, 0.0
    if _canonical_residual(a, m) >= 0.0:
        raise ValueError("no sign change in the rate bracket")
    for _ in range(max_iter):
        if b - a <= tol:
            break
        mid = 0.5 * (a + b)
        if _canonical_residual(mid, m) < 0.0:
            a = mid
        else:
            b = mid
    return 0.5 * (a + b) / width


def log_normalizer(rate: float, lo: float, hi: float) -> float:
    """Log prefactor making ``exp(log_norm + rate * x)`` integrate to 1 on [lo, hi]."""
    width = hi - lo
    if width <= 0:
        raise ValueError("interval is empty")
    scaled = rate * width
    if abs(scaled) < 1e-12:
        return -math.log(width)
    return math.log(abs(rate)) - math.log(abs(math.expm1(scaled))) - rate * lo


@dataclass(frozen=True)
class BinomialStepDist:
    """Integer step sizes drawn from Binomial(trials, prob). May produce 0."""

    trials: int
    prob: float

    def __post_init__(self) -> None:
        if self.trials < 1 or not 0.0 < self.prob <= 1.0:
            raise ValueError("need trials >= 1 and prob in (0, 1]")

    @property
    def mean(self) -> float:
        return self.trials * self.prob

    def sample(self, rng: RngStream) -> float:
        return float(rng.binomial(self.trials, self.prob))


@dataclass(frozen=True)
class MaxEntropyStepDist:
    """Maximum-entropy density ``exp(log_norm + rate * x)`` on [lo, hi].

    Among densities on the interval with the given mean this one has the
    largest differential entropy. The mean must sit strictly below the
    interval midpoint, which forces a negative rate; as the mean approaches
    the midpoint the density flattens to uniform.
    """

    lo: float
    hi: float
    mean: float
    rate: float
    log_norm: float

    @classmethod
    def from_mean(cls, lo: float, hi: float, mean: float) -> "MaxEntropyStepDist":
        width = hi - lo
        if width < 1e-6:
            # Degenerate support: behave as a point mass at the midpoint.
            warnings.warn("step interval is degenerate, using a point distribution")
            mid = 0.5 * (lo + hi)
            return cls(lo, hi, mid, 0.0, 0.0)
        rate = solve_rate(mean, lo, hi)
        if abs(rate * width) < 1e-12:
            rate = 0.0
        return cls(lo, hi, mean, rate, log_normalizer(rate, lo, hi))

    def pdf(self, x):
        x = np.asarray(x, dtype=np.float64)
        inside = (x >= self.lo) & (x <= self.hi)
        return np.where(inside, np.exp(self.log_norm + self.rate * x), 0.0)

    def ppf(self, u):
        """Inverse CDF; u in [0, 1] maps onto [lo, hi]."""
        u = np.asarray(u, dtype=np.float64)
        width = self.hi - self.lo
        scaled = self.rate * width
        if abs(scaled) < 1e-12:
            out = self.lo + u * width
        else:
            out = self.lo + np.log1p(u * np.expm1(scaled)) / self.rate
        return float(out) if out.ndim == 0 else out

    def sample(self, rng: RngStream) -> float:
        return float(self.ppf(rng.random()))

    def entropy(self) -> float:
        # H = -E[log p] = -(log_norm + rate * mean)
        return -(self.log_norm + self.rate * self.mean)

    def with_mean(self, mean: float) -> "MaxEntropyStepDist":
        return MaxEntropyStepDist.from_mean(self.lo, self.hi, mean)


def update_mean(
    dist: MaxEntropyStepDist,
    success: bool,
    up_factor: float = 1.001,
    down_factor: float = 0.999,
) -> MaxEntropyStepDist:
    """Multiplicative mean control: grow on success, shrink on failure.

    The new mean is clamped to the solvable range, a hair inside
    (lo, (lo + hi) / 2), before the density is re-solved.
    """
    if not (up_factor > 1.0 > down_factor > 0.0):
        raise ValueError("need up_factor > 1 > down_factor > 0")
    mean = dist.mean * (up_factor if success else down_factor)
    delta = 1e-6 * (dist.hi - dist.lo)
    mean = min(max(mean, dist.lo + delta), 0.5 * (dist.lo + dist.hi) - delta)
    return dist.with_mean(mean)


@dataclass(frozen=True)
class TransformParams:
    """Calibrated distance-transform parameters.

    eps1 bounds the transformed value of the smallest useful distance from
    above, eps2 bounds the distance of the largest transformed value from 1.
    d_min and d_max are the estimated extreme distances that produced them.
    """

    eps1: float
    eps2: float
    gamma: float
    d_min: float
    d_max: float

    def __post_init__(self) -> None:
        if not 0.0 < self.eps2 <= self.eps1 <= 1e-2:
            raise ValueError("need 0 < eps2 <= eps1 <= 1e-2")
        if not 0.0 < self.d_min < self.d_max:
            raise ValueError("need 0 < d_min < d_max")
        if self.gamma <= 0.0:
            raise ValueError("gamma must be positive")

    @property
    def step_interval(self) -> Tuple[float, float]:
        """Support of the transformed step distribution."""
        return (self.eps1, 1.0 - self.eps2)


def _distance_chain(
    metric: Metric,
    cardinalities: np.ndarray,
    anchor: np.ndarray,
    inner: UmdaConfig,
    rng: RngStream,
    chain_len: int,
    grow: float,
    shrink: float,
    budget: Optional[Budget],
) -> Tuple[float, float, List[float], List[float]]:
    """Estimate the smallest and largest useful distances around the anchor.

    Grows an ascending chain where each link multiplies the distance by at
    least ``grow``, then a descending chain where each link divides it by at
    least ``shrink``. A link that cannot meet its target ends its chain, and
    whatever that final search saw still feeds the estimates.
    """
    cards = as_cardinalities(cardinalities)
    xv = np.asarray(getattr(anchor, "values", anchor), dtype=np.int64)

    def distances(rows: np.ndarray) -> np.ndarray:
        if budget is not None:
            budget.add_distance(rows.shape[0])
        return metric.dist_batch(xv, rows)

    d0 = 0.0
    for _ in range(1000):
        z = rng.integers(0, cards)
        d0 = float(metric.dist_values(xv, z))
        if budget is not None:
            budget.add_distance(1)
        if d0 > 0.0:
            break
    else:
        raise DegenerateMetricError("no point at positive distance from the anchor")

    up = [d0]
    d_max = d0
    d_prev = d0
    for _ in range(chain_len):
        target = grow * d_prev

        def ascend(rows: np.ndarray, target=target) -> np.ndarray:
            return distances(rows) - target

        cfg = UmdaConfig(inner.mu, inner.lam, inner.budget, stop=lambda _v, val: val >= 0.0)
        res = umda_run(None, cards, cfg, rng, batch_objective=ascend)
        found = res.best_value + target
        d_max = max(d_max, found)
        if res.best_value >= 0.0:
            d_prev = found
            up.append(found)
        else:
            break

    down = [d0]
    d_min = d0
    d_prev = d0
    for _ in range(chain_len):
        target = d_prev / shrink

        def descend(rows: np.ndarray, target=target) -> np.ndarray:
            d = distances(rows)
            vals = target - d
            vals[d == 0.0] = -math.inf  # never step onto the anchor's level
            return vals

        cfg = UmdaConfig(inner.mu, inner.lam, inner.budget, stop=lambda _v, val: val >= 0.0)
        res = umda_run(None, cards, cfg, rng, batch_objective=descend)
        if not math.isfinite(res.best_value):
            break
        found = target - res.best_value
        if 0.0 < found < d_min:
            d_min = found
        if res.best_value >= 0.0:
            d_prev = found
            down.append(found)
        else:
            break

    return d_min, d_max, up, down


def estimate_transform_params(
    metric: Metric,
    cardinalities: np.ndarray,
    anchor: np.ndarray,
    inner: UmdaConfig,
    rng: RngStream,
    *,
    chain_len: int = 10,
    grow: float = 2.0,
    shrink: float = 1.2,
    scan_steps: int = 100,
    budget: Optional[Budget] = None,
) -> TransformParams:
    """One-time calibration of the distance transform around a random anchor.

    After the chains produce distance estimates d_min < d_max, scans
    eps1 = 1e-4 * j for the first j whose induced eps2 satisfies
    eps2 <= eps1, then centers gamma between the two admissible bounds so the
    transform maps d_min at or below eps1 and d_max at or above 1 - eps2.
    """
    d_min, d_max, _, _ = _distance_chain(
        metric, cardinalities, anchor, inner, rng, chain_len, grow, shrink, budget
    )
    if not d_max > d_min:
        raise DegenerateMetricError(
            f"distance chain collapsed: d_min == d_max == {d_min!r}"
        )
    ratio_sq = (d_max / d_min) ** 2
    eps1 = eps2 = 0.0
    for j in range(1, scan_steps + 1):
        eps1 = j / 10000.0  # grid of EPS_SCAN_STEP without cumulative rounding
        eps2 = math.exp(ratio_sq * math.log1p(-eps1))
        if eps2 <= eps1:
            break
    else:
        raise EpsilonScanError(
            f"no eps2 <= eps1 within {scan_steps} scan steps (distance ratio {math.sqrt(ratio_sq):.3g})"
        )
    eps2 = max(eps2, EPS_FLOOR)
    gamma_lo = math.sqrt(-math.log(eps2)) / d_max
    gamma_hi = math.sqrt(-math.log1p(-eps1)) / d_min
    gamma = 0.5 * (gamma_lo + gamma_hi)
    return TransformParams(eps1, eps2, gamma, d_min, d_max)
