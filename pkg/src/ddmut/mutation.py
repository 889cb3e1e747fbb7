"""Mutation and crossover operators.

The distance-driven operator draws a step size, then runs the inner marginal
EDA to find a genome whose distance from the parent matches that step as
closely as possible. The classical operators (bit flips, velocity steps,
biased crossover) work directly on the genotype and serve as baselines.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import Budget, Genome, Metric, RngStream
from .stepdist import TransformParams, transform_distance
from .umda import UmdaConfig, umda_run

__all__ = [
    "DdMutationConfig",
    "dd_mutate",
    "standard_bit_mutation",
    "VelocityState",
    "velocity_mutate",
    "velocity_update",
    "biased_crossover",
]


@dataclass
class DdMutationConfig:
    """Bundle of everything a distance-driven mutation call needs.

    With ``transform`` unset the step targets the raw metric; with a
    calibrated transform the step targets the squashed distance instead.
    """

    metric: Metric
    step_dist: object
    inner: UmdaConfig
    transform: Optional[TransformParams] = None


def dd_mutate(x: Genome, cfg: DdMutationConfig, rng: RngStream, budget: Optional[Budget] = None) -> Genome:
    """Move the parent by approximately a sampled distance.

    Samples a step s, then maximizes ``-|D(x, y) - s|`` over genomes y with
    the inner EDA, where D is the raw or transformed metric. Genomes identical
    to the parent are scored -inf, so the result always differs from x in at
    least one component. The inner search ends early once the gap hits zero.
    """
    s = float(cfg.step_dist.sample(rng))
    xv = x.values
    gamma = cfg.transform.gamma if cfg.transform is not None else None

    def gap_batch(rows: np.ndarray) -> np.ndarray:
        d = cfg.metric.dist_batch(xv, rows)
        if budget is not None:
            budget.add_distance(rows.shape[0])
        if gamma is not None:
            d = transform_distance(d, gamma)
        vals = -np.abs(d - s)
        same = np.all(rows == xv[None, :], axis=1)
        if same.any():
            vals = np.where(same, -math.inf, vals)
        return vals

    inner = UmdaConfig(cfg.inner.mu, cfg.inner.lam, cfg.inner.budget, stop=lambda _v, val: val == 0.0)
    res = umda_run(None, x.cardinalities, inner, rng, batch_objective=gap_batch)
    y = res.best
    if y.same_values(x):
        # Only possible when every sampled genome equaled the parent; force a move.
        values = x.values.copy()
        i = int(rng.integers(0, x.n))
        shift = 1 + int(rng.integers(0, x.cardinalities[i] - 1))
        values[i] = (values[i] + shift) % x.cardinalities[i]
        y = Genome(values, x.cardinalities)
    return y


def _positive_binomial(n: int, p: float, rng: RngStream) -> int:
    while True:
        k = int(rng.binomial(n, p))
        if k >= 1:
            return k


def standard_bit_mutation(x: Genome, p: float, rng: RngStream) -> Genome:
    """Flip a Binomial(n, p) number of distinct positions, resampled to be >= 1."""
    if not x.is_binary:
        raise ValueError("expected a binary genome")
    if not 0.0 < p <= 1.0:
        raise ValueError("flip probability must be in (0, 1]")
    k = _positive_binomial(x.n, p, rng)
    positions = rng.choice(x.n, size=k, replace=False)
    values = x.values.copy()
    values[positions] ^= 1
    return Genome(values, x.cardinalities)


@dataclass(frozen=True)
class VelocityState:
    """Per-component step magnitudes for the adaptive integer mutation.

    Velocities live in [1, max(1, (c_i - 1) / 2)] and are multiplied by
    ``up_factor`` after a strict improvement and by ``down_factor`` otherwise.
    """

    velocities: np.ndarray
    upper: np.ndarray
    up_factor: float = 2.0
    down_factor: float = 0.5

    @classmethod
    def initial(cls, cardinalities: np.ndarray, up_factor: float = 2.0, down_factor: float = 0.5) -> "VelocityState":
        cards = np.asarray(cardinalities, dtype=np.int64)
        upper = np.maximum(1.0, (cards - 1) / 2.0)
        return cls(np.ones(cards.size, dtype=np.float64), upper, up_factor, down_factor)


def velocity_mutate(x: Genome, state: VelocityState, positions: np.ndarray, rng: RngStream) -> Genome:
    """Step the chosen components by their rounded velocity, reflecting off the walls."""
    positions = np.asarray(positions, dtype=np.int64)
    steps = np.maximum(1, np.rint(state.velocities[positions]).astype(np.int64))
    signs = 2 * rng.integers(0, 2, size=positions.size) - 1
    values = x.values.copy()
    top = x.cardinalities[positions] - 1
    moved = values[positions] + signs * steps
    moved = np.where(moved < 0, -moved, moved)
    moved = np.where(moved > top, 2 * top - moved, moved)
    values[positions] = moved
    return Genome(values, x.cardinalities)


def velocity_update(state: VelocityState, positions: np.ndarray, success: bool) -> VelocityState:
    """Scale the velocities of the mutated components and clamp to their range."""
    positions = np.asarray(positions, dtype=np.int64)
    factor = state.up_factor if success else state.down_factor
    velocities = state.velocities.copy()
    velocities[positions] = np.clip(velocities[positions] * factor, 1.0, state.upper[positions])
    return VelocityState(velocities, state.upper, state.up_factor, state.down_factor)


def biased_crossover(x: Genome, x_prime: Genome, c: float, rng: RngStream) -> Genome:
    """Each component comes from the second parent with probability c."""
    if x.n != x_prime.n:
        raise ValueError("parents must share a dimension")
    if not 0.0 <= c <= 1.0:
        raise ValueError("bias must be in [0, 1]")
    take_second = rng.random(x.n) < c
    values = np.where(take_second, x_prime.values, x.values)
    return Genome(values, x.cardinalities)
