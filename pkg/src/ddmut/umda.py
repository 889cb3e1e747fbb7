"""Univariate marginal EDA used as the inner search engine.

Each generation samples lambda genomes from independent per-component
categorical marginals, keeps the mu best, and refits the marginals to the
survivors with probabilities clamped away from 0 and 1. The same routine
serves as a standalone solver and as the inner optimizer behind the
distance-driven operators, where the objective is a distance gap rather
than a fitness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .core import Genome, RngStream, as_cardinalities

__all__ = ["UmdaConfig", "UmdaResult", "MarginalModel", "umda_run"]


@dataclass
class UmdaConfig:
    """Inner search settings.

    mu: survivors per generation, lam: samples per generation, budget: total
    objective evaluations. stop, when given, is checked on the best individual
    after each generation and ends the run early.
    """

    mu: int
    lam: int
    budget: int
    stop: Optional[Callable[[np.ndarray, float], bool]] = None

    def __post_init__(self) -> None:
        if not 1 <= self.mu <= self.lam:
            raise ValueError("need 1 <= mu <= lam")
        if self.budget < 0:
            raise ValueError("budget must be non-negative")


@dataclass
class UmdaResult:
    best: Genome
    best_value: float
    evaluations: int
    generations: int


class MarginalModel:
    """Independent categorical marginals, one distribution per component.

    Probabilities are kept inside [1/(n*c_i), 1 - (c_i - 1)/(n*c_i)] so no
    value ever becomes unreachable or forced.
    """

    def __init__(self, cardinalities: np.ndarray, probs: Optional[np.ndarray] = None):
        self.cardinalities = as_cardinalities(cardinalities)
        n = self.cardinalities.size
        cmax = int(self.cardinalities.max())
        cards_f = self.cardinalities.astype(np.float64)
        self.margin = 1.0 / (n * cards_f)
        self.upper = 1.0 - self.margin * (cards_f - 1.0)
        self._valid = np.arange(cmax)[None, :] < self.cardinalities[:, None]
        if probs is None:
            probs = np.where(self._valid, 1.0 / cards_f[:, None], 0.0)
        self.probs = probs
        self._binary = bool(np.all(self.cardinalities == 2))
        self._cdf = None if self._binary else np.cumsum(self.probs, axis=1)

    @classmethod
    def uniform(cls, cardinalities: np.ndarray) -> "MarginalModel":
        return cls(cardinalities)

    @classmethod
    def anchored(cls, cardinalities: np.ndarray, anchor: np.ndarray) -> "MarginalModel":
        """Half the mass on the anchor's value, the rest spread uniformly."""
        model = cls(cardinalities)
        probs = np.where(model._valid, 0.5 / (model.cardinalities[:, None] - 1.0), 0.0)
        probs[np.arange(probs.shape[0]), anchor] = 0.5
        model.probs = probs
        if not model._binary:
            model._cdf = np.cumsum(probs, axis=1)
        return model

    def sample(self, m: int, rng: RngStream) -> np.ndarray:
        n = self.cardinalities.size
        u = rng.random((m, n))
        if self._binary:
            return (u < self.probs[:, 1][None, :]).astype(np.int64)
        return (u[:, :, None] >= self._cdf[None, :, :]).sum(axis=2, dtype=np.int64)

    def update(self, selected: np.ndarray) -> None:
        m = selected.shape[0]
        n = self.cardinalities.size
        if self._binary:
            ones = selected.sum(axis=0) / m
            p1 = np.clip(ones, self.margin, self.upper)
            self.probs[:, 1] = p1
            self.probs[:, 0] = 1.0 - p1
            return
        cmax = self.probs.shape[1]
        flat = selected + np.arange(n, dtype=np.int64)[None, :] * cmax
        counts = np.bincount(flat.ravel(), minlength=n * cmax).reshape(n, cmax)
        p = counts / m
        lo = self.margin[:, None]
        hi = self.upper[:, None]
        # Clip-and-renormalize until stable, finishing on a clip so the bounds
        # hold exactly; the row sums then stay within rounding of one.
        for _ in range(100):
            p = np.clip(p, lo, hi)
            p = np.where(self._valid, p, 0.0)
            sums = p.sum(axis=1, keepdims=True)
            if np.all(np.abs(sums - 1.0) < 1e-13):
                break
            p = p / sums
        p = np.where(self._valid, np.clip(p, lo, hi), 0.0)
        self.probs = p
        self._cdf = np.cumsum(p, axis=1)


def umda_run(
    objective: Optional[Callable[[Genome], float]],
    cardinalities: np.ndarray,
    config: UmdaConfig,
    rng: RngStream,
    *,
    batch_objective: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    anchor: Optional[np.ndarray] = None,
    on_generation: Optional[Callable[[int, "MarginalModel", np.ndarray, float, int], None]] = None,
) -> UmdaResult:
    """Maximize an objective with the marginal EDA.

    ``batch_objective``, when provided, receives the whole (m, n) sample block
    and must return an (m,) value array; otherwise ``objective`` is called per
    genome. With budget 0 the result carries an unevaluated uniform random
    genome flagged with value -inf. A partial final generation is sampled when
    the remaining budget is smaller than lam.
    """
    cards = as_cardinalities(cardinalities)
    if config.budget <= 0:
        values = rng.integers(0, cards)
        return UmdaResult(Genome(values, cards), -math.inf, 0, 0)

    if batch_objective is None:
        if objective is None:
            raise ValueError("either objective or batch_objective is required")

        def batch_objective(rows: np.ndarray) -> np.ndarray:  # noqa: F811
            return np.array([objective(Genome(r, cards)) for r in rows], dtype=np.float64)

    model = MarginalModel.uniform(cards) if anchor is None else MarginalModel.anchored(cards, anchor)
    best_values: Optional[np.ndarray] = None
    best_value = -math.inf
    evals = 0
    gen = 0
    while evals < config.budget:
        m = min(config.lam, config.budget - evals)
        rows = model.sample(m, rng)
        vals = np.asarray(batch_objective(rows), dtype=np.float64)
        evals += m
        gen += 1
        # stable sort: on ties the earlier-sampled individual wins
        order = np.argsort(-vals, kind="stable")
        top = order[0]
        if vals[top] > best_value:
            best_value = float(vals[top])
            best_values = rows[top].copy()
        model.update(rows[order[: min(config.mu, m)]])
        if on_generation is not None:
            on_generation(gen, model, best_values, best_value, evals)
        if config.stop is not None and best_values is not None and config.stop(best_values, best_value):
            break
    if best_values is None:
        best_values = rng.integers(0, cards)
        best_value = -math.inf
    return UmdaResult(Genome(best_values, cards), best_value, evals, gen)
