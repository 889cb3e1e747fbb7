"""Shared domain types: genomes, problems, metrics, budgets, seeded RNG streams.

Everything downstream speaks maximization. Minimization problems are wrapped
by negating their objective before they enter the library.
"""

from __future__ import annotations

import abc
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

__all__ = [
    "Genome",
    "Problem",
    "Metric",
    "Budget",
    "BudgetExhaustedError",
    "RngStream",
    "evaluate_counted",
    "as_cardinalities",
]


class BudgetExhaustedError(RuntimeError):
    """Raised when an evaluation is requested after the fitness cap is reached."""


def as_cardinalities(cardinalities: Union[int, Sequence[int], np.ndarray], n: Optional[int] = None) -> np.ndarray:
    """Normalize a cardinality spec to an int64 vector.

    A scalar means one common cardinality for all ``n`` components.
    """
    if np.isscalar(cardinalities):
        if n is None:
            raise ValueError("scalar cardinality needs an explicit dimension")
        cards = np.full(n, int(cardinalities), dtype=np.int64)
    else:
        cards = np.asarray(cardinalities, dtype=np.int64)
    if cards.ndim != 1 or cards.size == 0:
        raise ValueError("cardinalities must be a non-empty vector")
    if np.any(cards < 2):
        raise ValueError("every component needs at least two values")
    return cards


@dataclass(frozen=True, eq=False)
class Genome:
    """Integer vector with per-component cardinalities.

    Component ``i`` takes values in ``{0, ..., cardinalities[i] - 1}``; binary
    strings are the all-cardinality-2 case. Instances are immutable, the value
    array is frozen on construction.
    """

    values: np.ndarray
    cardinalities: np.ndarray

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=np.int64)
        cards = np.asarray(self.cardinalities, dtype=np.int64)
        if values.ndim != 1 or cards.ndim != 1:
            raise ValueError("genome values and cardinalities must be vectors")
        if values.shape != cards.shape:
            raise ValueError("genome length does not match its cardinalities")
        if values.size == 0:
            raise ValueError("genome must have at least one component")
        if np.any(cards < 2):
            raise ValueError("every component needs at least two values")
        if np.any(values < 0) or np.any(values >= cards):
            raise ValueError("component value outside its cardinality range")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "cardinalities", cards)

    @property
    def n(self) -> int:
        return int(self.values.size)

    @property
    def is_binary(self) -> bool:
        return bool(np.all(self.cardinalities == 2))

    def same_values(self, other: "Genome") -> bool:
        return bool(np.array_equal(self.values, other.values))

    def replace(self, values: np.ndarray) -> "Genome":
        return Genome(values, self.cardinalities)


class Problem(abc.ABC):
    """A fitness function over integer genomes, to be maximized.

    Subclasses set ``cardinalities`` and implement the vectorized
    ``evaluate_batch``. ``optimum_value`` is the known best fitness when the
    instance has one, else None.
    """

    cardinalities: np.ndarray
    optimum_value: Optional[float] = None

    @property
    def n(self) -> int:
        return int(self.cardinalities.size)

    @abc.abstractmethod
    def evaluate_batch(self, values: np.ndarray) -> np.ndarray:
        """Fitness of each row of an (m, n) value matrix, as an (m,) float array."""

    def evaluate_values(self, values: np.ndarray) -> float:
        return float(self.evaluate_batch(np.asarray(values, dtype=np.int64)[None, :])[0])

    def evaluate(self, genome: Genome) -> float:
        return self.evaluate_values(genome.values)

    def random_genome(self, rng: "RngStream") -> Genome:
        values = rng.integers(0, self.cardinalities)
        return Genome(values, self.cardinalities)

    def random_values(self, rng: "RngStream", m: int) -> np.ndarray:
        return rng.integers(0, self.cardinalities, size=(m, self.n))

    def natural_metric(self) -> Optional["Metric"]:
        """The distance an informed operator should use, when one exists."""
        return None


class Metric(abc.ABC):
    """Distance between genomes: non-negative, symmetric, zero on identical points.

    Implementations may be pseudo-metrics, distinct genomes can sit at
    distance zero.
    """

    @abc.abstractmethod
    def dist_values(self, x: np.ndarray, y: np.ndarray) -> float:
        ...

    def dist(self, x: Genome, y: Genome) -> float:
        return self.dist_values(x.values, y.values)

    def dist_batch(self, x: np.ndarray, rows: np.ndarray) -> np.ndarray:
        """Distances from one anchor to each row of an (m, n) matrix."""
        return np.array([self.dist_values(x, row) for row in rows], dtype=np.float64)


@dataclass
class Budget:
    """Evaluation and iteration accounting for one run.

    ``None`` caps mean unlimited. Fitness and distance evaluations are counted
    separately; distance calls never draw down the fitness cap. Exceeding a cap
    terminates the consuming loop before the next evaluation.
    """

    max_fitness_evals: Optional[int] = None
    max_iterations: Optional[int] = None
    fitness_evals: int = 0
    distance_evals: int = 0
    iterations: int = 0

    def remaining_fitness(self) -> Optional[int]:
        if self.max_fitness_evals is None:
            return None
        return max(0, self.max_fitness_evals - self.fitness_evals)

    def fitness_exhausted(self) -> bool:
        rem = self.remaining_fitness()
        return rem is not None and rem <= 0

    def iterations_exhausted(self) -> bool:
        return self.max_iterations is not None and self.iterations >= self.max_iterations

    def add_fitness(self, k: int = 1) -> None:
        self.fitness_evals += int(k)

    def add_distance(self, k: int = 1) -> None:
        self.distance_evals += int(k)


def evaluate_counted(problem: Problem, genome: Genome, budget: Budget) -> float:
    """Evaluate one genome against the budget, raising once the cap is reached."""
    if budget.fitness_exhausted():
        raise BudgetExhaustedError(
            f"fitness cap of {budget.max_fitness_evals} evaluations reached"
        )
    value = problem.evaluate(genome)
    budget.add_fitness(1)
    return value


class RngStream:
    """Seeded random stream with deterministic child-stream derivation.

    The same key always yields the same draw sequence. Child streams derived
    through the same index path are likewise reproducible, so one master seed
    fans out into independent per-run streams.
    """

    __slots__ = ("key", "generator")

    def __init__(self, key: Sequence[int]):
        self.key = tuple(int(k) for k in key)
        if not self.key:
            raise ValueError("rng key must contain at least one integer")
        self.generator = np.random.Generator(np.random.PCG64(np.random.SeedSequence(self.key)))

    @classmethod
    def from_seed(cls, *key: int) -> "RngStream":
        return cls(key)

    def child(self, *path: int) -> "RngStream":
        return RngStream(self.key + tuple(int(p) for p in path))

    def fingerprint(self) -> int:
        """Stable 64-bit digest of the key, for logging and trace files."""
        return int(np.random.SeedSequence(self.key).generate_state(1, np.uint64)[0])

    # draw helpers, all delegating to the underlying generator

    def random(self, size=None):
        return self.generator.random(size)

    def integers(self, low, high=None, size=None):
        return self.generator.integers(low, high, size=size)

    def binomial(self, n, p, size=None):
        return self.generator.binomial(n, p, size=size)

    def permutation(self, x):
        return self.generator.permutation(x)

    def choice(self, a, size=None, replace=True):
        return self.generator.choice(a, size=size, replace=replace)

    def shuffle(self, x) -> None:
        self.generator.shuffle(x)
