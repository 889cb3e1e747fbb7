"""Benchmark problems and the strong-causal distances that go with them.

Two families are shipped. The binary family is OneMax composed with a level
permutation that reverses blocks of objective values, which makes the
landscape rugged in Hamming space while a distance on permuted levels stays
perfectly informative. The integer family applies one value permutation to
every component of a smooth base function, which scrambles the raw grid
geometry; the matching distance undoes the permutation before measuring
Euclidean length, so fitness differences stay bounded by distance.
"""

from __future__ import annotations

from typing import Optional, Union

import numpy as np

from .core import Genome, Metric, Problem, RngStream, as_cardinalities

__all__ = [
    "onemax",
    "OneMax",
    "ruggedness_perm",
    "ruggedness_eval",
    "ruggedness_dist",
    "Ruggedness",
    "RuggednessDistance",
    "random_permutation",
    "permuted_l2_dist",
    "PermutedL2Distance",
    "PermutedIntegerProblem",
    "make_integer_problem",
    "INTEGER_BASES",
]


def _require_binary(x: Genome) -> None:
    if not x.is_binary:
        raise ValueError("expected a binary genome")


def onemax(x: Genome) -> int:
    """Number of ones in a binary genome."""
    _require_binary(x)
    return int(x.values.sum())


class OneMax(Problem):
    """Count of ones; the all-ones string is optimal."""

    def __init__(self, n: int):
        if n < 1:
            raise ValueError("dimension must be positive")
        self.cardinalities = as_cardinalities(2, n)
        self.optimum_value = float(n)

    def evaluate_batch(self, values: np.ndarray) -> np.ndarray:
        return values.sum(axis=1).astype(np.float64)

    def natural_metric(self) -> "RuggednessDistance":
        return RuggednessDistance(self.n, 1)


def ruggedness_perm(level: int, n: int, v: int) -> int:
    """Image of one objective level under the block-reversal permutation.

    Levels {0..n} are split into blocks of v consecutive values; each complete
    block is reversed in place, and the shorter tail block (which always
    contains level n) is reversed within itself. v=1 is the identity.
    """
    if n < 1 or v < 1:
        raise ValueError("n and v must be positive")
    if not 0 <= level <= n:
        raise ValueError("level outside {0..n}")
    block = level // v
    if block < n // v:
        lo = block * v
        return 2 * lo + v - 1 - level
    lo = (n // v) * v
    return lo + n - level


def _ruggedness_table(n: int, v: int) -> np.ndarray:
    table = np.array([ruggedness_perm(level, n, v) for level in range(n + 1)], dtype=np.int64)
    assert np.array_equal(np.sort(table), np.arange(n + 1))
    return table


class Ruggedness(Problem):
    """OneMax seen through the block-reversal level permutation.

    Fitness of x is the permuted image of its number of ones. The permutation
    is a bijection on {0..n}, so the optimum value is n for every v.
    """

    def __init__(self, n: int, v: int):
        self.cardinalities = as_cardinalities(2, n)
        self.v = int(v)
        self.level_map = _ruggedness_table(n, v)
        self.optimum_value = float(n)

    def evaluate_batch(self, values: np.ndarray) -> np.ndarray:
        return self.level_map[values.sum(axis=1)].astype(np.float64)

    def natural_metric(self) -> "RuggednessDistance":
        return RuggednessDistance(self.n, self.v)


def ruggedness_eval(x: Genome, v: int) -> int:
    """Rugged fitness of one binary genome."""
    _require_binary(x)
    return ruggedness_perm(int(x.values.sum()), x.n, v)


class RuggednessDistance(Metric):
    """Absolute difference of permuted levels.

    A pseudo-metric: distinct genomes on the same level are at distance zero.
    With v=1 it degenerates to the plain level distance |ones(x) - ones(y)|.
    Fitness differences of the matching problem equal this distance exactly.
    """

    def __init__(self, n: int, v: int):
        self.n = int(n)
        self.v = int(v)
        self.level_map = _ruggedness_table(n, v)

    def dist_values(self, x: np.ndarray, y: np.ndarray) -> float:
        return float(abs(self.level_map[int(x.sum())] - self.level_map[int(y.sum())]))

    def dist_batch(self, x: np.ndarray, rows: np.ndarray) -> np.ndarray:
        rx = self.level_map[int(x.sum())]
        return np.abs(self.level_map[rows.sum(axis=1)] - rx).astype(np.float64)


def ruggedness_dist(x: Genome, y: Genome, v: int) -> float:
    _require_binary(x)
    _require_binary(y)
    if x.n != y.n:
        raise ValueError("genomes must share a dimension")
    return RuggednessDistance(x.n, v).dist(x, y)


def random_permutation(c: int, rng: RngStream) -> np.ndarray:
    """Uniform random permutation of {0..c-1}."""
    if c < 1:
        raise ValueError("permutation size must be positive")
    return rng.permutation(c).astype(np.int64)


def _inverse_permutation(perm: np.ndarray) -> np.ndarray:
    inv = np.empty_like(perm)
    inv[perm] = np.arange(perm.size, dtype=np.int64)
    return inv


class PermutedL2Distance(Metric):
    """Euclidean distance after undoing a per-component value permutation."""

    def __init__(self, perm: np.ndarray):
        self.perm = np.asarray(perm, dtype=np.int64)
        if self.perm.ndim != 1 or not np.array_equal(np.sort(self.perm), np.arange(self.perm.size)):
            raise ValueError("not a permutation of {0..c-1}")
        self.inverse = _inverse_permutation(self.perm)

    def dist_values(self, x: np.ndarray, y: np.ndarray) -> float:
        d = self.inverse[x] - self.inverse[y]
        return float(np.sqrt((d * d).sum()))

    def dist_batch(self, x: np.ndarray, rows: np.ndarray) -> np.ndarray:
        d = self.inverse[rows] - self.inverse[x][None, :]
        return np.sqrt((d * d).sum(axis=1)).astype(np.float64)


def permuted_l2_dist(x: Genome, y: Genome, perm: np.ndarray) -> float:
    if x.n != y.n:
        raise ValueError("genomes must share a dimension")
    return PermutedL2Distance(perm).dist(x, y)


def _sphere(z: np.ndarray) -> np.ndarray:
    return (z * z).sum(axis=1)


def _ellipsoid(z: np.ndarray) -> np.ndarray:
    n = z.shape[1]
    exponents = 6.0 * np.arange(n) / max(n - 1, 1)
    return (10.0 ** exponents * z * z).sum(axis=1)


def _rastrigin(z: np.ndarray) -> np.ndarray:
    n = z.shape[1]
    return 10.0 * n + (z * z - 10.0 * np.cos(2.0 * np.pi * z)).sum(axis=1)


def _sharp_ridge(z: np.ndarray) -> np.ndarray:
    head = z[:, 0] ** 2
    tail = (z[:, 1:] ** 2).sum(axis=1)
    return head + 100.0 * np.sqrt(tail)


INTEGER_BASES = {
    "sphere": _sphere,
    "ellipsoid": _ellipsoid,
    "rastrigin": _rastrigin,
    "sharp_ridge": _sharp_ridge,
}


class PermutedIntegerProblem(Problem):
    """A smooth base function hidden behind one value permutation per component.

    Raw component values are mapped through the inverse permutation, shifted so
    a seeded grid point becomes the optimum, and fed to the base function.
    Fitness is the negated base value, so the optimum fitness is 0 and fitness
    equals negative regret.
    """

    def __init__(self, base: str, n: int, c: int, perm: np.ndarray, optimum_grid: np.ndarray):
        if base not in INTEGER_BASES:
            raise ValueError(f"unknown base function {base!r}")
        self.base = base
        self._base_fn = INTEGER_BASES[base]
        self.cardinalities = as_cardinalities(c, n)
        self.perm = np.asarray(perm, dtype=np.int64)
        if self.perm.shape != (c,) or not np.array_equal(np.sort(self.perm), np.arange(c)):
            raise ValueError("permutation must cover the component cardinality")
        self.inverse = _inverse_permutation(self.perm)
        self.optimum_grid = np.asarray(optimum_grid, dtype=np.int64)
        if self.optimum_grid.shape != (n,) or np.any(self.optimum_grid < 0) or np.any(self.optimum_grid >= c):
            raise ValueError("optimum grid point outside the value range")
        self.optimum_value = 0.0

    @property
    def optimum_values(self) -> np.ndarray:
        """Genotype whose unpermuted image is the optimum grid point."""
        return self.perm[self.optimum_grid]

    def evaluate_batch(self, values: np.ndarray) -> np.ndarray:
        z = (self.inverse[values] - self.optimum_grid[None, :]).astype(np.float64)
        return -self._base_fn(z)

    def natural_metric(self) -> PermutedL2Distance:
        return PermutedL2Distance(self.perm)


def make_integer_problem(
    base: str,
    n: int,
    c: int,
    perm: Optional[np.ndarray] = None,
    seed: Union[int, RngStream] = 0,
    permutation_seed: Optional[int] = None,
) -> PermutedIntegerProblem:
    """Build a permuted integer instance from seeds.

    ``seed`` drives the optimum location; ``permutation_seed`` (when given and
    no explicit permutation is passed) drives the value permutation.
    """
    rng = seed if isinstance(seed, RngStream) else RngStream.from_seed(int(seed), 202)
    if perm is None:
        perm_rng = rng if permutation_seed is None else RngStream.from_seed(int(permutation_seed), 101)
        perm = random_permutation(c, perm_rng)
    optimum_grid = rng.integers(0, c, size=n)
    return PermutedIntegerProblem(base, n, c, perm, optimum_grid)
