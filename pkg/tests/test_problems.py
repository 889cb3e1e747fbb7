import numpy as np
import pytest

from ddmut.core import Genome, RngStream
from ddmut.problems import (
    INTEGER_BASES,
    OneMax,
    PermutedIntegerProblem,
    PermutedL2Distance,
    Ruggedness,
    RuggednessDistance,
    make_integer_problem,
    onemax,
    permuted_l2_dist,
    random_permutation,
    ruggedness_dist,
    ruggedness_eval,
    ruggedness_perm,
)


def _genome(bits):
    values = np.asarray(bits, dtype=np.int64)
    return Genome(values, np.full(values.size, 2, dtype=np.int64))


def test_onemax_counts_ones():
    assert onemax(_genome([1, 0, 1, 1])) == 3
    problem = OneMax(6)
    assert problem.optimum_value == 6.0
    batch = np.array([[0, 0, 0, 0, 0, 0], [1, 1, 1, 0, 0, 1]])
    assert np.array_equal(problem.evaluate_batch(batch), [0.0, 4.0])
    with pytest.raises(ValueError):
        onemax(Genome(np.array([0, 2]), np.array([3, 3])))


def test_ruggedness_perm_identity_for_v1():
    for n in (1, 2, 7, 50):
        assert [ruggedness_perm(k, n, 1) for k in range(n + 1)] == list(range(n + 1))


def test_ruggedness_perm_small_table_by_hand():
    # n=6, v=2: blocks {0,1} {2,3} {4,5} reversed, tail {6} fixed
    assert [ruggedness_perm(k, 6, 2) for k in range(7)] == [1, 0, 3, 2, 5, 4, 6]
    # n=5, v=2: blocks {0,1} {2,3} reversed, tail {4,5} reversed in place
    assert [ruggedness_perm(k, 5, 2) for k in range(6)] == [1, 0, 3, 2, 5, 4]


def test_ruggedness_perm_pinned_values():
    assert ruggedness_perm(99, 100, 5) == 95
    assert ruggedness_perm(100, 100, 5) == 100


def test_ruggedness_perm_is_a_bijection():
    for n in (3, 10, 31, 64):
        for v in range(1, 9):
            table = [ruggedness_perm(k, n, v) for k in range(n + 1)]
            assert sorted(table) == list(range(n + 1))


def test_ruggedness_perm_rejects_bad_arguments():
    with pytest.raises(ValueError):
        ruggedness_perm(7, 6, 2)
    with pytest.raises(ValueError):
        ruggedness_perm(-1, 6, 2)
    with pytest.raises(ValueError):
        ruggedness_perm(0, 0, 1)
    with pytest.raises(ValueError):
        ruggedness_perm(0, 5, 0)


def test_ruggedness_problem_matches_level_permutation():
    problem = Ruggedness(10, 3)
    assert problem.optimum_value == 10.0
    rng = RngStream.from_seed(3)
    for _ in range(20):
        g = problem.random_genome(rng)
        level = int(g.values.sum())
        assert problem.evaluate(g) == float(ruggedness_perm(level, 10, 3))
        assert ruggedness_eval(g, 3) == ruggedness_perm(level, 10, 3)


def test_ruggedness_distance_axioms():
    metric = RuggednessDistance(12, 4)
    rng = RngStream.from_seed(8)
    pts = [rng.integers(0, 2, size=12) for _ in range(12)]
    for x in pts:
        assert metric.dist_values(x, x) == 0.0
        for y in pts:
            assert metric.dist_values(x, y) == metric.dist_values(y, x)
            assert metric.dist_values(x, y) >= 0.0
            for z in pts:
                assert metric.dist_values(x, z) <= metric.dist_values(x, y) + metric.dist_values(y, z) + 1e-12


def test_ruggedness_distance_v1_is_level_distance():
    metric = RuggednessDistance(9, 1)
    x = np.array([1, 1, 1, 0, 0, 0, 0, 0, 0])
    y = np.array([1, 1, 1, 1, 1, 1, 1, 0, 0])
    assert metric.dist_values(x, y) == 4.0
    g = _genome(x)
    h = _genome(y)
    assert ruggedness_dist(g, h, 1) == 4.0


def test_ruggedness_distance_zero_between_distinct_genomes():
    # same number of ones, different positions: a pseudo-metric, not a metric
    metric = RuggednessDistance(4, 2)
    assert metric.dist_values(np.array([1, 0, 1, 0]), np.array([0, 1, 0, 1])) == 0.0


def test_ruggedness_distance_batch_matches_scalar():
    metric = RuggednessDistance(15, 5)
    rng = RngStream.from_seed(21)
    x = rng.integers(0, 2, size=15)
    rows = rng.integers(0, 2, size=(40, 15))
    batch = metric.dist_batch(x, rows)
    assert np.array_equal(batch, [metric.dist_values(x, r) for r in rows])


def test_random_permutation_properties():
    rng = RngStream.from_seed(33)
    perm = random_permutation(30, rng)
    assert sorted(perm.tolist()) == list(range(30))
    assert np.array_equal(random_permutation(30, RngStream.from_seed(33)), perm)
    with pytest.raises(ValueError):
        random_permutation(0, rng)


def test_permuted_l2_identity_is_plain_euclidean():
    metric = PermutedL2Distance(np.arange(10))
    x = np.array([0, 1, 2, 3, 4, 5, 6, 7, 8, 9])
    y = np.array([0, 1, 2, 3, 4, 5, 6, 7, 8, 6])
    assert metric.dist_values(x, y) == pytest.approx(3.0)


def test_permuted_l2_undoes_the_permutation():
    rng = RngStream.from_seed(4)
    perm = random_permutation(20, rng)
    metric = PermutedL2Distance(perm)
    inv = np.empty_like(perm)
    inv[perm] = np.arange(20)
    x = rng.integers(0, 20, size=6)
    y = rng.integers(0, 20, size=6)
    expected = float(np.sqrt(((inv[x] - inv[y]) ** 2).sum()))
    assert metric.dist_values(x, y) == pytest.approx(expected)
    assert permuted_l2_dist(
        Genome(x, np.full(6, 20)), Genome(y, np.full(6, 20)), perm
    ) == pytest.approx(expected)
    rows = rng.integers(0, 20, size=(25, 6))
    assert np.allclose(metric.dist_batch(x, rows), [metric.dist_values(x, r) for r in rows])


def test_permuted_l2_rejects_non_permutation():
    with pytest.raises(ValueError):
        PermutedL2Distance(np.array([0, 0, 1]))


def test_integer_base_functions():
    z = np.array([[0.0, 0.0, 0.0], [1.0, -2.0, 2.0]])
    assert np.array_equal(INTEGER_BASES["sphere"](z), [0.0, 9.0])
    # ellipsoid weights run from 10^0 on the first axis to 10^6 on the last
    e = INTEGER_BASES["ellipsoid"](np.array([[1.0, 0.0, 0.0], [0.0, 0.0, 1.0]]))
    assert e[0] == pytest.approx(1.0)
    assert e[1] == pytest.approx(1e6)
    s = INTEGER_BASES["sharp_ridge"](np.array([[2.0, 3.0, 4.0]]))
    assert s[0] == pytest.approx(4.0 + 100.0 * 5.0)


def test_rastrigin_equals_sphere_on_the_integer_grid():
    # cos(2 pi k) == 1 for integer k, so the oscillation term vanishes
    rng = RngStream.from_seed(12)
    z = rng.integers(-10, 11, size=(50, 8)).astype(np.float64)
    assert np.allclose(INTEGER_BASES["rastrigin"](z), INTEGER_BASES["sphere"](z), atol=1e-9)


def test_permuted_integer_problem_optimum():
    problem = make_integer_problem("sphere", 6, 12, seed=5, permutation_seed=9)
    opt = problem.optimum_values
    assert problem.evaluate_values(opt) == pytest.approx(0.0)
    assert problem.optimum_value == 0.0
    rng = RngStream.from_seed(77)
    vals = problem.random_values(rng, 50)
    assert np.all(problem.evaluate_batch(vals) <= 0.0)


def test_permuted_integer_problem_metric_matches_geometry():
    problem = make_integer_problem("sphere", 5, 10, seed=1)
    metric = problem.natural_metric()
    rng = RngStream.from_seed(2)
    x = problem.random_values(rng, 1)[0]
    y = problem.random_values(rng, 1)[0]
    # fitness is minus squared distance to the optimum in unpermuted space, so
    # the metric bounds the fitness gap through the triangle inequality
    dx = metric.dist_values(x, problem.optimum_values)
    assert problem.evaluate_values(x) == pytest.approx(-dx * dx)
    assert metric.dist_values(x, y) == metric.dist_values(y, x)


def test_make_integer_problem_determinism():
    a = make_integer_problem("ellipsoid", 7, 15, seed=3, permutation_seed=8)
    b = make_integer_problem("ellipsoid", 7, 15, seed=3, permutation_seed=8)
    assert np.array_equal(a.perm, b.perm)
    assert np.array_equal(a.optimum_grid, b.optimum_grid)
    c = make_integer_problem("ellipsoid", 7, 15, seed=4, permutation_seed=8)
    assert np.array_equal(a.perm, c.perm)  # permutation driven by its own seed
    assert not np.array_equal(a.optimum_grid, c.optimum_grid)
    d = make_integer_problem("ellipsoid", 7, 15, seed=3, permutation_seed=1)
    assert not np.array_equal(a.perm, d.perm)


def test_make_integer_problem_validation():
    with pytest.raises(ValueError):
        make_integer_problem("nope", 5, 10)
    with pytest.raises(ValueError):
        PermutedIntegerProblem("sphere", 3, 5, np.arange(5), np.array([0, 1, 5]))
    with pytest.raises(ValueError):
        PermutedIntegerProblem("sphere", 3, 5, np.array([0, 1, 1, 3, 4]), np.zeros(3, dtype=int))


def test_natural_metrics_exist_for_shipped_problems():
    assert isinstance(OneMax(5).natural_metric(), RuggednessDistance)
    assert OneMax(5).natural_metric().v == 1
    metric = Ruggedness(8, 4).natural_metric()
    assert isinstance(metric, RuggednessDistance)
    assert metric.v == 4
    problem = make_integer_problem("sphere", 4, 6, seed=0)
    assert isinstance(problem.natural_metric(), PermutedL2Distance)
