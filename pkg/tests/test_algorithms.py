import math

import numpy as np
import pytest

from ddmut.algorithms import (
    SolverConfig,
    build_runner,
    run_dd_one_plus_one_ea_ab,
    run_ea_ab,
    run_one_plus_lambda_ea,
    run_one_plus_lambda_lambda_ea,
    run_rls,
    run_rls_ab,
    run_umda_solver,
)
from ddmut.core import Budget, Problem, RngStream, as_cardinalities
from ddmut.mutation import standard_bit_mutation
from ddmut.problems import OneMax, Ruggedness, make_integer_problem
from ddmut.umda import UmdaConfig


class _Plateau(Problem):
    """Constant fitness, no optimum: runs only end on budget."""

    def __init__(self, n):
        self.cardinalities = as_cardinalities(2, n)

    def evaluate_batch(self, values):
        return np.zeros(values.shape[0], dtype=np.float64)


class _CountingProblem(Problem):
    """OneMax that logs the size of every evaluation block."""

    def __init__(self, n):
        self.cardinalities = as_cardinalities(2, n)
        self.optimum_value = float(n)
        self.blocks = []

    def evaluate_batch(self, values):
        self.blocks.append(values.shape[0])
        return values.sum(axis=1).astype(np.float64)


def _flip_first(x, rng):
    values = x.values.copy()
    values[0] ^= 1
    return x.replace(values)


def test_one_plus_lambda_trace_framing():
    problem = OneMax(20)
    budget = Budget(max_fitness_evals=5000)
    record = run_one_plus_lambda_ea(problem, lambda x, r: standard_bit_mutation(x, 0.05, r), 1, budget, RngStream.from_seed(1))
    first = record.rows[0]
    assert (first.iteration, first.evaluations) == (0, 1)
    fits = [row.best_fitness for row in record.rows]
    assert fits == sorted(fits)
    assert all(b > a for a, b in zip(fits, fits[1:-1]))  # interior rows are strict improvements
    last = record.rows[-1]
    assert (last.iteration, last.evaluations) == (record.iterations, record.evaluations)
    assert record.best_fitness == 20.0
    assert record.best.values.sum() == 20


def test_one_plus_lambda_exact_evaluation_cap():
    problem = _Plateau(10)
    budget = Budget(max_fitness_evals=10)
    record = run_one_plus_lambda_ea(problem, _flip_first, 4, budget, RngStream.from_seed(2))
    # 1 parent eval, then blocks of 4, 4, and a truncated 1
    assert record.evaluations == 10
    assert record.iterations == 3


def test_one_plus_lambda_iteration_cap():
    problem = _Plateau(10)
    budget = Budget(max_iterations=7)
    record = run_one_plus_lambda_ea(problem, _flip_first, 3, budget, RngStream.from_seed(3))
    assert record.iterations == 7
    assert record.evaluations == 1 + 7 * 3


def test_one_plus_lambda_budget_zero():
    problem = OneMax(6)
    record = run_one_plus_lambda_ea(problem, _flip_first, 1, Budget(max_fitness_evals=0), RngStream.from_seed(4))
    assert record.evaluations == 0
    assert len(record.rows) == 1
    assert record.best_fitness == -math.inf


def test_one_plus_lambda_accepts_ties():
    problem = _Plateau(12)
    parents = []

    def spy(x, rng):
        parents.append(x.values.copy())
        return standard_bit_mutation(x, 1 / 12, rng)

    run_one_plus_lambda_ea(problem, spy, 1, Budget(max_fitness_evals=40), RngStream.from_seed(5))
    distinct = {tuple(p) for p in parents}
    assert len(distinct) > 1  # equal-fitness offspring replace the parent


def test_one_plus_lambda_solves_onemax_within_classic_budget():
    solved = 0
    for seed in range(20):
        problem = OneMax(20)
        record = run_one_plus_lambda_ea(
            problem,
            lambda x, r: standard_bit_mutation(x, 1 / 20, r),
            1,
            Budget(max_fitness_evals=5000),
            RngStream.from_seed(100, seed),
        )
        solved += record.best_fitness == 20.0
    assert solved >= 19


def test_two_phase_evaluation_accounting():
    problem = _CountingProblem(15)

    def batch(x, k, rng):
        return np.stack([standard_bit_mutation(x, 1 / 15, rng).values for _ in range(k)])

    budget = Budget(max_iterations=5)
    record = run_one_plus_lambda_lambda_ea(_wrap_no_optimum(problem), batch, 3, None, budget, RngStream.from_seed(6))
    assert problem.blocks[0] == 1
    assert problem.blocks[1:] == [3, 3] * 5  # lambda mutants then lambda crossovers
    assert record.evaluations == 1 + 5 * 6
    assert record.iterations == 5


def _wrap_no_optimum(problem):
    problem.optimum_value = None
    return problem


def test_two_phase_truncates_on_the_evaluation_cap():
    problem = _Plateau(8)

    def batch(x, k, rng):
        return np.repeat(x.values[None, :], k, axis=0)

    budget = Budget(max_fitness_evals=6)
    record = run_one_plus_lambda_lambda_ea(problem, batch, 4, None, budget, RngStream.from_seed(7))
    # 1 parent + 4 mutants + a single crossover slot
    assert record.evaluations == 6
    assert record.iterations == 1


def test_two_phase_crossover_bias_validation():
    problem = OneMax(5)

    def batch(x, k, rng):
        return np.repeat(x.values[None, :], k, axis=0)

    with pytest.raises(ValueError):
        run_one_plus_lambda_lambda_ea(problem, batch, 2, 1.5, Budget(max_fitness_evals=10), RngStream.from_seed(8))
    with pytest.raises(ValueError):
        run_one_plus_lambda_lambda_ea(problem, batch, 0, None, Budget(max_fitness_evals=10), RngStream.from_seed(8))


def test_two_phase_solves_onemax_within_classic_budget():
    solved = 0
    for seed in range(20):
        problem = OneMax(20)

        def batch(x, k, rng):
            return np.stack([standard_bit_mutation(x, 1 / 20, rng).values for _ in range(k)])

        record = run_one_plus_lambda_lambda_ea(problem, batch, 4, 0.25, Budget(max_fitness_evals=5000), RngStream.from_seed(200, seed))
        solved += record.best_fitness == 20.0
    assert solved >= 19


def test_rls_requires_binary_and_solves_onemax():
    with pytest.raises(ValueError):
        run_rls(make_integer_problem("sphere", 4, 8, seed=0), Budget(max_fitness_evals=10), RngStream.from_seed(9))
    record = run_rls(OneMax(15), Budget(max_fitness_evals=3000), RngStream.from_seed(10))
    assert record.best_fitness == 15.0


def _identity_sphere(n=10, c=20):
    return make_integer_problem("sphere", n, c, perm=np.arange(c), seed=42)


def test_rls_ab_solves_identity_sphere():
    solved = 0
    for seed in range(10):
        record = run_rls_ab(_identity_sphere(), Budget(max_fitness_evals=2000), RngStream.from_seed(300, seed))
        solved += record.best_fitness == 0.0
    assert solved >= 9


def test_rls_ab_stalls_under_a_scrambling_permutation():
    identity_regret, permuted_regret = [], []
    for seed in range(10):
        a = run_rls_ab(_identity_sphere(), Budget(max_fitness_evals=2000), RngStream.from_seed(301, seed))
        b = run_rls_ab(
            make_integer_problem("sphere", 10, 20, seed=42, permutation_seed=5),
            Budget(max_fitness_evals=2000),
            RngStream.from_seed(301, seed),
        )
        identity_regret.append(-a.best_fitness)
        permuted_regret.append(-b.best_fitness)
    assert np.median(permuted_regret) > np.median(identity_regret)


def test_ea_ab_solves_identity_sphere():
    solved = 0
    for seed in range(10):
        record = run_ea_ab(_identity_sphere(), 1, Budget(max_fitness_evals=2000), RngStream.from_seed(302, seed))
        solved += record.best_fitness == 0.0
    assert solved >= 9
    with pytest.raises(ValueError):
        run_ea_ab(_identity_sphere(), 0, Budget(max_fitness_evals=10), RngStream.from_seed(0))


def test_dd_ab_calibrates_then_tracks_its_mean():
    problem = make_integer_problem("sphere", 10, 20, seed=11)
    budget = Budget(max_fitness_evals=300)
    record = run_dd_one_plus_one_ea_ab(
        problem, problem.natural_metric(), budget, RngStream.from_seed(12), UmdaConfig(10, 100, 1500)
    )
    transform = record.metadata["transform"]
    assert set(transform) == {"eps1", "eps2", "gamma", "d_min", "d_max"}
    lo = transform["eps1"]
    hi = 1.0 - transform["eps2"]
    mid = 0.5 * (lo + hi)
    for row in record.rows:
        assert row.mean_param is not None
        assert lo < row.mean_param < mid
    assert record.metadata["final_mean"] == record.rows[-1].mean_param
    assert record.evaluations <= 300
    assert record.distance_evaluations > 0


def test_umda_solver_caps_and_validation():
    problem = OneMax(30)
    record = run_umda_solver(problem, 20, 60, Budget(max_fitness_evals=30_000), RngStream.from_seed(13))
    assert record.best_fitness == 30.0
    assert record.evaluations <= 30_000

    capped = run_umda_solver(_Plateau(10), 5, 20, Budget(max_iterations=3), RngStream.from_seed(14))
    assert capped.iterations <= 3
    assert capped.evaluations <= 60

    with pytest.raises(ValueError):
        run_umda_solver(problem, 20, 60, Budget(), RngStream.from_seed(15))


def test_build_runner_covers_every_kind():
    binary = Ruggedness(12, 2)
    integer = _identity_sphere(6, 10)
    inner = UmdaConfig(5, 20, 100)
    cases = [
        (SolverConfig(kind="one_plus_lambda_ea", lam=2), binary),
        (SolverConfig(kind="one_plus_lambda_ea", lam=2, mutation="distance_driven", inner=inner), binary),
        (SolverConfig(kind="one_plus_lambda_lambda_ea", lam=2), binary),
        (SolverConfig(kind="one_plus_lambda_lambda_ea", lam=2, mutation="distance_driven", inner=inner), binary),
        (SolverConfig(kind="rls"), binary),
        (SolverConfig(kind="rls_ab"), integer),
        (SolverConfig(kind="ea_ab", lam=2), integer),
        (SolverConfig(kind="umda", lam=20, mu=5), binary),
    ]
    for cfg, problem in cases:
        runner = build_runner(cfg)
        record = runner(problem, problem.natural_metric(), Budget(max_fitness_evals=200), RngStream.from_seed(16))
        assert record.evaluations <= 200
        assert record.rows


def test_build_runner_rejects_incomplete_dd_setup():
    cfg = SolverConfig(kind="one_plus_lambda_ea", mutation="distance_driven")
    runner = build_runner(cfg)
    problem = Ruggedness(8, 2)
    with pytest.raises(ValueError):
        runner(problem, problem.natural_metric(), Budget(max_fitness_evals=50), RngStream.from_seed(17))
    cfg = SolverConfig(kind="one_plus_lambda_ea", mutation="distance_driven", inner=UmdaConfig(2, 4, 20))
    with pytest.raises(ValueError):
        build_runner(cfg)(problem, None, Budget(max_fitness_evals=50), RngStream.from_seed(17))


def test_solver_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(kind="simulated_annealing")
    with pytest.raises(ValueError):
        SolverConfig(kind="rls", mutation="gaussian")


def test_identical_seeds_give_identical_records():
    problem = Ruggedness(15, 3)
    inner = UmdaConfig(5, 20, 150)
    for cfg in (
        SolverConfig(kind="one_plus_lambda_ea", lam=4),
        SolverConfig(kind="one_plus_lambda_ea", lam=4, mutation="distance_driven", inner=inner),
        SolverConfig(kind="rls_ab"),
    ):
        target = _identity_sphere(5, 8) if cfg.kind == "rls_ab" else problem
        runner = build_runner(cfg)
        a = runner(target, target.natural_metric(), Budget(max_fitness_evals=300), RngStream.from_seed(18))
        b = runner(target, target.natural_metric(), Budget(max_fitness_evals=300), RngStream.from_seed(18))
        assert [(r.iteration, r.evaluations, r.best_fitness) for r in a.rows] == [
            (r.iteration, r.evaluations, r.best_fitness) for r in b.rows
        ]
        assert np.array_equal(a.best.values, b.best.values)


def test_engines_depend_only_on_the_mutation_binding():
    # the same stub mutation through the same engine must reproduce the trace
    problem = Ruggedness(10, 2)

    def stub(x, rng):
        values = x.values.copy()
        i = int(rng.integers(0, x.n))
        values[i] ^= 1
        return x.replace(values)

    a = run_one_plus_lambda_ea(problem, stub, 3, Budget(max_fitness_evals=100), RngStream.from_seed(19))
    b = run_one_plus_lambda_ea(problem, stub, 3, Budget(max_fitness_evals=100), RngStream.from_seed(19))
    assert [(r.iteration, r.evaluations, r.best_fitness) for r in a.rows] == [
        (r.iteration, r.evaluations, r.best_fitness) for r in b.rows
    ]
