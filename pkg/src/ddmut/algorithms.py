"""Evolutionary algorithm engines and their trace records.

Every engine maximizes, charges evaluations to a shared Budget, and returns a
RunRecord whose rows log the initial point, every strict improvement, and a
final checkpoint. Iteration counts refer to generations, not evaluations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence

import numpy as np

from .core import Budget, Genome, Metric, Problem, RngStream
from .mutation import (
    DdMutationConfig,
    VelocityState,
    _positive_binomial,
    biased_crossover,
    dd_mutate,
    standard_bit_mutation,
    velocity_mutate,
    velocity_update,
)
from .stepdist import (
    BinomialStepDist,
    MaxEntropyStepDist,
    estimate_transform_params,
    update_mean,
)
from .umda import UmdaConfig, umda_run

__all__ = [
    "TraceRow",
    "RunRecord",
    "SolverConfig",
    "ALGORITHM_KINDS",
    "build_runner",
    "run_one_plus_lambda_ea",
    "run_one_plus_lambda_lambda_ea",
    "run_rls",
    "run_rls_ab",
    "run_ea_ab",
    "run_dd_one_plus_one_ea_ab",
    "run_umda_solver",
]


@dataclass
class TraceRow:
    iteration: int
    evaluations: int
    best_fitness: float
    mean_param: Optional[float] = None


@dataclass
class RunRecord:
    rows: List[TraceRow]
    best: Genome
    best_fitness: float
    iterations: int
    evaluations: int
    distance_evaluations: int = 0
    metadata: dict = field(default_factory=dict)


def _hit_optimum(problem: Problem, fx: float) -> bool:
    return problem.optimum_value is not None and fx >= problem.optimum_value


def _stopped(problem: Problem, fx: float, budget: Budget) -> bool:
    return _hit_optimum(problem, fx) or budget.fitness_exhausted() or budget.iterations_exhausted()


def _block_size(lam: int, budget: Budget) -> int:
    rem = budget.remaining_fitness()
    return lam if rem is None else min(lam, rem)


def _evaluate_block(problem: Problem, block: np.ndarray, budget: Budget) -> np.ndarray:
    budget.add_fitness(block.shape[0])
    return np.asarray(problem.evaluate_batch(block), dtype=np.float64)


def _empty_record(x: Genome, budget: Budget, metadata: Optional[dict] = None) -> RunRecord:
    rows = [TraceRow(budget.iterations, budget.fitness_evals, -math.inf)]
    return RunRecord(
        rows,
        x,
        -math.inf,
        budget.iterations,
        budget.fitness_evals,
        budget.distance_evals,
        metadata or {},
    )


def _finish(
    rows: List[TraceRow],
    best: Genome,
    fx: float,
    budget: Budget,
    metadata: Optional[dict] = None,
    mean_param: Optional[float] = None,
) -> RunRecord:
    last = rows[-1]
    if (last.iteration, last.evaluations) != (budget.iterations, budget.fitness_evals):
        rows.append(TraceRow(budget.iterations, budget.fitness_evals, fx, mean_param))
    return RunRecord(
        rows,
        best,
        fx,
        budget.iterations,
        budget.fitness_evals,
        budget.distance_evals,
        metadata or {},
    )


def run_one_plus_lambda_ea(
    problem: Problem,
    mutation: Callable[[Genome, RngStream], Genome],
    lam: int,
    budget: Budget,
    rng: RngStream,
) -> RunRecord:
    """Elitist (1+lambda) EA: best offspring replaces the parent on >=."""
    if lam < 1:
        raise ValueError("lam must be positive")
    x = problem.random_genome(rng)
    if budget.fitness_exhausted():
        return _empty_record(x, budget)
    fx = float(_evaluate_block(problem, x.values[None, :], budget)[0])
    rows = [TraceRow(budget.iterations, budget.fitness_evals, fx)]
    while not _stopped(problem, fx, budget):
        k = _block_size(lam, budget)
        block = np.stack([mutation(x, rng).values for _ in range(k)])
        vals = _evaluate_block(problem, block, budget)
        budget.iterations += 1
        j = int(np.argmax(vals))
        if vals[j] >= fx:
            if vals[j] > fx:
                rows.append(TraceRow(budget.iterations, budget.fitness_evals, float(vals[j])))
            x = x.replace(block[j])
            fx = float(vals[j])
    return _finish(rows, x, fx, budget)


def run_one_plus_lambda_lambda_ea(
    problem: Problem,
    mutation_batch: Callable[[Genome, int, RngStream], np.ndarray],
    lam: int,
    crossover_bias: Optional[float],
    budget: Budget,
    rng: RngStream,
) -> RunRecord:
    """(1+(lambda,lambda)) EA: a mutation phase, then a crossover phase biased
    toward the best mutant. The best of everything sampled in the iteration
    replaces the parent on >=. One iteration spans both phases."""
    if lam < 1:
        raise ValueError("lam must be positive")
    c = 1.0 / lam if crossover_bias is None else float(crossover_bias)
    if not 0.0 <= c <= 1.0:
        raise ValueError("crossover bias must lie in [0, 1]")
    x = problem.random_genome(rng)
    if budget.fitness_exhausted():
        return _empty_record(x, budget)
    fx = float(_evaluate_block(problem, x.values[None, :], budget)[0])
    rows = [TraceRow(budget.iterations, budget.fitness_evals, fx)]
    while not _stopped(problem, fx, budget):
        k1 = _block_size(lam, budget)
        mutants = np.asarray(mutation_batch(x, k1, rng))
        mvals = _evaluate_block(problem, mutants, budget)
        jm = int(np.argmax(mvals))
        best_mutant = x.replace(mutants[jm])
        pool = mutants
        pvals = mvals
        k2 = _block_size(lam, budget)
        if k2 > 0:
            cross = np.stack([biased_crossover(x, best_mutant, c, rng).values for _ in range(k2)])
            cvals = _evaluate_block(problem, cross, budget)
            pool = np.concatenate([mutants, cross], axis=0)
            pvals = np.concatenate([mvals, cvals])
        budget.iterations += 1
        j = int(np.argmax(pvals))
        if pvals[j] >= fx:
            if pvals[j] > fx:
                rows.append(TraceRow(budget.iterations, budget.fitness_evals, float(pvals[j])))
            x = x.replace(pool[j])
            fx = float(pvals[j])
    return _finish(rows, x, fx, budget)


def run_rls(problem: Problem, budget: Budget, rng: RngStream) -> RunRecord:
    """Randomized local search on bit strings: flip one uniform position."""
    if not np.all(problem.cardinalities == 2):
        raise ValueError("rls is defined on binary genomes")

    def flip_one(x: Genome, r: RngStream) -> Genome:
        values = x.values.copy()
        i = int(r.integers(0, x.n))
        values[i] ^= 1
        return x.replace(values)

    return run_one_plus_lambda_ea(problem, flip_one, 1, budget, rng)


def run_rls_ab(
    problem: Problem,
    budget: Budget,
    rng: RngStream,
    up_factor: float = 2.0,
    down_factor: float = 0.5,
) -> RunRecord:
    """Self-adjusting RLS for bounded integers: one uniform component moves by
    its current velocity, which doubles on strict success and halves otherwise."""
    state = VelocityState.initial(problem.cardinalities, up_factor, down_factor)
    x = problem.random_genome(rng)
    if budget.fitness_exhausted():
        return _empty_record(x, budget)
    fx = float(_evaluate_block(problem, x.values[None, :], budget)[0])
    rows = [TraceRow(budget.iterations, budget.fitness_evals, fx)]
    while not _stopped(problem, fx, budget):
        pos = np.array([rng.integers(0, x.n)])
        y = velocity_mutate(x, state, pos, rng)
        fy = float(_evaluate_block(problem, y.values[None, :], budget)[0])
        budget.iterations += 1
        state = velocity_update(state, pos, fy > fx)
        if fy >= fx:
            if fy > fx:
                rows.append(TraceRow(budget.iterations, budget.fitness_evals, fy))
            x = y
            fx = fy
    return _finish(rows, x, fx, budget)


def run_ea_ab(
    problem: Problem,
    lam: int,
    budget: Budget,
    rng: RngStream,
    up_factor: float = 2.0,
    down_factor: float = 0.5,
) -> RunRecord:
    """Self-adjusting (1+lambda) EA for bounded integers. Each offspring moves
    Bin(n, 1/n) >= 1 distinct components by their velocities; the velocities on
    the winning offspring's positions are updated, scaled up only when that
    offspring strictly improved on the parent."""
    if lam < 1:
        raise ValueError("lam must be positive")
    state = VelocityState.initial(problem.cardinalities, up_factor, down_factor)
    x = problem.random_genome(rng)
    if budget.fitness_exhausted():
        return _empty_record(x, budget)
    fx = float(_evaluate_block(problem, x.values[None, :], budget)[0])
    rows = [TraceRow(budget.iterations, budget.fitness_evals, fx)]
    n = x.n
    while not _stopped(problem, fx, budget):
        k = _block_size(lam, budget)
        block = np.empty((k, n), dtype=np.int64)
        positions: List[np.ndarray] = []
        for i in range(k):
            ell = _positive_binomial(n, 1.0 / n, rng)
            pos = rng.choice(n, size=ell, replace=False)
            positions.append(pos)
            block[i] = velocity_mutate(x, state, pos, rng).values
        vals = _evaluate_block(problem, block, budget)
        budget.iterations += 1
        j = int(np.argmax(vals))
        state = velocity_update(state, positions[j], float(vals[j]) > fx)
        if vals[j] >= fx:
            if vals[j] > fx:
                rows.append(TraceRow(budget.iterations, budget.fitness_evals, float(vals[j])))
            x = x.replace(block[j])
            fx = float(vals[j])
    return _finish(rows, x, fx, budget)


def run_dd_one_plus_one_ea_ab(
    problem: Problem,
    metric: Metric,
    budget: Budget,
    rng: RngStream,
    inner: UmdaConfig,
    *,
    mean_up: float = 1.001,
    mean_down: float = 0.999,
    initial_mean: Optional[float] = None,
    chain_len: int = 10,
    grow: float = 2.0,
    shrink: float = 1.2,
) -> RunRecord:
    """Distance-driven (1+1) EA with a self-adjusting target mean.

    Calibrates the exponential transform once up front, then mutates through
    the distance operator with a maximum-entropy step distribution whose mean
    is nudged up on strict success, down on strict failure, and left alone on
    exact ties. The mean travels with each trace row."""
    x = problem.random_genome(rng)
    params = estimate_transform_params(
        metric,
        problem.cardinalities,
        x.values,
        inner,
        rng,
        chain_len=chain_len,
        grow=grow,
        shrink=shrink,
        budget=budget,
    )
    lo, hi = params.step_interval
    mean = (3.0 * lo + hi) / 4.0 if initial_mean is None else float(initial_mean)
    dist = MaxEntropyStepDist.from_mean(lo, hi, mean)
    cfg = DdMutationConfig(metric, dist, inner, transform=params)
    metadata = {
        "transform": {
            "eps1": params.eps1,
            "eps2": params.eps2,
            "gamma": params.gamma,
            "d_min": params.d_min,
            "d_max": params.d_max,
        }
    }
    if budget.fitness_exhausted():
        return _empty_record(x, budget, metadata)
    fx = float(_evaluate_block(problem, x.values[None, :], budget)[0])
    rows = [TraceRow(budget.iterations, budget.fitness_evals, fx, dist.mean)]
    while not _stopped(problem, fx, budget):
        y = dd_mutate(x, cfg, rng, budget)
        fy = float(_evaluate_block(problem, y.values[None, :], budget)[0])
        budget.iterations += 1
        if fy > fx:
            dist = update_mean(dist, True, mean_up, mean_down)
            x, fx = y, fy
            rows.append(TraceRow(budget.iterations, budget.fitness_evals, fy, dist.mean))
        elif fy < fx:
            dist = update_mean(dist, False, mean_up, mean_down)
        else:
            x = y
        cfg.step_dist = dist
    metadata["final_mean"] = dist.mean
    return _finish(rows, x, fx, budget, metadata, dist.mean)


def run_umda_solver(
    problem: Problem,
    mu: int,
    lam: int,
    budget: Budget,
    rng: RngStream,
) -> RunRecord:
    """UMDA as a standalone solver; one iteration per generation."""
    cap_evals = budget.remaining_fitness()
    cap_iters = None if budget.max_iterations is None else max(0, budget.max_iterations - budget.iterations)
    caps = [c for c in (cap_evals, None if cap_iters is None else lam * cap_iters) if c is not None]
    if not caps:
        raise ValueError("umda solver needs a finite evaluation or iteration budget")
    total = min(caps)
    base_iters = budget.iterations
    base_evals = budget.fitness_evals
    rows: List[TraceRow] = []
    best_seen = -math.inf

    def track(gen: int, _model, _best_values, best_value: float, evals: int) -> None:
        nonlocal best_seen
        budget.iterations = base_iters + gen
        budget.fitness_evals = base_evals + evals
        if best_value > best_seen:
            best_seen = best_value
            rows.append(TraceRow(budget.iterations, budget.fitness_evals, float(best_value)))

    def stop(_values: np.ndarray, value: float) -> bool:
        return _hit_optimum(problem, value)

    config = UmdaConfig(mu, lam, total, stop=stop)
    result = umda_run(
        None,
        problem.cardinalities,
        config,
        rng,
        batch_objective=lambda rows_: problem.evaluate_batch(rows_),
        on_generation=track,
    )
    budget.iterations = base_iters + result.generations
    budget.fitness_evals = base_evals + result.evaluations
    if not rows:
        rows.append(TraceRow(budget.iterations, budget.fitness_evals, result.best_value))
    return _finish(rows, result.best, result.best_value, budget)


ALGORITHM_KINDS = {
    "one_plus_lambda_ea": "elitist (1+lambda) EA",
    "one_plus_lambda_lambda_ea": "(1+(lambda,lambda)) EA with biased crossover",
    "rls": "randomized local search, one-bit flips",
    "rls_ab": "self-adjusting one-component integer search",
    "ea_ab": "self-adjusting (1+lambda) integer EA",
    "dd_one_plus_one_ea_ab": "distance-driven (1+1) EA with mean control",
    "umda": "univariate marginal EDA as a solver",
}


@dataclass
class SolverConfig:
    """Declarative algorithm description resolved by build_runner.

    mutation selects the operator family for the two generic EAs: "classical"
    flips Bin(n, rate) >= 1 distinct bits, "distance_driven" routes through
    dd_mutate with a binomial step distribution. Fields that a kind does not
    use are ignored.
    """

    kind: str
    lam: int = 1
    crossover_bias: Optional[float] = None
    mutation: str = "classical"
    mutation_rate: Optional[float] = None
    step_trials: Optional[int] = None
    step_prob: Optional[float] = None
    inner: Optional[UmdaConfig] = None
    mean_up: float = 1.001
    mean_down: float = 0.999
    initial_mean: Optional[float] = None
    velocity_up: float = 2.0
    velocity_down: float = 0.5
    mu: Optional[int] = None
    chain_len: int = 10
    chain_grow: float = 2.0
    chain_shrink: float = 1.2

    def __post_init__(self) -> None:
        if self.kind not in ALGORITHM_KINDS:
            raise ValueError(f"unknown algorithm kind {self.kind!r}")
        if self.mutation not in ("classical", "distance_driven"):
            raise ValueError(f"unknown mutation family {self.mutation!r}")


def _require_inner(cfg: SolverConfig) -> UmdaConfig:
    if cfg.inner is None:
        raise ValueError(f"{cfg.kind} with distance-driven mutation needs inner search settings")
    return cfg.inner


def _require_metric(cfg: SolverConfig, metric: Optional[Metric]) -> Metric:
    if metric is None:
        raise ValueError(f"{cfg.kind} needs a metric for distance-driven mutation")
    return metric


def _dd_config(cfg: SolverConfig, problem: Problem, metric: Metric) -> DdMutationConfig:
    n = problem.cardinalities.size
    trials = n if cfg.step_trials is None else cfg.step_trials
    prob = 1.0 / n if cfg.step_prob is None else cfg.step_prob
    return DdMutationConfig(metric, BinomialStepDist(trials, prob), _require_inner(cfg))


def _make_mutation(
    cfg: SolverConfig, problem: Problem, metric: Optional[Metric], budget: Budget
) -> Callable[[Genome, RngStream], Genome]:
    if cfg.mutation == "classical":
        n = problem.cardinalities.size
        rate = 1.0 / n if cfg.mutation_rate is None else cfg.mutation_rate
        return lambda x, r: standard_bit_mutation(x, rate, r)
    dd = _dd_config(cfg, problem, _require_metric(cfg, metric))
    return lambda x, r: dd_mutate(x, dd, r, budget)


def _make_batch_mutation(
    cfg: SolverConfig, problem: Problem, metric: Optional[Metric], budget: Budget
) -> Callable[[Genome, int, RngStream], np.ndarray]:
    n = problem.cardinalities.size
    if cfg.mutation == "classical":
        rate = 1.0 / n if cfg.mutation_rate is None else cfg.mutation_rate
        if not np.all(problem.cardinalities == 2):
            raise ValueError("classical bit mutation is defined on binary genomes")

        def classical_batch(x: Genome, k: int, r: RngStream) -> np.ndarray:
            # one strength for the whole batch, fresh positions per mutant
            ell = _positive_binomial(n, rate, r)
            block = np.repeat(x.values[None, :], k, axis=0)
            for i in range(k):
                pos = r.choice(n, size=ell, replace=False)
                block[i, pos] ^= 1
            return block

        return classical_batch
    dd = _dd_config(cfg, problem, _require_metric(cfg, metric))

    def dd_batch(x: Genome, k: int, r: RngStream) -> np.ndarray:
        return np.stack([dd_mutate(x, dd, r, budget).values for _ in range(k)])

    return dd_batch


def build_runner(cfg: SolverConfig) -> Callable[[Problem, Optional[Metric], Budget, RngStream], RunRecord]:
    """Bind a SolverConfig to a callable runner(problem, metric, budget, rng)."""
    kind = cfg.kind

    def runner(problem: Problem, metric: Optional[Metric], budget: Budget, rng: RngStream) -> RunRecord:
        if kind == "one_plus_lambda_ea":
            mut = _make_mutation(cfg, problem, metric, budget)
            return run_one_plus_lambda_ea(problem, mut, cfg.lam, budget, rng)
        if kind == "one_plus_lambda_lambda_ea":
            batch = _make_batch_mutation(cfg, problem, metric, budget)
            return run_one_plus_lambda_lambda_ea(problem, batch, cfg.lam, cfg.crossover_bias, budget, rng)
        if kind == "rls":
            return run_rls(problem, budget, rng)
        if kind == "rls_ab":
            return run_rls_ab(problem, budget, rng, cfg.velocity_up, cfg.velocity_down)
        if kind == "ea_ab":
            return run_ea_ab(problem, cfg.lam, budget, rng, cfg.velocity_up, cfg.velocity_down)
        if kind == "dd_one_plus_one_ea_ab":
            return run_dd_one_plus_one_ea_ab(
                problem,
                _require_metric(cfg, metric),
                budget,
                rng,
                _require_inner(cfg),
                mean_up=cfg.mean_up,
                mean_down=cfg.mean_down,
                initial_mean=cfg.initial_mean,
                chain_len=cfg.chain_len,
                grow=cfg.chain_grow,
                shrink=cfg.chain_shrink,
            )
        if kind == "umda":
            mu = 50 if cfg.mu is None else cfg.mu
            return run_umda_solver(problem, mu, cfg.lam, budget, rng)
        raise ValueError(f"unknown algorithm kind {kind!r}")

    return runner
