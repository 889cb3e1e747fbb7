"""Distance-driven mutation operators with baseline evolutionary algorithms.

The package splits into a small genome/problem core, benchmark problems with
their strong-causal distances, a marginal EDA used as the inner engine, step
distributions with the black-box transform calibration, the mutation
operators themselves, the outer algorithm engines, and a benchmark harness
with a command line front end.
"""

from .core import (
    Budget,
    BudgetExhaustedError,
    Genome,
    Metric,
    Problem,
    RngStream,
    as_cardinalities,
    evaluate_counted,
)
from .problems import (
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
from .umda import MarginalModel, UmdaConfig, UmdaResult, umda_run
from .stepdist import (
    BinomialStepDist,
    DegenerateMetricError,
    EpsilonScanError,
    MaxEntropyStepDist,
    TransformParams,
    estimate_transform_params,
    log_normalizer,
    solve_rate,
    transform_distance,
    update_mean,
)
from .mutation import (
    DdMutationConfig,
    VelocityState,
    biased_crossover,
    dd_mutate,
    standard_bit_mutation,
    velocity_mutate,
    velocity_update,
)
from .algorithms import (
    ALGORITHM_KINDS,
    RunRecord,
    SolverConfig,
    TraceRow,
    build_runner,
    run_dd_one_plus_one_ea_ab,
    run_ea_ab,
    run_one_plus_lambda_ea,
    run_one_plus_lambda_lambda_ea,
    run_rls,
    run_rls_ab,
    run_umda_solver,
)

__version__ = "0.1.0"

__all__ = [
    "ALGORITHM_KINDS",
    "BinomialStepDist",
    "Budget",
    "BudgetExhaustedError",
    "DdMutationConfig",
    "DegenerateMetricError",
    "EpsilonScanError",
    "Genome",
    "INTEGER_BASES",
    "MarginalModel",
    "MaxEntropyStepDist",
    "Metric",
    "OneMax",
    "PermutedIntegerProblem",
    "PermutedL2Distance",
    "Problem",
    "RngStream",
    "Ruggedness",
    "RuggednessDistance",
    "RunRecord",
    "SolverConfig",
    "TraceRow",
    "TransformParams",
    "UmdaConfig",
    "UmdaResult",
    "VelocityState",
    "as_cardinalities",
    "biased_crossover",
    "build_runner",
    "dd_mutate",
    "estimate_transform_params",
    "evaluate_counted",
    "log_normalizer",
    "make_integer_problem",
    "onemax",
    "permuted_l2_dist",
    "random_permutation",
    "ruggedness_dist",
    "ruggedness_eval",
    "ruggedness_perm",
    "run_dd_one_plus_one_ea_ab",
    "run_ea_ab",
    "run_one_plus_lambda_ea",
    "run_one_plus_lambda_lambda_ea",
    "run_rls",
    "run_rls_ab",
    "run_umda_solver",
    "solve_rate",
    "standard_bit_mutation",
    "transform_distance",
    "umda_run",
    "update_mean",
    "velocity_mutate",
    "velocity_update",
]
