"""Benchmark harness: YAML experiment configs, deterministic runs, CSV traces.

A config names a master seed, a budget, problems, and algorithms. Every
(problem, algorithm, repetition) cell gets its own child seed derived from the
master seed and the cell indices, so results are reproducible bit for bit
regardless of worker count or execution order. Each cell writes one CSV trace;
a manifest ties the outputs to a digest of the expanded config. Aggregation is
a pure function of the CSV files.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import yaml

from .algorithms import ALGORITHM_KINDS, RunRecord, SolverConfig, build_runner
from .core import Budget, Problem, RngStream
from .problems import INTEGER_BASES, OneMax, Ruggedness, make_integer_problem
from .umda import UmdaConfig

__all__ = [
    "BenchError",
    "ConfigError",
    "CSV_HEADER",
    "load_config",
    "expand_config",
    "config_digest",
    "build_problem",
    "build_solver_config",
    "run_bench",
    "aggregate_dir",
    "read_run_csv",
]

CSV_HEADER = "run_id,seed,iteration,evaluations,best_fitness,mean_param,wall_ms"


class ConfigError(Exception):
    """A problem with the experiment description itself."""


class BenchError(Exception):
    """A failure while running or aggregating experiments."""


# - YAML loading with line positions -------------------------------------


class _LinedDict(dict):
    line: Optional[int] = None


class _LinedList(list):
    line: Optional[int] = None


class _LinedLoader(yaml.SafeLoader):
    pass


def _construct_yaml_map(loader: yaml.SafeLoader, node: yaml.Node):
    data = _LinedDict()
    data.line = node.start_mark.line + 1
    yield data
    data.update(loader.construct_mapping(node, deep=False))


def _construct_yaml_seq(loader: yaml.SafeLoader, node: yaml.Node):
    data = _LinedList()
    data.line = node.start_mark.line + 1
    yield data
    data.extend(loader.construct_sequence(node, deep=False))


_LinedLoader.add_constructor("tag:yaml.org,2002:map", _construct_yaml_map)
_LinedLoader.add_constructor("tag:yaml.org,2002:seq", _construct_yaml_seq)


def _where(obj: Any, fallback: str = "config") -> str:
    line = getattr(obj, "line", None)
    return f"config line {line}" if line is not None else fallback


def _expect_mapping(obj: Any, what: str) -> dict:
    if not isinstance(obj, dict):
        raise ConfigError(f"{_where(obj)}: {what} must be a mapping")
    return obj


def _no_extra_keys(d: dict, allowed: Sequence[str], what: str) -> None:
    extra = sorted(set(d) - set(allowed))
    if extra:
        raise ConfigError(f"{_where(d)}: unknown {what} keys {extra}")


_MISSING = object()


def _get(d: dict, key: str, types, *, default=_MISSING, what: str = "") -> Any:
    if key not in d:
        if default is _MISSING:
            raise ConfigError(f"{_where(d)}: missing required key {key!r}{what}")
        return default
    value = d[key]
    if types is not None and not isinstance(value, types):
        kinds = types if isinstance(types, tuple) else (types,)
        names = "/".join(t.__name__ for t in kinds)
        raise ConfigError(f"{_where(d)}: key {key!r} must be {names}, got {type(value).__name__}")
    # bool is an int subclass; reject it where an int is meant
    if isinstance(value, bool) and types is not None and bool not in (types if isinstance(types, tuple) else (types,)):
        raise ConfigError(f"{_where(d)}: key {key!r} must not be a boolean")
    return value


def load_config(path: str | Path) -> dict:
    """Parse a YAML experiment file into its raw mapping."""
    text = Path(path).read_text()
    try:
        raw = yaml.load(text, Loader=_LinedLoader)
    except yaml.YAMLError as exc:
        raise ConfigError(f"config is not valid YAML: {exc}") from exc
    return _expect_mapping(raw, "the experiment file")


# - expansion ------------------------------------------------------------


def _expand_problem(spec: Any) -> List[dict]:
    spec = _expect_mapping(spec, "each problems entry")
    kind = _get(spec, "kind", str)
    if kind == "onemax":
        _no_extra_keys(spec, ("kind", "n"), "problem")
        n = _get(spec, "n", int)
        return [{"kind": "onemax", "n": n, "name": f"onemax_n{n}"}]
    if kind == "ruggedness":
        _no_extra_keys(spec, ("kind", "n", "v"), "problem")
        n = _get(spec, "n", int)
        v = _get(spec, "v", (int, list))
        vs = v if isinstance(v, list) else [v]
        out = []
        for item in vs:
            if not isinstance(item, int) or isinstance(item, bool):
                raise ConfigError(f"{_where(spec)}: ruggedness v entries must be integers")
            out.append({"kind": "ruggedness", "n": n, "v": item, "name": f"ruggedness_n{n}_v{item}"})
        return out
    if kind == "integer":
        _no_extra_keys(spec, ("kind", "base", "n", "c", "seed", "permutation_seed"), "problem")
        base = _get(spec, "base", str)
        if base not in INTEGER_BASES:
            raise ConfigError(f"{_where(spec)}: unknown integer base {base!r}, have {sorted(INTEGER_BASES)}")
        n = _get(spec, "n", int)
        c = _get(spec, "c", int)
        seed = _get(spec, "seed", int, default=0)
        perm = _get(spec, "permutation_seed", int, default=None)
        name = f"integer_{base}_n{n}_c{c}_s{seed}"
        if perm is not None:
            name += f"_p{perm}"
        return [{"kind": "integer", "base": base, "n": n, "c": c, "seed": seed, "permutation_seed": perm, "name": name}]
    raise ConfigError(f"{_where(spec)}: unknown problem kind {kind!r}")


_ALG_KEYS = (
    "kind",
    "name",
    "lam",
    "crossover_bias",
    "mutation",
    "mutation_rate",
    "step_trials",
    "step_prob",
    "inner",
    "mean_up",
    "mean_down",
    "initial_mean",
    "velocity_up",
    "velocity_down",
    "mu",
    "chain_len",
    "chain_grow",
    "chain_shrink",
    "repetitions",
)


def _expand_algorithm(spec: Any, default_reps: int) -> dict:
    spec = _expect_mapping(spec, "each algorithms entry")
    kind = _get(spec, "kind", str)
    if kind not in ALGORITHM_KINDS:
        raise ConfigError(f"{_where(spec)}: unknown algorithm kind {kind!r}, have {sorted(ALGORITHM_KINDS)}")
    _no_extra_keys(spec, _ALG_KEYS, "algorithm")
    out: Dict[str, Any] = {"kind": kind}
    out["lam"] = _get(spec, "lam", int, default=1)
    out["crossover_bias"] = _get(spec, "crossover_bias", (int, float), default=None)
    out["mutation"] = _get(spec, "mutation", str, default="classical")
    if out["mutation"] not in ("classical", "distance_driven"):
        raise ConfigError(f"{_where(spec)}: mutation must be classical or distance_driven")
    out["mutation_rate"] = _get(spec, "mutation_rate", (int, float), default=None)
    out["step_trials"] = _get(spec, "step_trials", int, default=None)
    out["step_prob"] = _get(spec, "step_prob", (int, float), default=None)
    inner = _get(spec, "inner", dict, default=None)
    if inner is not None:
        _no_extra_keys(inner, ("mu", "lam", "budget"), "inner")
        inner = {
            "mu": _get(inner, "mu", int),
            "lam": _get(inner, "lam", int),
            "budget": _get(inner, "budget", int),
        }
    out["inner"] = inner
    out["mean_up"] = _get(spec, "mean_up", (int, float), default=1.001)
    out["mean_down"] = _get(spec, "mean_down", (int, float), default=0.999)
    out["initial_mean"] = _get(spec, "initial_mean", (int, float), default=None)
    out["velocity_up"] = _get(spec, "velocity_up", (int, float), default=2.0)
    out["velocity_down"] = _get(spec, "velocity_down", (int, float), default=0.5)
    out["mu"] = _get(spec, "mu", int, default=None)
    out["chain_len"] = _get(spec, "chain_len", int, default=10)
    out["chain_grow"] = _get(spec, "chain_grow", (int, float), default=2.0)
    out["chain_shrink"] = _get(spec, "chain_shrink", (int, float), default=1.2)
    out["repetitions"] = _get(spec, "repetitions", int, default=default_reps)
    if out["repetitions"] < 1:
        raise ConfigError(f"{_where(spec)}: repetitions must be positive")
    name = _get(spec, "name", str, default=None)
    if name is None:
        bits = [kind]
        if kind in ("one_plus_lambda_ea", "one_plus_lambda_lambda_ea", "ea_ab", "umda"):
            bits.append(f"lam{out['lam']}")
        if kind in ("one_plus_lambda_ea", "one_plus_lambda_lambda_ea") and out["mutation"] == "distance_driven":
            bits.append("dd")
        name = "_".join(bits)
    out["name"] = name
    return out


def expand_config(raw: dict) -> dict:
    """Resolve defaults, expand sugar, and validate the whole experiment."""
    _no_extra_keys(raw, ("seed", "budget", "repetitions", "output_dir", "problems", "algorithms"), "top-level")
    seed = _get(raw, "seed", int)
    reps = _get(raw, "repetitions", int, default=1)
    if reps < 1:
        raise ConfigError(f"{_where(raw)}: repetitions must be positive")
    output_dir = _get(raw, "output_dir", str, default="results")

    budget_spec = _expect_mapping(_get(raw, "budget", dict), "budget")
    _no_extra_keys(budget_spec, ("max_fitness_evals", "max_iterations"), "budget")
    max_evals = _get(budget_spec, "max_fitness_evals", int, default=None)
    max_iters = _get(budget_spec, "max_iterations", int, default=None)
    if max_evals is None and max_iters is None:
        raise ConfigError(f"{_where(budget_spec)}: budget needs max_fitness_evals or max_iterations")
    for label, cap in (("max_fitness_evals", max_evals), ("max_iterations", max_iters)):
        if cap is not None and cap < 1:
            raise ConfigError(f"{_where(budget_spec)}: {label} must be positive")

    problems_spec = _get(raw, "problems", list)
    if not problems_spec:
        raise ConfigError(f"{_where(raw)}: problems must be a non-empty list")
    problems: List[dict] = []
    for spec in problems_spec:
        problems.extend(_expand_problem(spec))
    names = [p["name"] for p in problems]
    if len(set(names)) != len(names):
        raise ConfigError("config: duplicate problem names after expansion")

    algorithms_spec = _get(raw, "algorithms", list)
    if not algorithms_spec:
        raise ConfigError(f"{_where(raw)}: algorithms must be a non-empty list")
    algorithms = [_expand_algorithm(spec, reps) for spec in algorithms_spec]
    anames = [a["name"] for a in algorithms]
    if len(set(anames)) != len(anames):
        raise ConfigError("config: duplicate algorithm names; set explicit name fields")

    canon = {
        "seed": seed,
        "budget": {"max_fitness_evals": max_evals, "max_iterations": max_iters},
        "repetitions": reps,
        "output_dir": output_dir,
        "problems": problems,
        "algorithms": algorithms,
    }
    for prob in problems:
        build_problem(prob)
    for alg in algorithms:
        build_solver_config(alg)
    return canon


def config_digest(canon: dict) -> str:
    """Digest of the science-relevant part of the expanded config."""
    payload = {k: v for k, v in canon.items() if k != "output_dir"}
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


# - object construction --------------------------------------------------


def build_problem(spec: dict) -> Problem:
    kind = spec["kind"]
    try:
        if kind == "onemax":
            return OneMax(spec["n"])
        if kind == "ruggedness":
            return Ruggedness(spec["n"], spec["v"])
        if kind == "integer":
            return make_integer_problem(
                spec["base"],
                spec["n"],
                spec["c"],
                seed=spec["seed"],
                permutation_seed=spec["permutation_seed"],
            )
    except (ValueError, AssertionError) as exc:
        raise ConfigError(f"config: bad problem {spec.get('name', kind)!r}: {exc}") from exc
    raise ConfigError(f"config: unknown problem kind {kind!r}")


def build_solver_config(spec: dict) -> SolverConfig:
    inner = spec.get("inner")
    try:
        inner_cfg = None if inner is None else UmdaConfig(inner["mu"], inner["lam"], inner["budget"])
        return SolverConfig(
            kind=spec["kind"],
            lam=spec["lam"],
            crossover_bias=spec["crossover_bias"],
            mutation=spec["mutation"],
            mutation_rate=spec["mutation_rate"],
            step_trials=spec["step_trials"],
            step_prob=spec["step_prob"],
            inner=inner_cfg,
            mean_up=spec["mean_up"],
            mean_down=spec["mean_down"],
            initial_mean=spec["initial_mean"],
            velocity_up=spec["velocity_up"],
            velocity_down=spec["velocity_down"],
            mu=spec["mu"],
            chain_len=spec["chain_len"],
            chain_grow=spec["chain_grow"],
            chain_shrink=spec["chain_shrink"],
        )
    except ValueError as exc:
        raise ConfigError(f"config: bad algorithm {spec.get('name', spec.get('kind'))!r}: {exc}") from exc


# - running --------------------------------------------------------------


def _fmt(value: Optional[float]) -> str:
    return "" if value is None else repr(float(value))


def _seed_key(master: int, pi: int, ai: int, ri: int) -> Tuple[int, int, int, int]:
    return (master, pi, ai, ri)


def _seed_str(key: Tuple[int, ...]) -> str:
    return "-".join(str(k) for k in key)


def _run_id(problem_name: str, alg_name: str, ri: int) -> str:
    return f"{problem_name}__{alg_name}__r{ri}"


def _trace_csv(run_id: str, seed_str: str, digest: str, problem_name: str, alg_name: str, record: RunRecord) -> str:
    buf = io.StringIO()
    buf.write(f"# seed: {seed_str}\n")
    buf.write(f"# config_digest: {digest}\n")
    buf.write(f"# problem: {problem_name}\n")
    buf.write(f"# algorithm: {alg_name}\n")
    transform = record.metadata.get("transform")
    if transform:
        parts = " ".join(f"{k}={_fmt(v)}" for k, v in sorted(transform.items()))
        buf.write(f"# transform: {parts}\n")
    buf.write(CSV_HEADER + "\n")
    for row in record.rows:
        buf.write(
            f"{run_id},{seed_str},{row.iteration},{row.evaluations},"
            f"{_fmt(row.best_fitness)},{_fmt(row.mean_param)},\n"
        )
    return buf.getvalue()


def _write_atomic(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def _run_cell(canon: dict, digest: str, pi: int, ai: int, ri: int, output_dir: str) -> dict:
    prob_spec = canon["problems"][pi]
    alg_spec = canon["algorithms"][ai]
    run_id = _run_id(prob_spec["name"], alg_spec["name"], ri)
    key = _seed_key(canon["seed"], pi, ai, ri)
    cell = {
        "run_id": run_id,
        "problem": prob_spec["name"],
        "algorithm": alg_spec["name"],
        "seed_key": list(key),
        "csv": f"{run_id}.csv",
    }
    try:
        problem = build_problem(prob_spec)
        solver = build_solver_config(alg_spec)
        runner = build_runner(solver)
        budget = Budget(
            max_fitness_evals=canon["budget"]["max_fitness_evals"],
            max_iterations=canon["budget"]["max_iterations"],
        )
        rng = RngStream.from_seed(*key)
        record = runner(problem, problem.natural_metric(), budget, rng)
    except Exception as exc:  # noqa: BLE001 - a cell failure must not kill the sweep
        cell["status"] = f"error: {type(exc).__name__}: {exc}"
        return cell
    text = _trace_csv(run_id, _seed_str(key), digest, prob_spec["name"], alg_spec["name"], record)
    _write_atomic(Path(output_dir) / cell["csv"], text)
    cell["status"] = "ok"
    cell["best_fitness"] = record.best_fitness
    cell["iterations"] = record.iterations
    cell["evaluations"] = record.evaluations
    cell["distance_evaluations"] = record.distance_evaluations
    return cell


def _worker_count() -> int:
    raw = os.environ.get("DDMUT_WORKERS", "1")
    try:
        count = int(raw)
    except ValueError:
        raise BenchError(f"DDMUT_WORKERS must be an integer, got {raw!r}")
    return max(1, count)


def run_bench(canon: dict, output_dir: Optional[str] = None, workers: Optional[int] = None) -> dict:
    """Run every cell of an expanded config and write traces plus a manifest.

    Returns the manifest. Cells that raise are recorded with an error status
    instead of aborting the sweep.
    """
    digest = config_digest(canon)
    out = Path(output_dir if output_dir is not None else canon["output_dir"])
    out.mkdir(parents=True, exist_ok=True)
    if workers is None:
        workers = _worker_count()
    indices = [
        (pi, ai, ri)
        for pi in range(len(canon["problems"]))
        for ai in range(len(canon["algorithms"]))
        for ri in range(canon["algorithms"][ai]["repetitions"])
    ]
    cells: List[Optional[dict]] = [None] * len(indices)
    if workers <= 1:
        for slot, (pi, ai, ri) in enumerate(indices):
            cells[slot] = _run_cell(canon, digest, pi, ai, ri, str(out))
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(_run_cell, canon, digest, pi, ai, ri, str(out))
                for (pi, ai, ri) in indices
            ]
            for slot, fut in enumerate(futures):
                cells[slot] = fut.result()
    manifest = {
        "config_digest": digest,
        "seed": canon["seed"],
        "config": canon,
        "cells": cells,
    }
    _write_atomic(out / "manifest.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest


# - aggregation ----------------------------------------------------------


def read_run_csv(path: str | Path) -> Tuple[dict, List[dict]]:
    """Parse one trace file into its preamble mapping and row dicts."""
    meta: Dict[str, str] = {}
    body: List[str] = []
    for line in Path(path).read_text().splitlines():
        if line.startswith("#"):
            key, _, value = line[1:].partition(":")
            meta[key.strip()] = value.strip()
        else:
            body.append(line)
    if not body or body[0] != CSV_HEADER:
        raise BenchError(f"{path}: missing or unexpected header")
    rows = []
    for rec in csv.DictReader(io.StringIO("\n".join(body))):
        rows.append(
            {
                "run_id": rec["run_id"],
                "iteration": int(rec["iteration"]),
                "evaluations": int(rec["evaluations"]),
                "best_fitness": float(rec["best_fitness"]),
                "mean_param": None if rec["mean_param"] == "" else float(rec["mean_param"]),
            }
        )
    if not rows:
        raise BenchError(f"{path}: no data rows")
    return meta, rows


def _first_hit(rows: List[dict], target: float) -> Tuple[Optional[int], Optional[int]]:
    for row in rows:
        if row["best_fitness"] >= target:
            return row["evaluations"], row["iteration"]
    return None, None


def _best_at(rows: List[dict], checkpoint: int) -> float:
    best = -math.inf
    for row in rows:
        if row["evaluations"] <= checkpoint:
            best = row["best_fitness"]
        else:
            break
    return best


def _checkpoint_grid(limit: int) -> List[int]:
    grid = []
    scale = 1
    while scale <= limit:
        for mult in (1, 2, 5):
            value = mult * scale
            if value <= limit:
                grid.append(value)
        scale *= 10
    if not grid or grid[-1] != limit:
        grid.append(limit)
    return grid


def aggregate_dir(results_dir: str | Path, out_dir: Optional[str | Path] = None) -> List[Path]:
    """Summarize a results directory into targets, checkpoints, and p-values.

    Every trace must carry the manifest's config digest; mixing outputs from
    different configs is refused. Runs that never reach a target contribute
    their final totals as censored values and are counted separately.
    """
    from scipy.stats import mannwhitneyu

    results = Path(results_dir)
    manifest_path = results / "manifest.json"
    if not manifest_path.exists():
        raise BenchError(f"{manifest_path} not found; aggregate needs a completed run directory")
    manifest = json.loads(manifest_path.read_text())
    digest = manifest["config_digest"]
    out = Path(out_dir) if out_dir is not None else results / "aggregate"
    out.mkdir(parents=True, exist_ok=True)

    # runs[problem][algorithm] -> list of row lists, in manifest order
    runs: Dict[str, Dict[str, List[List[dict]]]] = {}
    skipped = 0
    for cell in manifest["cells"]:
        if cell["status"] != "ok":
            skipped += 1
            continue
        meta, rows = read_run_csv(results / cell["csv"])
        if meta.get("config_digest") != digest:
            raise BenchError(
                f"{cell['csv']}: config digest {meta.get('config_digest')!r} does not match manifest {digest!r}"
            )
        runs.setdefault(cell["problem"], {}).setdefault(cell["algorithm"], []).append(rows)
    if not runs:
        raise BenchError("no successful runs to aggregate")

    target_lines = ["problem,algorithm,target,reached,total,median_evals,median_iterations"]
    checkpoint_lines = ["problem,algorithm,checkpoint,runs,median_best,mean_best"]
    pvalue_lines = ["problem,target,algorithm_a,algorithm_b,median_evals_a,median_evals_b,p_value"]

    for problem in sorted(runs):
        by_alg = runs[problem]
        finals = {alg: [rows[-1]["best_fitness"] for rows in all_rows] for alg, all_rows in by_alg.items()}
        targets = sorted({v for vals in finals.values() for v in vals if math.isfinite(v)})
        for alg in sorted(by_alg):
            for target in targets:
                evals, iters, reached = [], [], 0
                for rows in by_alg[alg]:
                    e, i = _first_hit(rows, target)
                    if e is None:
                        evals.append(rows[-1]["evaluations"])
                        iters.append(rows[-1]["iteration"])
                    else:
                        reached += 1
                        evals.append(e)
                        iters.append(i)
                target_lines.append(
                    f"{problem},{alg},{_fmt(target)},{reached},{len(by_alg[alg])},"
                    f"{_fmt(float(np.median(evals)))},{_fmt(float(np.median(iters)))}"
                )

        limit = max(rows[-1]["evaluations"] for all_rows in by_alg.values() for rows in all_rows)
        grid = _checkpoint_grid(limit)
        for alg in sorted(by_alg):
            for checkpoint in grid:
                bests = [_best_at(rows, checkpoint) for rows in by_alg[alg]]
                bests = [b for b in bests if math.isfinite(b)]
                if not bests:
                    continue
                checkpoint_lines.append(
                    f"{problem},{alg},{checkpoint},{len(bests)},"
                    f"{_fmt(float(np.median(bests)))},{_fmt(float(np.mean(bests)))}"
                )

        if targets:
            top = targets[-1]
            names = sorted(by_alg)
            censored = {}
            for alg in names:
                vals = []
                for rows in by_alg[alg]:
                    e, _ = _first_hit(rows, top)
                    vals.append(rows[-1]["evaluations"] if e is None else e)
                censored[alg] = vals
            for i, a in enumerate(names):
                for b in names[i + 1 :]:
                    xa, xb = censored[a], censored[b]
                    try:
                        p = float(mannwhitneyu(xa, xb, alternative="two-sided").pvalue)
                    except ValueError:
                        p = math.nan
                    pvalue_lines.append(
                        f"{problem},{_fmt(top)},{a},{b},"
                        f"{_fmt(float(np.median(xa)))},{_fmt(float(np.median(xb)))},{_fmt(p)}"
                    )

    paths = []
    for name, lines in (
        ("targets.csv", target_lines),
        ("checkpoints.csv", checkpoint_lines),
        ("pvalues.csv", pvalue_lines),
    ):
        path = out / name
        _write_atomic(path, "\n".join(lines) + "\n")
        paths.append(path)
    return paths
