"""Batch experiment driver: solver grids over privacy budgets, CSV emission.

A run (1) ingests a LIBSVM dataset and clips every sample onto the unit ball
(fixing the per-sample gradient bound at 1), (2) builds the fused-lasso
constraint matrix A = [W; I] from correlation thresholding, (3) solves a long
non-private accelerated reference to define the "minimum value" baseline and
the optimality-gap reference point, then (4) sweeps algorithm x epsilon x
repeat, calibrating noise per budget, writing one trace CSV per run and a
summary CSV of per-cell means and standard deviations.

Everything except wall-clock timings is reproducible from base_seed: per-run
seeds hash the run coordinates, so repeats are independent while the grid as
a whole is deterministic.
"""

from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .accounting import PrivacyBudget, calibrate_noise
from .datasets import Dataset, load_libsvm, normalize_rows, split
from .problems import ErmProblem, build_fused_lasso_constraints, build_graph_w, objective, r_criterion
from .solvers import SolverConfig, TraceRecord, accuracy, solve

ALGORITHMS = ("admm", "acc_admm", "dp_admm", "dp_acc_admm")
PRIVATE = frozenset({"dp_admm", "dp_acc_admm"})
ACCELERATED = frozenset({"acc_admm", "dp_acc_admm"})


class ConfigError(ValueError):
    """Invalid experiment configuration; the message names the offending key."""


@dataclass
class ExperimentConfig:
    """One experiment grid.  Defaults mirror the published protocol
    (delta = 1e-3, mu = 0.5, rho = 1, lambda = 1e-5); eta has no published
    value and defaults to a grid-searched suggestion."""

    dataset_path: str
    test_path: str | None = None
    lam: float = 1e-5
    delta: float = 1e-3
    mu: float = 0.5
    rho: float = 1.0
    eta: float = 1.0
    gamma: float | None = None  # None = auto (theory-safe bound)
    iterations: int = 500
    epsilon_grid: tuple[float, ...] = (0.01, 0.1, 1.0)
    algorithms: tuple[str, ...] = ALGORITHMS
    repeats: int = 1
    base_seed: int = 0
    graph_threshold: float = 0.5
    output_dir: str = "results"

    def __post_init__(self):
        if not self.dataset_path:
            raise ConfigError("dataset_path: required")
        if not 0.0 < self.delta < 1.0:
            raise ConfigError(f"delta: {self.delta} outside (0, 1)")
        if not 0.0 < self.mu < 1.0:
            raise ConfigError(f"mu: {self.mu} outside (0, 1)")
        if not self.rho > 0:
            raise ConfigError(f"rho: {self.rho} must be positive")
        if not self.eta > 0:
            raise ConfigError(f"eta: {self.eta} must be positive")
        if self.lam < 0:
            raise ConfigError(f"lambda: {self.lam} must be non-negative")
        if self.iterations < 1:
            raise ConfigError(f"iterations: {self.iterations} must be >= 1")
        if not self.epsilon_grid or any(e <= 0 for e in self.epsilon_grid):
            raise ConfigError(f"epsilon_grid: {self.epsilon_grid} must be non-empty and positive")
        unknown = set(self.algorithms) - set(ALGORITHMS)
        if unknown or not self.algorithms:
            raise ConfigError(f"algorithms: unknown {sorted(unknown)}; valid: {ALGORITHMS}")
        if self.repeats < 1:
            raise ConfigError(f"repeats: {self.repeats} must be >= 1")
        if not 0.0 < self.graph_threshold < 1.0:
            raise ConfigError(f"graph_threshold: {self.graph_threshold} outside (0, 1)")


_KEY_TYPES = {
    "dataset_path": str,
    "test_path": str,
    "lambda": float,
    "delta": float,
    "mu": float,
    "rho": float,
    "eta": float,
    "gamma_mode": str,
    "iterations": int,
    "epsilon_grid": str,
    "algorithms": str,
    "repeats": int,
    "base_seed": int,
    "graph_threshold": float,
    "output_dir": str,
}


def load_config(path: str | os.PathLike) -> ExperimentConfig:
    """Parse a flat ``key = value`` config file; ``#`` comments, lists comma-separated."""
    raw: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            body = line.split("#", 1)[0].strip()
            if not body:
                continue
            key, sep, value = body.partition("=")
            if not sep:
                raise ConfigError(f"line {line_no}: expected 'key = value', got {body!r}")
            key, value = key.strip(), value.strip()
            if key not in _KEY_TYPES:
                raise ConfigError(f"{key}: unknown key (line {line_no})")
            raw[key] = value

    kwargs: dict = {}
    for key, value in raw.items():
        kind = _KEY_TYPES[key]
        if kind in (int, float):
            try:
                kwargs_value = kind(value)
            except ValueError:
                raise ConfigError(f"{key}: {value!r} is not a {kind.__name__}") from None
        else:
            kwargs_value = value
        kwargs[key] = kwargs_value

    if "lambda" in kwargs:
        kwargs["lam"] = kwargs.pop("lambda")
    if "epsilon_grid" in kwargs:
        try:
            kwargs["epsilon_grid"] = tuple(float(tok) for tok in kwargs["epsilon_grid"].split(","))
        except ValueError:
            raise ConfigError(f"epsilon_grid: {kwargs['epsilon_grid']!r} is not a comma-separated float list") from None
    if "algorithms" in kwargs:
        kwargs["algorithms"] = tuple(tok.strip() for tok in kwargs["algorithms"].split(",") if tok.strip())
    if "gamma_mode" in kwargs:
        mode = kwargs.pop("gamma_mode")
        if mode == "auto":
            kwargs["gamma"] = None
        else:
            try:
                kwargs["gamma"] = float(mode)
            except ValueError:
                raise ConfigError(f"gamma_mode: {mode!r} is neither 'auto' nor a number") from None
    if "test_path" in kwargs and not kwargs["test_path"]:
        kwargs["test_path"] = None
    if "dataset_path" not in kwargs:
        raise ConfigError("dataset_path: required")
    return ExperimentConfig(**kwargs)


def run_seed(base_seed: int, algorithm: str, epsilon: float | None, repeat: int) -> int:
    """Stable per-run seed: base_seed XOR a hash of the run coordinates."""
    tag = f"{algorithm}|{'' if epsilon is None else repr(float(epsilon))}|{repeat}"
    digest = hashlib.blake2b(tag.encode(), digest_size=8).digest()
    return (base_seed ^ int.from_bytes(digest, "big")) & (2**63 - 1)


def format_real(value: float) -> str:
    return f"{value:.17g}"


def emit_trace_csv(trace: Sequence[TraceRecord], path: str | os.PathLike) -> None:
    """Write a trace with header ``iter,objective,constraint_violation,
    elapsed_seconds,r_value``; reals carry 17 significant digits, a missing
    r_value renders empty."""
    lines = ["iter,objective,constraint_violation,elapsed_seconds,r_value"]
    for record in trace:
        r_text = "" if record.r_value is None else format_real(record.r_value)
        lines.append(
            f"{record.iter},{format_real(record.objective)},"
            f"{format_real(record.constraint_violation)},"
            f"{format_real(record.elapsed_seconds)},{r_text}"
        )
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write("\n".join(lines) + "\n")


def parse_trace_csv(path: str | os.PathLike) -> list[TraceRecord]:
    """Read back a trace written by :func:`emit_trace_csv`."""
    records = []
    with open(path, "r", encoding="utf-8") as handle:
        header = handle.readline().strip()
        if header != "iter,objective,constraint_violation,elapsed_seconds,r_value":
            raise ValueError(f"{path}: unexpected trace header {header!r}")
        for line in handle:
            it, obj, viol, elapsed, r_text = line.rstrip("\n").split(",")
            records.append(
                TraceRecord(
                    iter=int(it),
                    objective=float(obj),
                    constraint_violation=float(viol),
                    elapsed_seconds=float(elapsed),
                    r_value=None if r_text == "" else float(r_text),
                )
            )
    return records


@dataclass
class SummaryRow:
    algorithm: str
    epsilon: float | None
    repeats: int
    obj_mean: float
    obj_std: float
    acc_mean: float
    acc_std: float
    r_mean: float


@dataclass
class ExperimentResult:
    summary: list[SummaryRow]
    reference_objective: float
    output_dir: Path
    run_count: int = 0
    trace_files: list[Path] = field(default_factory=list)


def _summary_lines(rows: Iterable[SummaryRow]) -> list[str]:
    lines = ["algorithm,epsilon,repeats,obj_mean,obj_std,acc_mean,acc_std,r_mean"]
    for row in rows:
        eps_text = "" if row.epsilon is None else repr(row.epsilon)
        lines.append(
            f"{row.algorithm},{eps_text},{row.repeats},"
            f"{format_real(row.obj_mean)},{format_real(row.obj_std)},"
            f"{format_real(row.acc_mean)},{format_real(row.acc_std)},"
            f"{format_real(row.r_mean)}"
        )
    return lines


def _load_datasets(config: ExperimentConfig) -> tuple[Dataset, Dataset]:
    train = normalize_rows(load_libsvm(config.dataset_path))
    if config.test_path is not None:
        test = normalize_rows(load_libsvm(config.test_path, expected_dim=train.n_features))
    else:
        train, test = split(train, 0.2, config.base_seed)
    return train, test


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    """Execute the full grid; see the module docstring for the protocol."""
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    train, test = _load_datasets(config)
    w = build_graph_w(train, config.graph_threshold)
    constraints = build_fused_lasso_constraints(w)
    problem = ErmProblem(data=train, constraints=constraints, lam=config.lam, clip=1.0)
    d1 = train.n_features

    reference_cfg = SolverConfig(
        eta=config.eta,
        rho=config.rho,
        iterations=10 * config.iterations,
        gamma=config.gamma,
        seed=config.base_seed,
        accelerate=True,
    )
    ref_period = max(1, reference_cfg.iterations // 200)
    ref = solve(problem, reference_cfg, eval_period=ref_period)
    x_star, y_star = ref.x, ref.y
    reference_objective = objective(x_star, y_star, problem)
    trace_files = [out_dir / "reference.csv"]
    emit_trace_csv(ref.trace, trace_files[0])

    eval_period = max(1, config.iterations // 200)
    summary: list[SummaryRow] = []
    run_count = 0
    for algorithm in (a for a in ALGORITHMS if a in config.algorithms):
        grid: tuple[float | None, ...] = tuple(config.epsilon_grid) if algorithm in PRIVATE else (None,)
        for epsilon in grid:
            objs, accs, rs = [], [], []
            for repeat in range(config.repeats):
                noise = None
                if epsilon is not None:
                    budget = PrivacyBudget(epsilon=epsilon, delta=config.delta, mu=config.mu)
                    noise = calibrate_noise(
                        budget, config.iterations, train.n_samples, clip=problem.clip, dim=d1
                    )
                solver_cfg = SolverConfig(
                    eta=config.eta,
                    rho=config.rho,
                    iterations=config.iterations,
                    gamma=config.gamma,
                    seed=run_seed(config.base_seed, algorithm, epsilon, repeat),
                    noise=noise,
                    accelerate=algorithm in ACCELERATED,
                )
                result = solve(
                    problem, solver_cfg, eval_period=eval_period, reference=(x_star, y_star)
                )
                run_count += 1
                eps_tag = "" if epsilon is None else f"_eps{epsilon:g}"
                trace_path = out_dir / f"{algorithm}{eps_tag}_rep{repeat}.csv"
                emit_trace_csv(result.trace, trace_path)
                trace_files.append(trace_path)
                objs.append(objective(result.x, result.y, problem))
                accs.append(accuracy(result.x, test))
                rs.append(r_criterion(result.x_avg, result.y_avg, x_star, y_star, problem))
            summary.append(
                SummaryRow(
                    algorithm=algorithm,
                    epsilon=epsilon,
                    repeats=config.repeats,
                    obj_mean=float(np.mean(objs)),
                    obj_std=float(np.std(objs)),
                    acc_mean=float(np.mean(accs)),
                    acc_std=float(np.std(accs)),
                    r_mean=float(np.mean(rs)),
                )
            )

    with open(out_dir / "summary.csv", "w", encoding="utf-8", newline="\n") as handle:
        handle.write("\n".join(_summary_lines(summary)) + "\n")

    return ExperimentResult(
        summary=summary,
        reference_objective=reference_objective,
        output_dir=out_dir,
        run_count=run_count,
        trace_files=trace_files,
    )


def summary_table(rows: Sequence[SummaryRow]) -> str:
    """Fixed-width rendering of the summary for terminal output."""
    header = f"{'algorithm':<12} {'epsilon':>8} {'repeats':>7} {'obj_mean':>12} {'obj_std':>10} {'acc_mean':>9} {'acc_std':>8} {'r_mean':>11}"
    out = [header, "-" * len(header)]
    for row in rows:
        eps = "-" if row.epsilon is None else f"{row.epsilon:g}"
        out.append(
            f"{row.algorithm:<12} {eps:>8} {row.repeats:>7} {row.obj_mean:>12.6f} "
            f"{row.obj_std:>10.3e} {row.acc_mean:>9.4f} {row.acc_std:>8.3e} {row.r_mean:>11.4e}"
        )
    return "\n".join(out)
