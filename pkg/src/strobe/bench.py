"""Benchmark harness: experiment plans, run records, aggregation, reports.

A plan is a cross product of scenario/scheme/optimizer/workers/waypoints
lists; every cell runs `repetitions` times with seeds base_seed..base_seed+
repetitions-1.  Seeds drive the initial conditions, so every scheme in a
cell sees exactly the same starting paths.  Wall time covers the scheme call
only.  The report path writes the per-run CSV, an aggregated summary CSV and
(unless disabled) one PNG figure per scenario with mean +/- standard-error
bars.  The harness itself stays single threaded; parallelism lives inside
the schemes.
"""
from __future__ import annotations

import csv
import json
import math
import time
from dataclasses import dataclass, field, fields, replace
from functools import partial
from pathlib import Path

import numpy as np

from .baselines import SchemeConfig, gsgd_optimize, prr_optimize, single_thread_optimize
from .meta import StrobeConfig, strobe_optimize
from .optimizers import ALGORITHMS, OptimizerConfig
from .scenarios import SCENARIO_NAMES, ScenarioSpec, build_model, initial_path, quality_metric

PLAN_SCHEMES = ("strobe", "single", "prr", "gsgd")

CSV_COLUMNS = (
    "scenario", "scheme", "optimizer", "workers", "waypoints", "seed",
    "wall_time", "converged", "quality", "final_objective", "epochs", "error",
)

_SINGLE_THREAD_ITERATION_CAP = 1_000_000


@dataclass(frozen=True)
class ExperimentPlan:
    scenarios: tuple = ("circle-grid",)
    schemes: tuple = ("strobe", "single")
    optimizers: tuple = ("gradient-descent-backtracking",)
    workers: tuple = (4,)
    waypoints: tuple = (100,)
    repetitions: int = 20
    base_seed: int = 0
    time_limit: float = 60.0
    ell: int = 3
    max_epochs: int = 60
    inner_iterations: int = 30
    path_tolerance: float = 1e-4
    objective_tolerance: float = 1e-6
    prr_serialized: bool = False

    def __post_init__(self):
        for name in ("scenarios", "schemes", "optimizers", "workers", "waypoints"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        for s in self.scenarios:
            if s not in SCENARIO_NAMES:
                raise ValueError(f"unknown scenario {s!r}")
        for s in self.schemes:
            if s not in PLAN_SCHEMES:
                raise ValueError(f"unknown scheme {s!r}; one of {PLAN_SCHEMES}")
        for o in self.optimizers:
            if o not in ALGORITHMS:
                raise ValueError(f"unknown optimizer {o!r}")
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")

    @classmethod
    def from_mapping(cls, data: dict) -> "ExperimentPlan":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown plan keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_file(cls, path) -> "ExperimentPlan":
        path = Path(path)
        text = path.read_text(encoding="utf-8")
        if path.suffix.lower() == ".json":
            data = json.loads(text)
        else:
            try:
                import tomllib
            except ModuleNotFoundError:
                import tomli as tomllib
            data = tomllib.loads(text)
        return cls.from_mapping(data)


@dataclass(eq=False)
class RunRecord:
    scenario: str
    scheme: str
    optimizer: str
    workers: int
    waypoints: int
    seed: int
    wall_time: float
    converged: bool
    quality: float
    final_objective: float
    epochs: int
    error: str = ""

    def as_row(self) -> list:
        return [
            self.scenario, self.scheme, self.optimizer, str(self.workers),
            str(self.waypoints), str(self.seed), repr(self.wall_time),
            str(self.converged).lower(), repr(self.quality),
            repr(self.final_objective), str(self.epochs), self.error,
        ]


def _strobe_config(plan: ExperimentPlan, optimizer: str, workers: int) -> StrobeConfig:
    # pods stop one order of magnitude below the epoch-level criteria, so
    # late epochs get cheap instead of burning the full inner budget
    inner = OptimizerConfig(
        algorithm=optimizer, max_inner_iterations=plan.inner_iterations,
        step_tolerance=plan.path_tolerance / 10.0,
        objective_tolerance=plan.objective_tolerance / 10.0,
    )
    return StrobeConfig(
        workers=workers, ell=plan.ell, max_epochs=plan.max_epochs,
        path_tolerance=plan.path_tolerance,
        objective_tolerance=plan.objective_tolerance,
        inner=inner, time_limit=plan.time_limit,
    )


def _single_config(plan: ExperimentPlan, optimizer: str) -> SchemeConfig:
    # the single-threaded reference runs to its own convergence: huge
    # iteration cap, stopping driven by tolerances or the time limit
    inner = OptimizerConfig(
        algorithm=optimizer, max_inner_iterations=_SINGLE_THREAD_ITERATION_CAP,
        step_tolerance=plan.path_tolerance,
        objective_tolerance=plan.objective_tolerance,
    )
    return SchemeConfig(scheme="single-thread", ell=plan.ell, inner=inner,
                        max_epochs=plan.max_epochs,
                        path_tolerance=plan.path_tolerance,
                        objective_tolerance=plan.objective_tolerance,
                        time_limit=plan.time_limit)


def _baseline_config(plan: ExperimentPlan, scheme: str, optimizer: str,
                     workers: int) -> SchemeConfig:
    if scheme == "prr":
        inner = OptimizerConfig(
            algorithm=optimizer,
            max_inner_iterations=_SINGLE_THREAD_ITERATION_CAP,
            step_tolerance=plan.path_tolerance,
            objective_tolerance=plan.objective_tolerance,
        )
        return SchemeConfig(scheme="prr", workers=workers, ell=plan.ell,
                            inner=inner, max_epochs=plan.max_epochs,
                            path_tolerance=plan.path_tolerance,
                            objective_tolerance=plan.objective_tolerance,
                            time_limit=plan.time_limit,
                            serialized=plan.prr_serialized)
    return SchemeConfig(
        scheme="gsgd", workers=workers, ell=plan.ell,
        inner=OptimizerConfig(algorithm=optimizer,
                              max_inner_iterations=plan.inner_iterations),
        max_epochs=plan.max_epochs, path_tolerance=plan.path_tolerance,
        objective_tolerance=plan.objective_tolerance, time_limit=plan.time_limit,
    )


def _prr_initial(spec_args: dict, seed: int):
    return initial_path(ScenarioSpec(**spec_args), seed)


def run_single(plan: ExperimentPlan, scenario: str, scheme: str, optimizer: str,
               workers: int, waypoints: int, seed: int, trace_sink=None) -> RunRecord:
    """One benchmark run; failures are recorded, never raised."""
    spec = ScenarioSpec(name=scenario, waypoints=waypoints, seed=seed)
    record = RunRecord(scenario, scheme, optimizer, workers, waypoints, seed,
                       wall_time=math.nan, converged=False, quality=math.nan,
                       final_objective=math.nan, epochs=0)
    try:
        model = build_model(spec)
        path0 = initial_path(spec)
        start = time.perf_counter()
        if scheme == "strobe":
            final, outcome, traces = strobe_optimize(
                _strobe_config(plan, optimizer, workers), model, path0)
            if trace_sink is not None:
                for tr in traces:
                    trace_sink(tr)
        elif scheme == "single":
            final, outcome = single_thread_optimize(
                _single_config(plan, optimizer), model, path0)
        elif scheme == "prr":
            spec_args = {"name": scenario, "waypoints": waypoints}
            final, outcome = prr_optimize(
                _baseline_config(plan, "prr", optimizer, workers), model,
                partial(_prr_initial, spec_args), seed)
        elif scheme == "gsgd":
            final, outcome = gsgd_optimize(
                _baseline_config(plan, "gsgd", optimizer, workers), model,
                path0, seed)
        else:
            raise ValueError(f"unknown scheme {scheme!r}")
        record.wall_time = time.perf_counter() - start
        record.converged = bool(outcome.converged)
        record.final_objective = float(outcome.final_objective)
        record.epochs = int(outcome.iterations_used)
        record.quality = quality_metric(spec, final)
    except Exception as exc:  # per-run failures must not abort the matrix
        record.error = f"{type(exc).__name__}: {exc}"
        record.converged = False
    return record


def run_experiment(plan: ExperimentPlan, trace_sink=None, progress=None) -> list:
    """Run the full plan matrix in a fixed deterministic order."""
    records = []
    for scenario in plan.scenarios:
        for waypoints in plan.waypoints:
            for scheme in plan.schemes:
                for optimizer in plan.optimizers:
                    for workers in plan.workers:
                        for rep in range(plan.repetitions):
                            seed = plan.base_seed + rep
                            rec = run_single(plan, scenario, scheme, optimizer,
                                             workers, waypoints, seed, trace_sink)
                            records.append(rec)
                            if progress is not None:
                                progress(rec)
    return records


@dataclass(eq=False)
class CellSummary:
    scenario: str
    scheme: str
    optimizer: str
    workers: int
    waypoints: int
    count: int
    errors: int
    wall_time_mean: float
    wall_time_se: float
    quality_mean: float
    quality_se: float
    converged_fraction: float
    single_sample: bool


def _mean_se(values) -> tuple:
    arr = np.asarray(values, dtype=np.float64)
    mean = float(arr.mean())
    if arr.size > 1:
        return mean, float(arr.std(ddof=1) / math.sqrt(arr.size))
    return mean, 0.0


def aggregate(records) -> list:
    """Group records by cell and attach mean / standard error statistics.

    Cells whose statistics rest on a single sample are flagged, and runs
    that errored are counted but excluded from the numbers.
    """
    if not records:
        raise ValueError("no records to aggregate")
    groups = {}
    for r in records:
        key = (r.scenario, r.scheme, r.optimizer, r.workers, r.waypoints)
        groups.setdefault(key, []).append(r)
    out = []
    for key in sorted(groups):
        cell = groups[key]
        good = [r for r in cell if not r.error]
        errors = len(cell) - len(good)
        if good:
            wt_mean, wt_se = _mean_se([r.wall_time for r in good])
            q_mean, q_se = _mean_se([r.quality for r in good])
            conv = sum(1 for r in good if r.converged) / len(good)
        else:
            wt_mean = wt_se = q_mean = q_se = math.nan
            conv = 0.0
        out.append(CellSummary(*key, count=len(good), errors=errors,
                               wall_time_mean=wt_mean, wall_time_se=wt_se,
                               quality_mean=q_mean, quality_se=q_se,
                               converged_fraction=conv,
                               single_sample=len(good) == 1))
    return out


def write_records_csv(records, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for r in records:
            writer.writerow(r.as_row())


def read_records_csv(path) -> list:
    records = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            records.append(RunRecord(
                scenario=row["scenario"], scheme=row["scheme"],
                optimizer=row["optimizer"], workers=int(row["workers"]),
                waypoints=int(row["waypoints"]), seed=int(row["seed"]),
                wall_time=float(row["wall_time"]),
                converged=row["converged"] == "true",
                quality=float(row["quality"]),
                final_objective=float(row["final_objective"]),
                epochs=int(row["epochs"]), error=row["error"],
            ))
    return records


_SUMMARY_COLUMNS = (
    "scenario", "scheme", "optimizer", "workers", "waypoints", "count", "errors",
    "wall_time_mean", "wall_time_se", "quality_mean", "quality_se",
    "converged_fraction", "single_sample",
)


def write_summary_csv(summaries, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(_SUMMARY_COLUMNS)
        for s in summaries:
            writer.writerow([
                s.scenario, s.scheme, s.optimizer, str(s.workers), str(s.waypoints),
                str(s.count), str(s.errors), repr(s.wall_time_mean),
                repr(s.wall_time_se), repr(s.quality_mean), repr(s.quality_se),
                repr(s.converged_fraction), str(s.single_sample).lower(),
            ])


def render_summary_figures(summaries, out_dir, stem: str = "summary") -> list:
    """One PNG per scenario: quality and wall-time bars with SE whiskers."""
    from matplotlib.figure import Figure

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    by_scenario = {}
    for s in summaries:
        by_scenario.setdefault(s.scenario, []).append(s)
    paths = []
    for scenario in sorted(by_scenario):
        cells = by_scenario[scenario]
        labels = [
            f"{c.scheme}/{c.optimizer}\nT={c.workers} M={c.waypoints}" for c in cells
        ]
        fig = Figure(figsize=(max(6.0, 1.3 * len(cells)), 7.0))
        ax_q, ax_t = fig.subplots(2, 1)
        xs = np.arange(len(cells))
        ax_q.bar(xs, [c.quality_mean for c in cells],
                 yerr=[c.quality_se for c in cells], capsize=4, color="#5a87c5")
        ax_q.set_ylabel("quality (mean +/- SE)")
        ax_q.set_xticks(xs)
        ax_q.set_xticklabels(labels, fontsize=7)
        ax_t.bar(xs, [c.wall_time_mean for c in cells],
                 yerr=[c.wall_time_se for c in cells], capsize=4, color="#c58a5a")
        ax_t.set_ylabel("wall time s (mean +/- SE)")
        ax_t.set_xticks(xs)
        ax_t.set_xticklabels(labels, fontsize=7)
        fig.suptitle(scenario)
        fig.tight_layout()
        target = out_dir / f"{stem}_{scenario}.png"
        fig.savefig(target, dpi=110)
        paths.append(target)
    return paths
