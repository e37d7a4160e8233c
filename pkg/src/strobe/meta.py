"""The alternating parallel meta-loop.

Each epoch runs two sub-epochs: all blue pods are optimized concurrently
against a frozen snapshot of the path, their blocks are written back, then
the same happens for red pods.  Same-color pods are at least ell indices
apart, and ell is at least the model's stencil radius, so every index a pod
task reads outside its own span belongs to an opposite-color pod that is not
being written this sub-epoch.  Write-backs are disjoint, which makes results
identical whether pods run serially or in worker processes.
"""
from __future__ import annotations

import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
import json
import multiprocessing as mp

import numpy as np

from .objective import ObjectiveModel, RestrictedProblem, _range_cost
from .optimizers import OptimizerConfig, OptimizerOutcome, minimize
from .path import FullPathVector
from .pods import Color, Pod, PodPartition, pods_of_color, split_path

EXECUTORS = ("auto", "serial", "process")


@dataclass(frozen=True)
class StrobeConfig:
    workers: int = 4
    ell: int = 2
    max_epochs: int = 50
    path_tolerance: float = 1e-4
    objective_tolerance: float = 1e-6
    inner: OptimizerConfig = field(default_factory=OptimizerConfig)
    time_limit: float = None
    executor: str = "auto"

    def __post_init__(self):
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.ell < 1:
            raise ValueError("ell must be >= 1")
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be >= 1")
        if self.path_tolerance < 0 or self.objective_tolerance < 0:
            raise ValueError("tolerances must be non-negative")
        if self.executor not in EXECUTORS:
            raise ValueError(f"executor must be one of {EXECUTORS}")
        if self.time_limit is not None and self.time_limit <= 0:
            raise ValueError("time_limit must be positive")


@dataclass(frozen=True)
class EpochTrace:
    epoch: int
    objective_after: float
    max_displacement: float
    sub_epoch_wall_times: tuple

    def to_json(self) -> str:
        return json.dumps(
            {
                "epoch": self.epoch,
                "objective_after": self.objective_after,
                "max_displacement": self.max_displacement,
                "sub_epoch_wall_times": list(self.sub_epoch_wall_times),
            },
            sort_keys=True,
        )


def _converged_arrays(prev: np.ndarray, nxt: np.ndarray, f_prev: float, f_next: float,
                      path_tolerance: float, objective_tolerance: float) -> bool:
    displacement = float(np.max(np.abs(nxt - prev)))
    if displacement < path_tolerance:
        return True
    return abs(f_next - f_prev) < objective_tolerance * (1.0 + abs(f_prev))


def check_convergence(previous: FullPathVector, current: FullPathVector,
                      f_prev: float, f_next: float, config: StrobeConfig) -> bool:
    """True when the epoch moved no waypoint beyond path_tolerance (max over
    waypoints of the infinity norm) or the objective change is below the
    relative objective_tolerance."""
    if previous.waypoints.shape != current.waypoints.shape:
        raise ValueError("paths differ in shape")
    return _converged_arrays(
        previous.waypoints, current.waypoints, f_prev, f_next,
        config.path_tolerance, config.objective_tolerance,
    )


def _deadline_callback(deadline: float, iteration, x, f) -> bool:
    return time.perf_counter() > deadline


def _optimize_block(model: ObjectiveModel, path: FullPathVector, a: int, b: int,
                    inner: OptimizerConfig, deadline: float = None, callback=None):
    """Minimize the restricted objective over block [a, b]; returns the full
    block rows (frozen rows untouched) and the optimizer outcome."""
    problem = RestrictedProblem(model, path, a, b)
    if problem.dimension == 0:
        block = path.waypoints[a:b + 1].copy()
        value = _range_cost(model, path.waypoints, a, b,
                            a == 0 or b == path.last_index)
        return block, OptimizerOutcome(np.empty(0), value, 0, True, 0.0)
    hooks = []
    if deadline is not None:
        hooks.append(partial(_deadline_callback, deadline))
    if callback is not None:
        hooks.append(callback)
    if not hooks:
        combined = None
    elif len(hooks) == 1:
        combined = hooks[0]
    else:
        def combined(iteration, x, f):
            return any(h(iteration, x, f) for h in hooks)
    gradient = None if inner.algorithm == "nelder-mead" else problem.gradient
    outcome = minimize(inner, problem.objective, gradient, problem.initial(),
                       problem.bounds(), combined)
    return problem.block(outcome.final_values), outcome


def optimize_pod(model: ObjectiveModel, snapshot: FullPathVector, pod: Pod,
                 inner: OptimizerConfig) -> np.ndarray:
    """Optimize one pod against a path snapshot; returns the pod's block."""
    block, _ = _optimize_block(model, snapshot, pod.start, pod.end, inner)
    return block


_WORKER = {}


def _init_worker(model, inner):
    _WORKER["model"] = model
    _WORKER["inner"] = inner


def _pod_task(args):
    a, b, arr, frozen, deadline = args
    path = FullPathVector(arr, frozen)
    block, _ = _optimize_block(_WORKER["model"], path, a, b, _WORKER["inner"], deadline)
    return a, block


class _SerialExecutor:
    """Drop-in stand-in for ProcessPoolExecutor that runs tasks inline."""

    def __init__(self, model, inner):
        _init_worker(model, inner)

    def map(self, fn, tasks):
        return [fn(t) for t in tasks]

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        return False


def _fork_available() -> bool:
    return sys.platform != "win32" and "fork" in mp.get_all_start_methods()


def _make_executor(config: StrobeConfig, model: ObjectiveModel, parallel_width: int):
    mode = config.executor
    if mode == "auto":
        cpus = os.cpu_count() or 1
        wants = config.workers > 1 and parallel_width > 1 and cpus > 1
        mode = "process" if wants and _fork_available() else "serial"
    if mode == "process":
        if not _fork_available():
            raise RuntimeError("process executor requires fork start method")
        return ProcessPoolExecutor(
            max_workers=min(config.workers, max(parallel_width, 1)),
            mp_context=mp.get_context("fork"),
            initializer=_init_worker,
            initargs=(model, config.inner),
        )
    return _SerialExecutor(model, config.inner)


def strobe_optimize(config: StrobeConfig, model: ObjectiveModel,
                    path: FullPathVector):
    """Run the meta-loop; returns (final_path, outcome, epoch_traces).

    outcome.iterations_used counts epochs.  converged means the epoch-level
    criterion fired before the epoch or time budget ran out.
    """
    if model.stencil_radius > config.ell:
        raise ValueError(
            f"model stencil radius {model.stencil_radius} exceeds ell={config.ell}; "
            "same-color pods would read each other's writes"
        )
    partition = split_path(path.waypoint_count, config.workers, config.ell)
    groups = (pods_of_color(partition, Color.BLUE), pods_of_color(partition, Color.RED))
    width = max(len(g) for g in groups)

    start = time.perf_counter()
    deadline = None if config.time_limit is None else start + config.time_limit
    arr = path.copy_array()
    frozen = path.frozen
    M = path.last_index
    f_prev = _range_cost(model, arr, 0, M, True)
    traces = []
    converged = False
    timed_out = False
    epochs = 0

    with _make_executor(config, model, width) as pool:
        for epoch in range(1, config.max_epochs + 1):
            epochs = epoch
            epoch_start = arr.copy()
            sub_times = []
            for group in groups:
                t0 = time.perf_counter()
                if group:
                    snapshot = arr.copy()
                    tasks = [
                        (pod.start, pod.end, snapshot, frozen, deadline) for pod in group
                    ]
                    for a, block in pool.map(_pod_task, tasks):
                        arr[a:a + block.shape[0]] = block
                sub_times.append(time.perf_counter() - t0)
                if deadline is not None and time.perf_counter() > deadline:
                    timed_out = True
                    break
            while len(sub_times) < 2:
                sub_times.append(0.0)
            f_next = _range_cost(model, arr, 0, M, True)
            displacement = float(np.max(np.abs(arr - epoch_start)))
            traces.append(EpochTrace(epoch, f_next, displacement, tuple(sub_times)))
            if timed_out:
                break
            if _converged_arrays(epoch_start, arr, f_prev, f_next,
                                 config.path_tolerance, config.objective_tolerance):
                converged = True
                break
            f_prev = f_next

    final_path = FullPathVector(arr, frozen)
    f_final = traces[-1].objective_after if traces else f_prev
    outcome = OptimizerOutcome(
        arr.reshape(-1).copy(), f_final, epochs, converged,
        time.perf_counter() - start,
    )
    return final_path, outcome, traces
