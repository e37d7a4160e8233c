"""Baseline schemes the meta-loop is benchmarked against.

single-thread: one minimize call over the whole path.
prr: parallel random restarts; workers run the single-threaded solver from
  differently seeded initial conditions and the first to converge wins.  The
  `serialized` flag swaps the racy wall-clock winner for a deterministic
  lockstep emulation (fewest iterations among converged, ties to the lowest
  worker rank) so reruns are byte-identical.
gsgd: global-stochastic gradient descent over random windows.  Rounds are
  deterministic given (seed, workers): every round draws `workers` window
  starts from one generator, optimizes all windows against the round-start
  snapshot, and applies write-backs in worker order, so overlapping windows
  overwrite one another exactly as racing workers would.
"""
from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
import multiprocessing as mp

import numpy as np

from .meta import _converged_arrays, _fork_available, _optimize_block
from .objective import ObjectiveModel, _range_cost
from .optimizers import OptimizerConfig, OptimizerOutcome
from .path import FullPathVector
from .pods import split_path

SCHEMES = ("single-thread", "prr", "gsgd")


@dataclass(frozen=True)
class SchemeConfig:
    scheme: str = "single-thread"
    workers: int = 1
    ell: int = 2
    inner: OptimizerConfig = field(default_factory=OptimizerConfig)
    window_length: int = None
    max_epochs: int = 50
    path_tolerance: float = 1e-4
    objective_tolerance: float = 1e-6
    time_limit: float = None
    serialized: bool = False

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}")
        if self.workers < 1 or self.ell < 1 or self.max_epochs < 1:
            raise ValueError("workers, ell and max_epochs must be >= 1")
        if self.window_length is not None and self.window_length < 1:
            raise ValueError("window_length must be >= 1")
        if self.time_limit is not None and self.time_limit <= 0:
            raise ValueError("time_limit must be positive")


def single_thread_optimize(config: SchemeConfig, model: ObjectiveModel,
                           path: FullPathVector):
    """Whole-path minimize; the reference solution quality."""
    start = time.perf_counter()
    deadline = None if config.time_limit is None else start + config.time_limit
    block, outcome = _optimize_block(
        model, path, 0, path.last_index, config.inner, deadline)
    final = FullPathVector(block, path.frozen)
    outcome.final_values = block.reshape(-1).copy()
    outcome.wall_time = time.perf_counter() - start
    return final, outcome


_PRR_WORKER = {}


def _init_prr_worker(model, config, generator, cancel):
    _PRR_WORKER.update(model=model, config=config, generator=generator, cancel=cancel)


def _prr_run(seed: int):
    """One restart, cooperatively cancellable; runs inside a worker process."""
    model = _PRR_WORKER["model"]
    config = _PRR_WORKER["config"]
    cancel = _PRR_WORKER["cancel"]
    start_path = _PRR_WORKER["generator"](seed)
    deadline = (
        None if config.time_limit is None
        else time.perf_counter() + config.time_limit
    )

    def cancelled(iteration, x, f):
        return cancel.is_set()

    block, outcome = _optimize_block(
        model, start_path, 0, start_path.last_index, config.inner,
        deadline, cancelled)
    if outcome.converged:
        cancel.set()
    return (block, start_path.frozen, outcome.final_objective,
            outcome.iterations_used, outcome.converged, time.perf_counter())


def prr_optimize(config: SchemeConfig, model: ObjectiveModel,
                 initial_condition_generator, seed: int):
    """Parallel random restarts from seeds seed .. seed + workers - 1.

    Serialized mode gives every restart the full budget and picks the winner
    by (converged, fewest iterations, lowest rank); the parallel mode races
    real processes and picks the earliest convergence by wall clock.
    """
    start = time.perf_counter()
    seeds = [seed + w for w in range(config.workers)]

    if config.serialized or config.workers == 1 or not _fork_available():
        results = []
        for s in seeds:
            p0 = initial_condition_generator(s)
            final, outcome = single_thread_optimize(config, model, p0)
            results.append((final, outcome.final_objective,
                            outcome.iterations_used, outcome.converged))
        if any(r[3] for r in results):
            winner = min(range(len(results)),
                         key=lambda k: (not results[k][3], results[k][2], k))
        else:
            winner = min(range(len(results)), key=lambda k: (results[k][1], k))
        final, f_final, iters, ok = results[winner]
        return final, OptimizerOutcome(final.flattened(), f_final, iters, ok,
                                       time.perf_counter() - start)

    ctx = mp.get_context("fork")
    cancel = ctx.Event()
    with ProcessPoolExecutor(
        max_workers=config.workers, mp_context=ctx, initializer=_init_prr_worker,
        initargs=(model, config, initial_condition_generator, cancel),
    ) as pool:
        raw = list(pool.map(_prr_run, seeds))
    done = [k for k, r in enumerate(raw) if r[4]]
    if done:
        winner = min(done, key=lambda k: (raw[k][5], k))
    else:
        winner = min(range(len(raw)), key=lambda k: (raw[k][2], k))
    block, frozen, f_final, iters, ok, _ = raw[winner]
    final = FullPathVector(block, frozen)
    return final, OptimizerOutcome(final.flattened(), f_final, iters, ok,
                                   time.perf_counter() - start)


def gsgd_optimize(config: SchemeConfig, model: ObjectiveModel,
                  path: FullPathVector, seed: int):
    """Random-window descent with last-writer-wins write-backs.

    The round budget is epoch-equivalent: max_epochs times the number of
    rounds it takes `workers` windows to touch as many waypoints as one full
    alternating pass over the reference partition.
    """
    count = path.waypoint_count
    reference = split_path(count, config.workers, config.ell)
    window = config.window_length
    if window is None:
        window = max(p.length for p in reference.pods)
    if window > count:
        raise ValueError(f"window length {window} exceeds path length {count}")
    rounds_budget = config.max_epochs * math.ceil(len(reference.pods) / config.workers)

    start = time.perf_counter()
    deadline = None if config.time_limit is None else start + config.time_limit
    rng = np.random.default_rng(seed)
    arr = path.copy_array()
    frozen = path.frozen
    M = path.last_index
    f_prev = _range_cost(model, arr, 0, M, True)
    converged = False
    rounds = 0

    for rnd in range(1, rounds_budget + 1):
        rounds = rnd
        starts = rng.integers(0, count - window + 1, size=config.workers)
        round_start = arr.copy()
        snapshot = FullPathVector(round_start, frozen)
        for s in starts:
            a = int(s)
            b = a + window - 1
            block, _ = _optimize_block(model, snapshot, a, b, config.inner, deadline)
            arr[a:b + 1] = block
        f_next = _range_cost(model, arr, 0, M, True)
        if _converged_arrays(round_start, arr, f_prev, f_next,
                             config.path_tolerance, config.objective_tolerance):
            converged = True
            break
        f_prev = f_next
        if deadline is not None and time.perf_counter() > deadline:
            break

    f_final = _range_cost(model, arr, 0, M, True)
    final = FullPathVector(arr, frozen)
    outcome = OptimizerOutcome(arr.reshape(-1).copy(), f_final, rounds, converged,
                               time.perf_counter() - start)
    return final, outcome
