"""Local minimizers for pod blocks: backtracking gradient descent, L-BFGS,
and Nelder-Mead, behind one `minimize` entry point.

All three share the same contracts: candidates are clamped into the bounds
box before evaluation, only strictly improving points are accepted (so the
sequence of accepted objective values is non-increasing), non-finite
objective values are treated as rejected candidates, and the result never
exceeds the starting objective.  Everything is deterministic: the simplex
construction is seeded by x0 alone and the line searches have no randomness.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass

import numpy as np

from .path import Box

logger = logging.getLogger(__name__)

ALGORITHMS = ("gradient-descent-backtracking", "l-bfgs", "nelder-mead")

_ARMIJO_C1 = 1e-4
_BACKTRACK_FACTOR = 0.5
_MIN_STEP = 1e-16
_CURVATURE_FLOOR = 1e-12
_MAX_TRIAL_STEP = 1e6
_MAX_EXPANSION = 65536.0


@dataclass(frozen=True)
class OptimizerConfig:
    algorithm: str = "l-bfgs"
    max_inner_iterations: int = 30
    step_tolerance: float = 1e-9
    objective_tolerance: float = 1e-10
    history_size: int = 10

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(
                f"unknown algorithm {self.algorithm!r}; choose one of {ALGORITHMS}"
            )
        if self.max_inner_iterations < 1:
            raise ValueError("max_inner_iterations must be >= 1")
        if self.step_tolerance < 0 or self.objective_tolerance < 0:
            raise ValueError("tolerances must be non-negative")
        if self.history_size < 1:
            raise ValueError("history_size must be >= 1")


@dataclass(eq=False)
class OptimizerOutcome:
    final_values: np.ndarray
    final_objective: float
    iterations_used: int
    converged: bool
    wall_time: float


def _clip(x: np.ndarray, bounds) -> np.ndarray:
    return bounds.clip(x) if bounds is not None else x


def descent_step_backtracking(objective, gradient, x, initial_step: float):
    """One projected-Armijo backtracking step along -gradient(x).

    Returns (x_next, step_used); step_used == 0.0 reports stagnation (no
    acceptable step above the underflow floor).
    """
    x = np.asarray(x, dtype=np.float64)
    g = np.asarray(gradient(x), dtype=np.float64)
    if not np.any(g):
        raise ValueError("gradient is zero; no descent direction")
    f = float(objective(x))
    x_next, _, used = _backtrack(objective, x, f, g, None, initial_step)
    return x_next, used


def _backtrack(objective, x, f, g, bounds, t0):
    """Backtracking line search along -g with projection onto bounds.

    Sufficient decrease is the projected form f(c) <= f - c1 * |x - c|^2 / t,
    which reduces to the classic Armijo condition when nothing is clipped.
    """
    t = float(t0)
    while t >= _MIN_STEP:
        cand = _clip(x - t * g, bounds)
        delta = x - cand
        move = float(delta @ delta)
        if move > 0.0:
            fc = float(objective(cand))
            if np.isfinite(fc) and fc <= f - _ARMIJO_C1 * move / t:
                return cand, fc, t
        t *= _BACKTRACK_FACTOR
    return x, f, 0.0


def _stop_by_tolerances(config, x_prev, x_next, f_prev, f_next) -> bool:
    if float(np.max(np.abs(x_next - x_prev))) < config.step_tolerance:
        return True
    return (f_prev - f_next) < config.objective_tolerance * (1.0 + abs(f_prev))


def _gradient_descent(config, objective, gradient, x0, f0, bounds, callback):
    x, f = x0, f0
    trial = 1.0
    iterations = 0
    converged = False
    for it in range(1, config.max_inner_iterations + 1):
        iterations = it
        if callback is not None and callback(it, x, f):
            break
        g = np.asarray(gradient(x), dtype=np.float64)
        if not np.any(g):
            converged = True
            break
        x_new, f_new, used = _backtrack(objective, x, f, g, bounds, trial)
        if used == 0.0:
            # no step above the underflow floor improves; counts as a
            # step-size stop (displacement 0 < tolerance)
            converged = True
            break
        stop = _stop_by_tolerances(config, x, x_new, f, f_new)
        x, f = x_new, f_new
        trial = min(used * 2.0, _MAX_TRIAL_STEP)
        if stop:
            converged = True
            break
    return x, f, iterations, converged


def _two_loop(g, history, gamma):
    q = g.copy()
    alphas = []
    for s, y, rho in reversed(history):
        a = rho * float(s @ q)
        alphas.append(a)
        q -= a * y
    q *= gamma
    for (s, y, rho), a in zip(history, reversed(alphas)):
        beta = rho * float(y @ q)
        q += (a - beta) * s
    return q


def _lbfgs_line_search(objective, x, f, g, p, bounds):
    t = 1.0
    hit = None
    while t >= _MIN_STEP:
        cand = _clip(x + t * p, bounds)
        delta = cand - x
        if np.any(delta):
            fc = float(objective(cand))
            slope = float(g @ delta)
            if np.isfinite(fc) and fc < f and fc <= f + _ARMIJO_C1 * slope:
                hit = (cand, fc, delta)
                break
        t *= _BACKTRACK_FACTOR
    if hit is None or t != 1.0:
        return hit
    # The two-loop direction can come out far too short when stale pairs
    # encode a miniature trust region (flat curved valleys re-confirm it
    # every iteration); growing past the unit step breaks that trap.
    while t < _MAX_EXPANSION:
        t *= 2.0
        cand = _clip(x + t * p, bounds)
        delta = cand - x
        if not np.any(delta):
            break
        fc = float(objective(cand))
        slope = float(g @ delta)
        if np.isfinite(fc) and fc < hit[1] and fc <= f + _ARMIJO_C1 * slope:
            hit = (cand, fc, delta)
        else:
            break
    return hit


def _lbfgs(config, objective, gradient, x0, f0, bounds, callback):
    x, f = x0, f0
    g = np.asarray(gradient(x), dtype=np.float64)
    history = []
    gamma = 1.0
    iterations = 0
    converged = False
    for it in range(1, config.max_inner_iterations + 1):
        iterations = it
        if callback is not None and callback(it, x, f):
            break
        if not np.any(g):
            converged = True
            break
        p = -_two_loop(g, history, gamma)
        if float(p @ g) >= 0.0:
            history.clear()
            gamma = 1.0
            p = -g
        hit = _lbfgs_line_search(objective, x, f, g, p, bounds)
        if hit is None and history:
            # stale curvature can produce unusable directions; retry steepest
            history.clear()
            gamma = 1.0
            hit = _lbfgs_line_search(objective, x, f, g, -g, bounds)
        if hit is None:
            converged = True
            break
        x_new, f_new, s = hit
        g_new = np.asarray(gradient(x_new), dtype=np.float64)
        y = g_new - g
        sy = float(s @ y)
        if sy > _CURVATURE_FLOOR * float(np.linalg.norm(s)) * float(np.linalg.norm(y)):
            history.append((s, y, 1.0 / sy))
            if len(history) > config.history_size:
                history.pop(0)
            gamma = sy / float(y @ y)
        stop = _stop_by_tolerances(config, x, x_new, f, f_new)
        x, f, g = x_new, f_new, g_new
        if stop:
            converged = True
            break
    return x, f, iterations, converged


def _initial_simplex(x0, bounds):
    verts = [x0.copy()]
    for i in range(x0.size):
        off = max(0.05, 0.05 * abs(float(x0[i])))
        v = x0.copy()
        v[i] += off
        v = _clip(v, bounds)
        if np.array_equal(v, x0):
            # clipped onto the base point; try the other direction
            v = x0.copy()
            v[i] -= off
            v = _clip(v, bounds)
        verts.append(v)
    return verts


def _nelder_mead(config, objective, x0, f0, bounds, callback):
    alpha, gamma, rho, sigma = 1.0, 2.0, 0.5, 0.5
    verts = _initial_simplex(x0, bounds)
    fvals = [f0] + [float(objective(v)) for v in verts[1:]]
    iterations = 0
    converged = False
    for it in range(1, config.max_inner_iterations + 1):
        iterations = it
        order = np.argsort(fvals, kind="stable")
        verts = [verts[k] for k in order]
        fvals = [fvals[k] for k in order]
        if callback is not None and callback(it, verts[0], fvals[0]):
            break
        spread = max(float(np.max(np.abs(v - verts[0]))) for v in verts[1:])
        if spread < config.step_tolerance:
            converged = True
            break
        if (fvals[-1] - fvals[0]) < config.objective_tolerance * (1.0 + abs(fvals[0])):
            converged = True
            break
        centroid = np.mean(verts[:-1], axis=0)
        xr = _clip(centroid + alpha * (centroid - verts[-1]), bounds)
        fr = float(objective(xr))
        if fvals[0] <= fr < fvals[-2]:
            verts[-1], fvals[-1] = xr, fr
        elif fr < fvals[0]:
            xe = _clip(centroid + gamma * (centroid - verts[-1]), bounds)
            fe = float(objective(xe))
            if np.isfinite(fe) and fe < fr:
                verts[-1], fvals[-1] = xe, fe
            else:
                verts[-1], fvals[-1] = xr, fr
        else:
            if np.isfinite(fr) and fr < fvals[-1]:
                xc = _clip(centroid + rho * (xr - centroid), bounds)
            else:
                xc = _clip(centroid + rho * (verts[-1] - centroid), bounds)
            fc = float(objective(xc))
            if np.isfinite(fc) and fc < min(fr, fvals[-1]):
                verts[-1], fvals[-1] = xc, fc
            else:
                for k in range(1, len(verts)):
                    verts[k] = _clip(verts[0] + sigma * (verts[k] - verts[0]), bounds)
                    fvals[k] = float(objective(verts[k]))
    order = np.argsort(fvals, kind="stable")
    best = order[0]
    return verts[best], fvals[best], iterations, converged


class _CountingObjective:
    """Wraps an objective to count non-finite evaluations for reporting."""

    def __init__(self, fn):
        self.fn = fn
        self.nonfinite = 0

    def __call__(self, x) -> float:
        value = float(self.fn(x))
        if not np.isfinite(value):
            self.nonfinite += 1
        return value


def minimize(config: OptimizerConfig, objective, gradient, x0, bounds: Box = None,
             callback=None) -> OptimizerOutcome:
    """Run the configured algorithm from x0.

    `gradient` may be None only for nelder-mead.  `callback(iteration, x, f)`
    is invoked once per outer iteration with the current best point; a truthy
    return aborts the run (converged stays False).  The descent contract
    holds in every case: final_objective <= objective(x0).
    """
    start = time.perf_counter()
    x0 = np.asarray(x0, dtype=np.float64).reshape(-1).copy()
    if x0.size == 0:
        return OptimizerOutcome(x0, float(objective(x0)), 0, True,
                                time.perf_counter() - start)
    x0 = np.asarray(_clip(x0, bounds), dtype=np.float64)
    counting = _CountingObjective(objective)
    f0 = counting(x0)
    if not np.isfinite(f0):
        raise ValueError("objective is not finite at the starting point")
    if config.algorithm == "nelder-mead":
        x, f, iters, ok = _nelder_mead(config, counting, x0, f0, bounds, callback)
    else:
        if gradient is None:
            raise ValueError(f"{config.algorithm} requires a gradient")
        if config.algorithm == "gradient-descent-backtracking":
            x, f, iters, ok = _gradient_descent(
                config, counting, gradient, x0, f0, bounds, callback)
        else:
            x, f, iters, ok = _lbfgs(config, counting, gradient, x0, f0, bounds, callback)
    if counting.nonfinite:
        logger.warning(
            "%s rejected %d non-finite objective evaluations",
            config.algorithm, counting.nonfinite,
        )
    return OptimizerOutcome(x, f, iters, ok, time.perf_counter() - start)
