"""Parallel waypoint-path optimization via alternating pod blocks.

A path is split into contiguous blue/red pods; pods of one color are
optimized concurrently against a snapshot (their stencils only reach into
quiescent opposite-color territory), blocks are written back, the colors
swap, and the epoch loop repeats until the whole path stops moving.  The
package bundles the meta-loop, three inner optimizers, baseline schemes,
benchmark scenarios and a CLI harness.
"""
from .path import (Box, FullPathVector, PathDerivatives, derivative,
                   derivative_array, generate_initial_path, sample_spline)
from .pods import (Color, Pod, PodPartition, add_pod, partition_from_sizes,
                   pods_of_color, split_path)
from .objective import (FD_STEP, ObjectiveModel, RestrictedProblem, TermKind,
                        TermSpec, apply_bounds, eval_full, eval_restricted,
                        grad_restricted, pull_toward_term,
                        squared_derivative_term)
from .optimizers import (ALGORITHMS, OptimizerConfig, OptimizerOutcome,
                         descent_step_backtracking, minimize)
from .meta import (EpochTrace, StrobeConfig, check_convergence, optimize_pod,
                   strobe_optimize)
from .baselines import (SCHEMES, SchemeConfig, gsgd_optimize, prr_optimize,
                        single_thread_optimize)
from .scenarios import (SCENARIO_NAMES, CircleGridField, ScenarioSpec,
                        SerialChain, build_model, build_scenario, circle_cost,
                        default_chain, default_circle_grid, forward_kinematics,
                        initial_path, quality_metric, rot_error,
                        self_distance_penalty)
from .bench import (CSV_COLUMNS, CellSummary, ExperimentPlan, RunRecord,
                    aggregate, read_records_csv, render_summary_figures,
                    run_experiment, run_single, write_records_csv,
                    write_summary_csv)
from .render import render_2d

__version__ = "0.1.0"

__all__ = [
    "ALGORITHMS", "Box", "CSV_COLUMNS", "CellSummary", "CircleGridField",
    "Color", "EpochTrace", "ExperimentPlan", "FD_STEP", "FullPathVector",
    "ObjectiveModel", "OptimizerConfig", "OptimizerOutcome", "PathDerivatives",
    "Pod", "PodPartition", "RestrictedProblem", "RunRecord", "SCENARIO_NAMES",
    "SCHEMES", "ScenarioSpec", "SchemeConfig", "SerialChain", "StrobeConfig",
    "TermKind", "TermSpec", "add_pod", "aggregate", "apply_bounds",
    "build_model", "build_scenario", "check_convergence", "circle_cost",
    "default_chain", "default_circle_grid", "derivative", "derivative_array",
    "descent_step_backtracking", "eval_full", "eval_restricted",
    "forward_kinematics", "generate_initial_path", "grad_restricted",
    "gsgd_optimize", "initial_path", "minimize", "optimize_pod",
    "partition_from_sizes", "pods_of_color", "prr_optimize", "pull_toward_term",
    "quality_metric", "read_records_csv", "render_2d",
    "render_summary_figures", "rot_error", "run_experiment", "run_single",
    "sample_spline", "self_distance_penalty", "single_thread_optimize",
    "split_path", "squared_derivative_term", "strobe_optimize",
    "write_records_csv", "write_summary_csv",
]
