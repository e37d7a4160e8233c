"""Command line front end: run benchmark plans, split paths, render SVGs,
and run a quick demo."""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from .bench import (ExperimentPlan, aggregate, render_summary_figures,
                    run_experiment, write_records_csv, write_summary_csv)
from .meta import StrobeConfig, strobe_optimize
from .optimizers import ALGORITHMS, OptimizerConfig
from .path import FullPathVector
from .pods import split_path
from .render import render_2d
from .scenarios import (SCENARIO_NAMES, ScenarioSpec, build_model,
                        default_circle_grid, initial_path, quality_metric)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="strobe-bench",
        description="Parallel path optimization benchmarks and utilities.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run an experiment plan (TOML or JSON)")
    run_p.add_argument("plan", type=Path, help="plan file")
    run_p.add_argument("--scheme", action="append", help="override plan schemes")
    run_p.add_argument("--optimizer", action="append", choices=ALGORITHMS,
                       help="override plan optimizers")
    run_p.add_argument("--workers", action="append", type=int,
                       help="override plan worker counts")
    run_p.add_argument("--waypoints", action="append", type=int,
                       help="override plan waypoint counts")
    run_p.add_argument("--seed", type=int, help="override base seed")
    run_p.add_argument("--reps", type=int, help="override repetitions")
    run_p.add_argument("--time-limit", type=float, help="override per-run limit (s)")
    run_p.add_argument("--out-csv", type=Path, default=Path("results.csv"))
    run_p.add_argument("--out-jsonl", type=Path,
                       help="write epoch traces as JSON lines")
    run_p.add_argument("--no-figures", action="store_true",
                       help="skip the summary PNG figures")
    run_p.add_argument("--verbose", action="store_true",
                       help="stream progress and epoch traces to stdout")

    split_p = sub.add_parser("split", help="print a pod partition as JSON")
    split_p.add_argument("--waypoints", type=int, required=True)
    split_p.add_argument("--workers", type=int, required=True)
    split_p.add_argument("--ell", type=int, required=True)

    render_p = sub.add_parser("render", help="render a path JSON file to SVG")
    render_p.add_argument("--path", type=Path, required=True, help="path JSON file")
    render_p.add_argument("--field", action="store_true",
                          help="draw the default circle-grid field")
    render_p.add_argument("--out", type=Path, required=True)
    render_p.add_argument("--workers", type=int,
                          help="color waypoints by pod (needs --ell)")
    render_p.add_argument("--ell", type=int)

    demo_p = sub.add_parser("demo", help="optimize one scenario and report")
    demo_p.add_argument("--scenario", choices=SCENARIO_NAMES, default="circle-grid")
    demo_p.add_argument("--waypoints", type=int, default=100)
    demo_p.add_argument("--workers", type=int, default=4)
    demo_p.add_argument("--seed", type=int, default=0)
    demo_p.add_argument("--optimizer", choices=ALGORITHMS,
                        default="gradient-descent-backtracking")
    demo_p.add_argument("--out-dir", type=Path, default=Path("demo-out"))
    return parser


def _cmd_run(args) -> int:
    try:
        plan = ExperimentPlan.from_file(args.plan)
    except (OSError, ValueError, TypeError, KeyError) as exc:
        print(f"error: could not load plan {args.plan}: {exc}", file=sys.stderr)
        return 2
    overrides = {}
    if args.scheme:
        overrides["schemes"] = tuple(args.scheme)
    if args.optimizer:
        overrides["optimizers"] = tuple(args.optimizer)
    if args.workers:
        overrides["workers"] = tuple(args.workers)
    if args.waypoints:
        overrides["waypoints"] = tuple(args.waypoints)
    if args.seed is not None:
        overrides["base_seed"] = args.seed
    if args.reps is not None:
        overrides["repetitions"] = args.reps
    if args.time_limit is not None:
        overrides["time_limit"] = args.time_limit
    try:
        if overrides:
            plan = replace(plan, **overrides)
    except ValueError as exc:
        print(f"error: bad override: {exc}", file=sys.stderr)
        return 2

    jsonl = open(args.out_jsonl, "w", encoding="utf-8") if args.out_jsonl else None

    def trace_sink(trace):
        line = trace.to_json()
        if jsonl is not None:
            jsonl.write(line + "\n")
        if args.verbose:
            print(line)

    def progress(rec):
        if args.verbose:
            status = rec.error or ("ok" if rec.converged else "budget")
            print(f"{rec.scenario} {rec.scheme} {rec.optimizer} T={rec.workers} "
                  f"M={rec.waypoints} seed={rec.seed}: quality={rec.quality:.5f} "
                  f"t={rec.wall_time:.2f}s [{status}]")

    sink = trace_sink if (jsonl is not None or args.verbose) else None
    try:
        records = run_experiment(plan, trace_sink=sink, progress=progress)
    finally:
        if jsonl is not None:
            jsonl.close()

    write_records_csv(records, args.out_csv)
    summaries = aggregate(records)
    summary_csv = args.out_csv.with_name(args.out_csv.stem + "_summary.csv")
    write_summary_csv(summaries, summary_csv)
    print(f"wrote {len(records)} runs to {args.out_csv}")
    print(f"wrote {len(summaries)} cells to {summary_csv}")
    for s in summaries:
        flag = " (single sample)" if s.single_sample else ""
        print(f"  {s.scenario} {s.scheme} {s.optimizer} T={s.workers} M={s.waypoints}: "
              f"quality {s.quality_mean:.5f} +/- {s.quality_se:.5f}, "
              f"time {s.wall_time_mean:.2f} +/- {s.wall_time_se:.2f} s, "
              f"converged {s.converged_fraction:.0%}{flag}")
    if not args.no_figures:
        figures = render_summary_figures(summaries, args.out_csv.parent or Path("."),
                                         stem=args.out_csv.stem)
        for f in figures:
            print(f"wrote figure {f}")
    return 0


def _cmd_split(args) -> int:
    try:
        partition = split_path(args.waypoints, args.workers, args.ell)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(partition.to_json())
    return 0


def _cmd_render(args) -> int:
    try:
        path = FullPathVector.from_json(args.path.read_text(encoding="utf-8"))
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: could not load path {args.path}: {exc}", file=sys.stderr)
        return 2
    partition = None
    if args.workers is not None:
        if args.ell is None:
            print("error: --workers needs --ell", file=sys.stderr)
            return 2
        partition = split_path(path.waypoint_count, args.workers, args.ell)
    field_ = default_circle_grid() if args.field else None
    try:
        render_2d(path, field=field_, out=args.out, partition=partition)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {args.out}")
    return 0


def _cmd_demo(args) -> int:
    spec = ScenarioSpec(name=args.scenario, waypoints=args.waypoints, seed=args.seed)
    model = build_model(spec)
    path0 = initial_path(spec)
    config = StrobeConfig(
        workers=args.workers, ell=3,
        inner=OptimizerConfig(algorithm=args.optimizer),
    )
    final, outcome, traces = strobe_optimize(config, model, path0)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    print(f"scenario {args.scenario}: waypoints={args.waypoints} workers={args.workers}")
    print(f"quality before: {quality_metric(spec, path0):.6f}")
    print(f"quality after:  {quality_metric(spec, final):.6f}")
    print(f"objective:      {outcome.final_objective:.6f}")
    print(f"epochs={outcome.iterations_used} converged={outcome.converged} "
          f"wall={outcome.wall_time:.2f}s")
    if args.scenario == "circle-grid":
        from .pods import split_path as _split
        field_ = spec.resolved_field()
        partition = _split(path0.waypoint_count, args.workers, config.ell)
        before = args.out_dir / "before.svg"
        after = args.out_dir / "after.svg"
        render_2d(path0, field=field_, out=before, partition=partition)
        render_2d(final, field=field_, out=after, partition=partition)
        print(f"wrote {before} and {after}")
    trace_path = args.out_dir / "traces.jsonl"
    with open(trace_path, "w", encoding="utf-8") as fh:
        for tr in traces:
            fh.write(tr.to_json() + "\n")
    print(f"wrote {trace_path}")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "run": _cmd_run,
        "split": _cmd_split,
        "render": _cmd_render,
        "demo": _cmd_demo,
    }
    return handlers[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
