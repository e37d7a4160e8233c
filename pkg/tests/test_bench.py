import json
import math

import pytest

from strobe import (
    CSV_COLUMNS,
    ExperimentPlan,
    RunRecord,
    aggregate,
    read_records_csv,
    render_summary_figures,
    run_experiment,
    run_single,
    write_records_csv,
    write_summary_csv,
)
from strobe.bench import _mean_se


def _tiny_plan(**overrides):
    base = dict(
        scenarios=["circle-grid"],
        schemes=["strobe"],
        optimizers=["l-bfgs"],
        workers=[2],
        waypoints=[20],
        repetitions=3,
        base_seed=5,
        time_limit=30.0,
        max_epochs=40,
        inner_iterations=15,
    )
    base.update(overrides)
    return ExperimentPlan.from_mapping(base)


def _record(**overrides):
    base = dict(scenario="circle-grid", scheme="strobe", optimizer="l-bfgs",
                workers=2, waypoints=20, seed=0, wall_time=1.0, converged=True,
                quality=0.5, final_objective=2.0, epochs=7, error="")
    base.update(overrides)
    return RunRecord(**base)


class TestExperimentPlan:
    def test_unknown_key_rejected(self):
        with pytest.raises(ValueError):
            ExperimentPlan.from_mapping({"scenarios": ["circle-grid"], "threads": [4]})

    def test_unknown_scheme_rejected(self):
        with pytest.raises(ValueError):
            _tiny_plan(schemes=["single-thread"])

    def test_cell_cross_product(self):
        plan = _tiny_plan(waypoints=[25, 50, 100, 200], schemes=["single", "strobe"])
        cells = (len(plan.waypoints) * len(plan.schemes) * len(plan.scenarios)
                 * len(plan.optimizers) * len(plan.workers))
        assert cells == 8

    def test_from_json_file(self, tmp_path):
        target = tmp_path / "plan.json"
        target.write_text(json.dumps({"scenarios": ["circle-grid"],
                                      "repetitions": 2}), encoding="utf-8")
        plan = ExperimentPlan.from_file(target)
        assert plan.repetitions == 2

    def test_from_toml_file(self, tmp_path):
        target = tmp_path / "plan.toml"
        target.write_text('scenarios = ["circle-grid"]\nrepetitions = 4\n',
                          encoding="utf-8")
        assert ExperimentPlan.from_file(target).repetitions == 4


class TestRunExperiment:
    def test_three_seeds_three_records(self):
        plan = _tiny_plan()
        records = run_experiment(plan)
        assert len(records) == 3
        assert [r.seed for r in records] == [5, 6, 7]
        assert all(not r.error for r in records)
        assert all(r.epochs > 0 for r in records)

    def test_rerun_reproduces_quality_and_objective(self):
        plan = _tiny_plan(repetitions=2)
        first = run_experiment(plan)
        second = run_experiment(plan)
        for a, b in zip(first, second):
            assert repr(a.quality) == repr(b.quality)
            assert repr(a.final_objective) == repr(b.final_objective)
            assert a.converged == b.converged and a.epochs == b.epochs

    def test_failures_recorded_not_raised(self):
        # ell=1 cannot host the jerk stencil; strobe must refuse per run
        plan = _tiny_plan(ell=1, repetitions=1)
        records = run_experiment(plan)
        assert len(records) == 1
        assert "stencil radius" in records[0].error
        assert math.isnan(records[0].quality)

    def test_single_scheme_runs(self):
        plan = _tiny_plan(schemes=["single"], repetitions=1)
        rec = run_experiment(plan)[0]
        assert rec.converged
        assert rec.error == ""

    def test_gsgd_and_prr_serialized_run(self):
        plan = _tiny_plan(schemes=["gsgd", "prr"], repetitions=1,
                          prr_serialized=True, max_epochs=10)
        records = run_experiment(plan)
        assert [r.scheme for r in records] == ["gsgd", "prr"]
        assert all(not r.error for r in records)

    def test_progress_hook_sees_every_record(self):
        seen = []
        run_experiment(_tiny_plan(repetitions=2), progress=seen.append)
        assert len(seen) == 2

    def test_trace_sink_receives_epoch_traces(self):
        captured = []
        run_single(_tiny_plan(), "circle-grid", "strobe", "l-bfgs", 2, 20, 5,
                   trace_sink=captured.append)
        assert captured
        assert captured[0].epoch == 1
        assert [t.epoch for t in captured] == list(range(1, len(captured) + 1))


class TestAggregate:
    def test_constant_values(self):
        mean, se = _mean_se([1.0, 1.0, 1.0])
        assert mean == 1.0 and se == 0.0

    def test_two_point_spread(self):
        mean, se = _mean_se([0.0, 2.0])
        assert mean == 1.0 and se == 1.0

    def test_empty_records_error(self):
        with pytest.raises(ValueError):
            aggregate([])

    def test_single_sample_flagged(self):
        cells = aggregate([_record()])
        assert cells[0].single_sample
        assert cells[0].quality_se == 0.0

    def test_errors_counted_and_excluded(self):
        records = [_record(seed=0), _record(seed=1, quality=float("nan"),
                                            error="boom")]
        cell = aggregate(records)[0]
        assert cell.count == 1 and cell.errors == 1
        assert cell.quality_mean == 0.5

    def test_cells_keyed_by_full_coordinate(self):
        records = [_record(), _record(workers=4), _record(waypoints=50)]
        assert len(aggregate(records)) == 3


class TestCsvRoundTrip:
    def test_records_round_trip(self, tmp_path):
        records = [_record(seed=s, wall_time=0.1 * s) for s in range(3)]
        target = tmp_path / "runs.csv"
        write_records_csv(records, target)
        back = read_records_csv(target)
        assert [r.as_row() for r in back] == [r.as_row() for r in records]
        header = target.read_text(encoding="utf-8").splitlines()[0]
        assert header == ",".join(CSV_COLUMNS)

    def test_summary_csv_written(self, tmp_path):
        target = tmp_path / "summary.csv"
        write_summary_csv(aggregate([_record(), _record(seed=1)]), target)
        lines = target.read_text(encoding="utf-8").splitlines()
        assert len(lines) == 2
        assert lines[0].startswith("scenario,scheme,optimizer")


class TestFigures:
    def test_one_png_per_scenario(self, tmp_path):
        records = [_record(), _record(seed=1),
                   _record(scenario="upright-ee", waypoints=50),
                   _record(scenario="upright-ee", waypoints=50, seed=1)]
        paths = render_summary_figures(aggregate(records), tmp_path, stem="x")
        assert sorted(p.name for p in paths) == ["x_circle-grid.png", "x_upright-ee.png"]
        for p in paths:
            assert p.stat().st_size > 1000
