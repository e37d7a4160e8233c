import json

import numpy as np
import pytest

from strobe import FullPathVector, split_path
from strobe.cli import main


def _write_plan(tmp_path, **overrides):
    plan = dict(
        scenarios=["circle-grid"],
        schemes=["strobe"],
        optimizers=["l-bfgs"],
        workers=[2],
        waypoints=[16],
        repetitions=2,
        time_limit=30.0,
        max_epochs=30,
        inner_iterations=10,
    )
    plan.update(overrides)
    target = tmp_path / "plan.json"
    target.write_text(json.dumps(plan), encoding="utf-8")
    return target


class TestRun:
    def test_writes_records_summary_and_figures(self, tmp_path, capsys):
        plan = _write_plan(tmp_path)
        out_csv = tmp_path / "results.csv"
        code = main(["run", str(plan), "--out-csv", str(out_csv)])
        assert code == 0
        assert out_csv.exists()
        assert (tmp_path / "results_summary.csv").exists()
        assert (tmp_path / "results_circle-grid.png").exists()
        lines = out_csv.read_text(encoding="utf-8").splitlines()
        assert len(lines) == 3  # header + 2 runs
        out = capsys.readouterr().out
        assert "wrote 2 runs" in out

    def test_overrides_and_jsonl_traces(self, tmp_path):
        plan = _write_plan(tmp_path)
        out_csv = tmp_path / "r.csv"
        jsonl = tmp_path / "traces.jsonl"
        code = main(["run", str(plan), "--out-csv", str(out_csv), "--reps", "1",
                     "--out-jsonl", str(jsonl), "--no-figures"])
        assert code == 0
        assert len(out_csv.read_text(encoding="utf-8").splitlines()) == 2
        traces = [json.loads(line) for line in jsonl.read_text().splitlines()]
        assert traces
        assert {"epoch", "objective_after", "max_displacement",
                "sub_epoch_wall_times"} <= set(traces[0])

    def test_missing_plan_file_exit_2(self, tmp_path, capsys):
        assert main(["run", str(tmp_path / "nope.toml")]) == 2
        assert "could not load plan" in capsys.readouterr().err

    def test_invalid_plan_exit_2(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"schemes": ["single-thread"]}), encoding="utf-8")
        assert main(["run", str(bad)]) == 2
        assert "unknown scheme" in capsys.readouterr().err


class TestSplit:
    def test_prints_partition_json(self, capsys):
        assert main(["split", "--waypoints", "100", "--workers", "12", "--ell", "2"]) == 0
        printed = json.loads(capsys.readouterr().out)
        assert printed == json.loads(split_path(100, 12, 2).to_json())

    def test_invalid_arguments_exit_2(self, capsys):
        assert main(["split", "--waypoints", "2", "--workers", "2", "--ell", "3"]) == 2
        assert "error" in capsys.readouterr().err


class TestRender:
    def test_renders_path_json(self, tmp_path):
        p = FullPathVector(np.random.default_rng(0).uniform(0, 1, size=(10, 2)),
                           frozenset({0, 9}))
        src = tmp_path / "path.json"
        src.write_text(p.to_json(), encoding="utf-8")
        out = tmp_path / "path.svg"
        code = main(["render", "--path", str(src), "--out", str(out),
                     "--field", "--workers", "2", "--ell", "2"])
        assert code == 0
        text = out.read_text(encoding="utf-8")
        assert text.startswith("<svg")
        assert 'data-color="B"' in text

    def test_bad_path_file_exit_2(self, tmp_path, capsys):
        src = tmp_path / "junk.json"
        src.write_text("{not json", encoding="utf-8")
        assert main(["render", "--path", str(src),
                     "--out", str(tmp_path / "x.svg")]) == 2
        assert "could not load path" in capsys.readouterr().err

    def test_workers_without_ell_exit_2(self, tmp_path, capsys):
        p = FullPathVector(np.zeros((4, 2)), frozenset())
        src = tmp_path / "p.json"
        src.write_text(p.to_json(), encoding="utf-8")
        assert main(["render", "--path", str(src), "--out",
                     str(tmp_path / "x.svg"), "--workers", "2"]) == 2


class TestDemo:
    def test_demo_writes_artifacts(self, tmp_path, capsys):
        out_dir = tmp_path / "demo"
        code = main(["demo", "--scenario", "circle-grid", "--waypoints", "24",
                     "--workers", "2", "--optimizer", "l-bfgs",
                     "--out-dir", str(out_dir)])
        assert code == 0
        assert (out_dir / "before.svg").exists()
        assert (out_dir / "after.svg").exists()
        assert (out_dir / "traces.jsonl").exists()
        out = capsys.readouterr().out
        assert "quality before" in out and "quality after" in out
