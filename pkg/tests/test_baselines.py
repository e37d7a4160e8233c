import numpy as np
import pytest

from strobe import (
    FullPathVector,
    ObjectiveModel,
    OptimizerConfig,
    SchemeConfig,
    eval_full,
    gsgd_optimize,
    minimize,
    prr_optimize,
    pull_toward_term,
    single_thread_optimize,
    squared_derivative_term,
)
from strobe.objective import RestrictedProblem
import strobe.baselines as baselines


def _path(values, frozen=()):
    return FullPathVector(np.asarray(values, dtype=np.float64), frozenset(frozen))


def _smooth_model(n):
    return ObjectiveModel(terms=(
        squared_derivative_term(1, 0.5),
        pull_toward_term(np.zeros(n), 1.0),
    ))


def _generator(count, n):
    def gen(seed):
        rng = np.random.default_rng(seed)
        w = rng.normal(size=(count, n))
        return _path(w, frozen=(0, count - 1))
    return gen


class TestSchemeConfig:
    def test_unknown_scheme(self):
        with pytest.raises(ValueError):
            SchemeConfig(scheme="threads")

    def test_bad_window(self):
        with pytest.raises(ValueError):
            SchemeConfig(scheme="gsgd", window_length=0)


class TestSingleThread:
    def test_quadratic_reaches_global_minimum(self):
        model = ObjectiveModel(terms=(pull_toward_term(np.array([0.25, 0.5]), 1.0),))
        p = _path(np.random.default_rng(0).normal(size=(6, 2)))
        cfg = SchemeConfig(inner=OptimizerConfig(max_inner_iterations=300,
                                                 step_tolerance=1e-10,
                                                 objective_tolerance=1e-14))
        final, outcome = single_thread_optimize(cfg, model, p)
        assert np.allclose(final.waypoints, [0.25, 0.5], atol=1e-4)
        assert outcome.converged

    def test_equals_direct_minimize(self):
        model = _smooth_model(2)
        p = _path(np.random.default_rng(1).normal(size=(7, 2)), frozen=(0, 6))
        inner = OptimizerConfig(max_inner_iterations=25)
        final, outcome = single_thread_optimize(SchemeConfig(inner=inner), model, p)
        prob = RestrictedProblem(model, p, 0, 6)
        direct = minimize(inner, prob.objective, prob.gradient,
                          prob.initial(), prob.bounds())
        assert np.array_equal(final.waypoints, prob.block(direct.final_values))

    def test_already_converged_input(self):
        model = ObjectiveModel(terms=(pull_toward_term(np.zeros(2), 1.0),))
        p = _path(np.zeros((5, 2)))
        final, outcome = single_thread_optimize(
            SchemeConfig(inner=OptimizerConfig(max_inner_iterations=50)), model, p)
        assert outcome.converged
        assert outcome.iterations_used <= 1
        assert np.array_equal(final.waypoints, p.waypoints)

    def test_circle_grid_25_regression(self):
        # frozen first-run oracle; quality drift in any module shows up here
        from strobe import ScenarioSpec, build_model, quality_metric
        from strobe.scenarios import initial_path
        spec = ScenarioSpec(name="circle-grid", waypoints=25, seed=0)
        cfg = SchemeConfig(
            scheme="single-thread", workers=1, ell=3,
            inner=OptimizerConfig(algorithm="l-bfgs", max_inner_iterations=1_000_000,
                                  step_tolerance=1e-4, objective_tolerance=1e-6),
            time_limit=60.0)
        final, outcome = single_thread_optimize(cfg, build_model(spec), initial_path(spec))
        assert outcome.converged
        assert outcome.final_objective == pytest.approx(1.5398699637506703, rel=1e-9)
        assert quality_metric(spec, final) == pytest.approx(0.0492589364046732, rel=1e-9)


class TestPrr:
    def test_workers_one_equals_single_thread(self):
        model = _smooth_model(2)
        gen = _generator(9, 2)
        cfg = SchemeConfig(scheme="prr", workers=1,
                           inner=OptimizerConfig(max_inner_iterations=30))
        final, outcome = prr_optimize(cfg, model, gen, 5)
        ref, ref_out = single_thread_optimize(cfg, model, gen(5))
        assert np.array_equal(final.waypoints, ref.waypoints)
        assert outcome.final_objective == ref_out.final_objective

    def test_convex_model_converges(self):
        model = ObjectiveModel(terms=(pull_toward_term(np.zeros(2), 1.0),))
        gen = _generator(6, 2)
        cfg = SchemeConfig(scheme="prr", workers=3, serialized=True,
                           inner=OptimizerConfig(max_inner_iterations=300,
                                                 step_tolerance=1e-10,
                                                 objective_tolerance=1e-14))
        final, outcome = prr_optimize(cfg, model, gen, 0)
        assert outcome.converged

    def test_serialized_replay_identical(self):
        model = _smooth_model(3)
        gen = _generator(12, 3)
        cfg = SchemeConfig(scheme="prr", workers=4, serialized=True,
                           inner=OptimizerConfig(max_inner_iterations=20))
        fa, oa = prr_optimize(cfg, model, gen, 7)
        fb, ob = prr_optimize(cfg, model, gen, 7)
        assert np.array_equal(fa.waypoints, fb.waypoints)
        assert oa.final_objective == ob.final_objective
        assert oa.iterations_used == ob.iterations_used

    def test_winner_is_a_restart_output(self):
        model = _smooth_model(2)
        gen = _generator(8, 2)
        cfg = SchemeConfig(scheme="prr", workers=3, serialized=True,
                           inner=OptimizerConfig(max_inner_iterations=40))
        final, _ = prr_optimize(cfg, model, gen, 11)
        candidates = []
        for s in (11, 12, 13):
            ref, _ = single_thread_optimize(cfg, model, gen(s))
            candidates.append(ref.waypoints)
        assert any(np.array_equal(final.waypoints, c) for c in candidates)


class TestGsgd:
    def test_full_window_single_worker_is_repeated_full_path(self):
        model = _smooth_model(2)
        p = _path(np.random.default_rng(2).normal(size=(10, 2)), frozen=(0, 9))
        inner = OptimizerConfig(max_inner_iterations=200,
                                step_tolerance=1e-10, objective_tolerance=1e-14)
        cfg = SchemeConfig(scheme="gsgd", workers=1, window_length=10,
                           inner=inner, max_epochs=50)
        final, outcome = gsgd_optimize(cfg, model, p, 0)
        ref, _ = single_thread_optimize(SchemeConfig(inner=inner), model, p)
        assert outcome.converged
        assert np.allclose(final.waypoints, ref.waypoints, atol=1e-6)

    def test_stationary_input_converges_first_round(self):
        model = ObjectiveModel(terms=(pull_toward_term(np.zeros(2), 1.0),))
        p = _path(np.zeros((12, 2)))
        cfg = SchemeConfig(scheme="gsgd", workers=3,
                           inner=OptimizerConfig(max_inner_iterations=20))
        final, outcome = gsgd_optimize(cfg, model, p, 3)
        assert outcome.converged
        assert outcome.iterations_used == 1
        assert np.array_equal(final.waypoints, p.waypoints)

    def test_seeded_replay_identical(self):
        model = _smooth_model(2)
        p = _path(np.random.default_rng(3).normal(size=(20, 2)), frozen=(0, 19))
        cfg = SchemeConfig(scheme="gsgd", workers=4, max_epochs=10,
                           inner=OptimizerConfig(max_inner_iterations=10))
        fa, oa = gsgd_optimize(cfg, model, p, 9)
        fb, ob = gsgd_optimize(cfg, model, p, 9)
        assert np.array_equal(fa.waypoints, fb.waypoints)
        assert oa.iterations_used == ob.iterations_used

    def test_windows_drawn_from_seeded_stream(self, monkeypatch):
        # record the blocks each round touches; they must follow the seed
        seen = []
        real = baselines._optimize_block

        def spy(model, snapshot, a, b, inner, deadline=None):
            seen.append((a, b))
            return real(model, snapshot, a, b, inner, deadline)

        monkeypatch.setattr(baselines, "_optimize_block", spy)
        model = _smooth_model(2)
        p = _path(np.random.default_rng(4).normal(size=(15, 2)))
        cfg = SchemeConfig(scheme="gsgd", workers=2, window_length=4, max_epochs=3,
                           path_tolerance=0.0, objective_tolerance=0.0,
                           inner=OptimizerConfig(max_inner_iterations=5))
        gsgd_optimize(cfg, model, p, 21)
        rng = np.random.default_rng(21)
        expected = []
        for _ in range(len(seen) // 2):
            for s in rng.integers(0, 15 - 4 + 1, size=2):
                expected.append((int(s), int(s) + 3))
        assert seen == expected

    def test_window_longer_than_path_rejected(self):
        model = _smooth_model(2)
        p = _path(np.zeros((5, 2)))
        cfg = SchemeConfig(scheme="gsgd", workers=1, window_length=9)
        with pytest.raises(ValueError):
            gsgd_optimize(cfg, model, p, 0)

    def test_objective_never_worse_than_start(self):
        model = _smooth_model(2)
        w = np.random.default_rng(5).normal(size=(18, 2))
        p = _path(w, frozen=(0, 17))
        cfg = SchemeConfig(scheme="gsgd", workers=3, max_epochs=6,
                           inner=OptimizerConfig(max_inner_iterations=8))
        final, outcome = gsgd_optimize(cfg, model, p, 1)
        assert outcome.final_objective <= eval_full(model, p) + 1e-12

    def test_quality_dominance_many_workers(self):
        # random windows should not beat structured alternation; threshold
        # pinned from a first run that measured 20/20 at the 1e-6 tie floor
        from strobe import ScenarioSpec, StrobeConfig, build_model, quality_metric, strobe_optimize
        from strobe.scenarios import initial_path
        inner = OptimizerConfig(algorithm="l-bfgs", max_inner_iterations=30,
                                step_tolerance=1e-5, objective_tolerance=1e-7)
        wins = 0
        for seed in range(20):
            spec = ScenarioSpec(name="circle-grid", waypoints=100, seed=seed)
            model = build_model(spec)
            p0 = initial_path(spec)
            strobed, _, _ = strobe_optimize(
                StrobeConfig(workers=12, ell=3, max_epochs=100, inner=inner), model, p0)
            cfg = SchemeConfig(scheme="gsgd", workers=12, ell=3, inner=inner,
                               max_epochs=100, time_limit=60.0)
            windowed, _ = gsgd_optimize(cfg, model, p0, seed)
            if quality_metric(spec, windowed) >= quality_metric(spec, strobed) - 1e-6:
                wins += 1
        assert wins >= 16, f"gsgd matched or trailed strobe on only {wins}/20 seeds"
