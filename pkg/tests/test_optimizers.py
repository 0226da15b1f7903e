import numpy as np
import pytest

from vqe_portfolio.optimizers import (BatchMismatch, CmaEs, Cobyla, OptimizerConfig,
                                      OptimizerError, OptimizerFinished, make_optimizer,
                                      run, write_trace_csv)


def sphere(x):
    return float(x @ x)


def rosenbrock(x):
    return float(100.0 * (x[1] - x[0] ** 2) ** 2 + (1.0 - x[0]) ** 2)


class TestConfig:
    def test_unknown_kind(self):
        with pytest.raises(OptimizerError):
            OptimizerConfig(kind="bfgs")

    def test_rho_ordering(self):
        with pytest.raises(OptimizerError):
            OptimizerConfig(kind="cobyla", rho_begin=1e-4, rho_end=0.5)

    def test_population_floor(self):
        with pytest.raises(OptimizerError):
            OptimizerConfig(population=1)


class TestAskTell:
    def test_cmaes_default_batch_size(self):
        es = CmaEs(np.zeros(4), max_iterations=5)
        assert len(es.ask()) == 8  # 4 + floor(3 ln 4)

    def test_cobyla_batch_size_one(self):
        c = Cobyla(np.zeros(3), max_iterations=5)
        assert len(c.ask()) == 1

    def test_same_seed_same_asks(self):
        a = CmaEs(np.ones(3), seed=11, max_iterations=8)
        b = CmaEs(np.ones(3), seed=11, max_iterations=8)
        for _ in range(8):
            xa, xb = a.ask(), b.ask()
            assert all(np.array_equal(p, q) for p, q in zip(xa, xb))
            a.tell([(x, sphere(x)) for x in xa])
            b.tell([(x, sphere(x)) for x in xb])

    def test_best_updated_on_lower_value(self):
        es = CmaEs(np.ones(2), seed=0, max_iterations=3)
        batch = es.ask()
        values = [(x, 5.0) for x in batch[:-1]] + [(batch[-1], -1.0)]
        es.tell(values)
        assert es.best_value == -1.0
        np.testing.assert_array_equal(es.best_params, batch[-1])

    def test_tell_accepts_shuffled_order(self):
        es = CmaEs(np.ones(2), seed=3, max_iterations=4)
        batch = es.ask()
        evaluated = [(x, sphere(x)) for x in reversed(batch)]
        es.tell(evaluated)  # keyed by params, arrival order free
        assert es.iteration == 1

    def test_batch_mismatch_wrong_length(self):
        es = CmaEs(np.ones(2), seed=0, max_iterations=2)
        batch = es.ask()
        with pytest.raises(BatchMismatch):
            es.tell([(batch[0], 1.0)])

    def test_batch_mismatch_unknown_candidate(self):
        es = CmaEs(np.ones(2), seed=0, max_iterations=2)
        batch = es.ask()
        bad = [(x, 1.0) for x in batch[:-1]] + [(batch[-1] + 1.0, 1.0)]
        with pytest.raises(BatchMismatch):
            es.tell(bad)

    def test_finished_guard(self):
        es = CmaEs(np.ones(2), seed=0, max_iterations=1)
        es.tell([(x, sphere(x)) for x in es.ask()])
        with pytest.raises(OptimizerFinished):
            es.ask()

    def test_double_ask_rejected(self):
        es = CmaEs(np.ones(2), seed=0, max_iterations=2)
        es.ask()
        with pytest.raises(OptimizerError):
            es.ask()


class TestBenchmarks:
    def test_cmaes_sphere_400_evals(self):
        # 50 generations x population 8
        cfg = OptimizerConfig(kind="cmaes", max_iterations=50, seed=3, sigma0=0.5)
        _, best, _ = run(sphere, cfg, np.ones(4))
        assert best < 1e-8

    def test_cobyla_sphere_200_evals(self):
        cfg = OptimizerConfig(kind="cobyla", max_iterations=200)
        _, best, _ = run(sphere, cfg, np.ones(2))
        assert best < 1e-6

    def test_cmaes_rosenbrock_2000_evals(self):
        cfg = OptimizerConfig(kind="cmaes", max_iterations=333, seed=5, sigma0=0.3)
        _, best, _ = run(rosenbrock, cfg, np.zeros(2))
        assert best < 1e-4

    def test_cobyla_makes_progress_then_polls_at_floor(self):
        cfg = OptimizerConfig(kind="cobyla", max_iterations=500, rho_begin=0.5,
                              rho_end=1e-4)
        _, best, trace = run(sphere, cfg, np.ones(2))
        assert best < 1e-6
        assert len(trace) == 500  # never stops early; polls at the rho floor


class TestRun:
    def test_constant_objective(self):
        calls = []
        cfg = OptimizerConfig(kind="cmaes", max_iterations=7, seed=2)
        best_params, best, trace = run(lambda x: 3.25, cfg, np.zeros(3),
                                       callback=lambda i, p, v: calls.append(i))
        assert best == 3.25
        assert len(trace) == 7
        assert calls == list(range(1, 8))

    def test_callback_count_cobyla(self):
        calls = []
        cfg = OptimizerConfig(kind="cobyla", max_iterations=23)
        run(lambda x: 1.0, cfg, np.zeros(4), callback=lambda i, p, v: calls.append(i))
        assert len(calls) == 23

    def test_best_so_far_nonincreasing(self):
        cfg = OptimizerConfig(kind="cmaes", max_iterations=40, seed=9)
        _, _, trace = run(sphere, cfg, np.full(3, 2.0))
        best = [row.best_cost for row in trace]
        assert all(b1 >= b2 for b1, b2 in zip(best, best[1:]))

    def test_deterministic_traces(self):
        cfg = OptimizerConfig(kind="cmaes", max_iterations=20, seed=123)
        _, _, t1 = run(sphere, cfg, np.ones(3))
        _, _, t2 = run(sphere, cfg, np.ones(3))
        assert [(r.best_cost, r.incumbent_cost) for r in t1] == \
               [(r.best_cost, r.incumbent_cost) for r in t2]

    def test_trace_csv(self, tmp_path):
        cfg = OptimizerConfig(kind="cobyla", max_iterations=5)
        _, _, trace = run(sphere, cfg, np.ones(2))
        path = tmp_path / "trace.csv"
        write_trace_csv(trace, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "iteration,best_cost,incumbent_cost"
        assert len(lines) == 6

    def test_objective_errors_propagate(self):
        def broken(x):
            raise RuntimeError("boom")
        cfg = OptimizerConfig(kind="cmaes", max_iterations=3, seed=0)
        with pytest.raises(RuntimeError):
            run(broken, cfg, np.zeros(2))

    def test_make_optimizer_dispatch(self):
        assert isinstance(make_optimizer(OptimizerConfig(kind="cmaes"), np.zeros(2)), CmaEs)
        assert isinstance(make_optimizer(OptimizerConfig(kind="cobyla"), np.zeros(2)), Cobyla)


class TestCmaInternals:
    def test_covariance_stays_spd(self):
        es = CmaEs(np.ones(3), seed=21, max_iterations=60)
        rng = np.random.default_rng(0)
        noisy = lambda x: sphere(x) + rng.normal(scale=0.1)
        for _ in range(60):
            batch = es.ask()
            es.tell([(x, noisy(x)) for x in batch])
            vals = np.linalg.eigvalsh((es.cov + es.cov.T) / 2)
            assert vals.min() > 0.0
            assert np.abs(es.cov - es.cov.T).max() < 1e-12

    def test_rank_based_invariance(self):
        def increasing(v):
            return v ** 3 + 2.0 * v
        a = CmaEs(np.ones(3), seed=17, max_iterations=25)
        b = CmaEs(np.ones(3), seed=17, max_iterations=25)
        for _ in range(25):
            xa, xb = a.ask(), b.ask()
            assert all(np.array_equal(p, q) for p, q in zip(xa, xb))
            a.tell([(x, sphere(x)) for x in xa])
            b.tell([(x, increasing(sphere(x))) for x in xb])
