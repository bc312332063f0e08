import numpy as np
import pytest

from perturbo.boundary import SearchParams
from perturbo.core import AttackTask, Sample
from perturbo.engine import BOConfig, run_attack, run_random_baseline
from perturbo.errors import InsufficientBudget, NoAdversarialFound
from perturbo.generators import GeneratorSpec
from perturbo.oracles import HalfspaceOracle, SphereOracle

from conftest import unit_vector


class NeverAdversarial:
    def __init__(self, shape):
        self.num_classes = 2
        self.input_shape = shape

    def classify(self, x):
        return 0


def fake_clock():
    state = {"t": 0.0}

    def clock():
        state["t"] += 0.001
        return state["t"]

    return clock


def sphere_task(dim=64, radius=2.0, budget=400):
    side = int(np.sqrt(dim))
    shape = (side, side, 1)
    x0 = Sample(np.full(dim, 0.5), shape)
    oracle = SphereOracle(x0.values, radius, shape)
    return AttackTask(origin=x0, true_label=0, oracle=oracle, budget=budget)


def halfspace_task(rng, dim=64, margin=0.6, budget=400):
    side = int(np.sqrt(dim))
    shape = (side, side, 1)
    w = unit_vector(rng, dim)
    x0 = Sample(rng.uniform(0.3, 0.7, size=dim), shape)
    oracle = HalfspaceOracle(w, float(w @ x0.values) + margin, shape)
    return AttackTask(origin=x0, true_label=0, oracle=oracle, budget=budget)


class TestRunAttack:
    def test_sphere_distance_is_radius_any_generator(self):
        task = sphere_task()
        search = SearchParams.defaults(task.origin.dim)
        for kind in ("perlin", "nearest"):
            spec = GeneratorSpec.make(kind, task.origin.shape)
            result = run_attack(task, spec, BOConfig(init_samples=3, rng_seed=7),
                                search, clock=fake_clock())
            assert result.found_adversarial
            assert abs(result.distance_l2 - 2.0) <= search.epsilon_bin

    def test_queries_used_equals_trace_length_and_budget_respected(self):
        task = sphere_task(budget=150)
        spec = GeneratorSpec.make("perlin", task.origin.shape)
        search = SearchParams.defaults(task.origin.dim)
        result = run_attack(task, spec, BOConfig(init_samples=3, rng_seed=1),
                            search, clock=fake_clock())
        assert result.queries_used == len(result.trace)
        assert result.queries_used <= task.budget

    def test_budget_exactly_exhausted_returns_incumbent(self):
        task = sphere_task(budget=40)
        spec = GeneratorSpec.make("perlin", task.origin.shape)
        search = SearchParams.defaults(task.origin.dim)
        result = run_attack(task, spec, BOConfig(init_samples=3, rng_seed=1),
                            search, clock=fake_clock())
        assert result.queries_used == 40
        assert result.found_adversarial

    def test_best_so_far_non_increasing(self, rng):
        task = halfspace_task(rng)
        spec = GeneratorSpec.make("perlin", task.origin.shape)
        search = SearchParams.defaults(task.origin.dim)
        result = run_attack(task, spec, BOConfig(init_samples=4, rng_seed=3),
                            search, clock=fake_clock())
        bests = [r.best_distance for r in result.trace.records]
        assert all(b >= a for a, b in zip(bests[1:], bests))

    def test_deterministic_trace_with_injected_clock(self, rng):
        task = halfspace_task(rng)
        spec = GeneratorSpec.make("perlin", task.origin.shape)
        search = SearchParams.defaults(task.origin.dim)
        a = run_attack(task, spec, BOConfig(init_samples=4, rng_seed=5),
                       search, clock=fake_clock())
        b = run_attack(task, spec, BOConfig(init_samples=4, rng_seed=5),
                       search, clock=fake_clock())
        assert a.trace.records == b.trace.records
        assert a.distance_l2 == b.distance_l2
        assert np.array_equal(a.best_point.coords, b.best_point.coords)

    def test_early_exit_on_stop_tolerance(self):
        # Any direction crosses the sphere at R, so a generous tolerance
        # triggers the early exit on the first BO iteration.
        task = sphere_task(radius=1.5, budget=400)
        spec = GeneratorSpec.make("perlin", task.origin.shape)
        search = SearchParams.defaults(task.origin.dim)
        result = run_attack(task, spec,
                            BOConfig(init_samples=2, stop_tolerance=2.5, rng_seed=0),
                            search, clock=fake_clock())
        assert result.converged
        assert result.distance_l2 <= 2.5
        assert result.found_adversarial
        # Verified adversarial: the returned point really crosses.
        assert task.oracle.classify(result.adversarial) == 1
        assert result.queries_used < task.budget

    def test_no_adversarial_found_carries_result(self):
        shape = (4, 4, 1)
        x0 = Sample(np.full(16, 0.5), shape)
        oracle = NeverAdversarial(shape)
        task = AttackTask(origin=x0, true_label=0, oracle=oracle, budget=60)
        spec = GeneratorSpec.make("perlin", shape)
        search = SearchParams(eta=0.5, epsilon_bin=0.01, delta_max=2.0)
        with pytest.raises(NoAdversarialFound) as exc_info:
            run_attack(task, spec, BOConfig(init_samples=2, rng_seed=0),
                       search, clock=fake_clock())
        result = exc_info.value.result
        assert result is not None
        assert not result.found_adversarial
        assert result.distance_l2 == search.delta_max

    def test_insufficient_budget(self):
        task = sphere_task(budget=1)
        spec = GeneratorSpec.make("perlin", task.origin.shape)
        search = SearchParams.defaults(task.origin.dim)
        with pytest.raises(InsufficientBudget):
            run_attack(task, spec, BOConfig(init_samples=2, rng_seed=0),
                       search, clock=fake_clock())

    def test_max_iterations_caps_evaluations(self):
        task = sphere_task(budget=10_000)
        spec = GeneratorSpec.make("perlin", task.origin.shape)
        search = SearchParams.defaults(task.origin.dim)
        result = run_attack(task, spec,
                            BOConfig(init_samples=2, max_iterations=4, rng_seed=0),
                            search, clock=fake_clock())
        assert result.queries_used < 10_000

    def test_targeted_mode_runs(self, rng):
        # Halfspace "class 1" as the target: same geometry as untargeted.
        task0 = halfspace_task(rng)
        task = AttackTask(origin=task0.origin, true_label=0, oracle=task0.oracle,
                          budget=task0.budget, target_label=1)
        spec = GeneratorSpec.make("perlin", task.origin.shape)
        search = SearchParams.defaults(task.origin.dim)
        result = run_attack(task, spec, BOConfig(init_samples=3, rng_seed=2),
                            search, clock=fake_clock())
        assert result.found_adversarial
        assert task.oracle.classify(result.adversarial) == 1


class TestRandomBaseline:
    def test_sphere_distance_is_radius(self):
        task = sphere_task()
        spec = GeneratorSpec.make("perlin", task.origin.shape)
        search = SearchParams.defaults(task.origin.dim)
        result = run_random_baseline(task, spec, search, seed=11, clock=fake_clock())
        assert abs(result.distance_l2 - 2.0) <= search.epsilon_bin

    def test_deterministic_for_seed(self, rng):
        task = halfspace_task(rng)
        spec = GeneratorSpec.make("perlin", task.origin.shape)
        search = SearchParams.defaults(task.origin.dim)
        a = run_random_baseline(task, spec, search, seed=4, clock=fake_clock())
        b = run_random_baseline(task, spec, search, seed=4, clock=fake_clock())
        assert a.trace.records == b.trace.records

    def test_uses_full_budget(self):
        task = sphere_task(budget=120)
        spec = GeneratorSpec.make("perlin", task.origin.shape)
        search = SearchParams.defaults(task.origin.dim)
        result = run_random_baseline(task, spec, search, seed=0, clock=fake_clock())
        assert result.queries_used == 120
        assert len(result.trace) == 120
