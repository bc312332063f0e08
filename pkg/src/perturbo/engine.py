"""The attack loop: seed the surrogate, then alternate GP fit, acquisition
argmax, and boundary-distance evaluation until the tolerance or budget is
hit; return the nearest adversarial example found. A random-direction-
search baseline shares the evaluation machinery and trace format so the
two are directly comparable.

The budget is denominated in oracle queries; the iteration cap is a
secondary stop. Capped evaluations enter the observation set at the
distance cap, which flattens the surrogate in hopeless regions.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, replace

import numpy as np

from .acquisition import AcquisitionConfig, maximize_acquisition
from .boundary import BoundaryDistance, SearchParams, evaluate_distance
from .core import AttackTask, LowDimPoint, QueryCounter, Sample, make_decision_rule, normalize_direction
from .errors import BudgetExhausted, InsufficientBudget, NoAdversarialFound
from .generators import GeneratorSpec, generate
from .gp import ObservationSet, fit
from .trace import AttackTrace, TraceRecord


@dataclass(frozen=True)
class BOConfig:
    """Initialization size, total evaluation cap, stop tolerance, seed.

    ``stop_tolerance`` of 0 disables early exit (run to budget).
    ``max_iterations`` counts all evaluations, initialization included.
    """

    init_samples: int = 5
    max_iterations: int = 10_000
    stop_tolerance: float = 0.0
    rng_seed: int = 0

    def __post_init__(self):
        if self.init_samples < 1:
            raise ValueError("init_samples must be >= 1")
        if self.max_iterations < self.init_samples:
            raise ValueError("max_iterations must be >= init_samples")
        if self.stop_tolerance < 0.0:
            raise ValueError("stop_tolerance must be >= 0")


@dataclass(frozen=True)
class AttackResult:
    adversarial: Sample
    best_point: LowDimPoint
    distance_l2: float
    distance_linf: float
    queries_used: int
    converged: bool
    found_adversarial: bool
    trace: AttackTrace


class _Run:
    """Shared per-run state: counter, observations, trace, best-so-far."""

    def __init__(self, task: AttackTask, gen_spec: GeneratorSpec,
                 search: SearchParams, clock, trace_header: dict):
        self.task = task
        self.gen_spec = gen_spec
        self.search = search
        self.rule = make_decision_rule(task)
        self.counter = QueryCounter(budget=task.budget)
        self.obs = ObservationSet()
        self.trace = AttackTrace(header=dict(trace_header))
        self.clock = clock
        self.t0 = clock()
        # Universal upper bound on the distance until a +1 probe improves it.
        self.best_seen = search.delta_max
        self.record_hook = None

    def _probe_hook(self, delta: float, sign: int) -> None:
        if sign == 1 and delta < self.best_seen:
            self.best_seen = delta
        self.trace.append(TraceRecord(
            query_index=self.counter.used,
            delta_probe=delta,
            decision=sign,
            best_distance=self.best_seen,
            elapsed_ms=(self.clock() - self.t0) * 1000.0,
        ))
        if self.record_hook is not None:
            self.record_hook(self.trace.records[-1])

    def direction_for(self, point: LowDimPoint):
        pert = generate(self.gen_spec, point)
        return normalize_direction(pert.values, self.task.origin.shape)

    def evaluate(self, point: LowDimPoint) -> BoundaryDistance:
        theta = self.direction_for(point)
        return evaluate_distance(self.rule, self.task.oracle, self.task.origin,
                                 theta, self.search, self.counter,
                                 probe_hook=self._probe_hook)

    def finalize(self, converged_at=None) -> AttackResult:
        """Build the result from the incumbent (or the early-exit point)."""
        if converged_at is not None:
            point, value = converged_at
            found = True
        else:
            point, value, _ = self.obs.incumbent()
            found = self.obs.any_adversarial()
        theta = self.direction_for(point)
        adv = Sample(self.task.origin.values + value * theta.values,
                     self.task.origin.shape)
        result = AttackResult(
            adversarial=adv,
            best_point=point,
            distance_l2=value,
            distance_linf=value * theta.linf,
            queries_used=self.counter.used,
            converged=converged_at is not None,
            found_adversarial=found,
            trace=self.trace,
        )
        if not found:
            raise NoAdversarialFound(result=result)
        return result


def run_attack(task: AttackTask, gen_spec: GeneratorSpec, bo: BOConfig,
               search: SearchParams, acq: AcquisitionConfig | None = None,
               clock=time.perf_counter, trace_header: dict | None = None,
               record_hook=None) -> AttackResult:
    """Full Bayesian-optimization attack; see module docstring.

    Raises InsufficientBudget if the budget dies before the first
    evaluation completes, and NoAdversarialFound (result attached) if no
    evaluated direction ever crossed the boundary. ``record_hook``
    receives each trace record as it is produced (for streaming writers).
    """
    header = trace_header if trace_header is not None else {"seed": bo.rng_seed}
    run = _Run(task, gen_spec, search, clock, header)
    run.record_hook = record_hook
    if acq is None:
        acq = AcquisitionConfig()
    d_in = gen_spec.d_in
    init_rng = np.random.default_rng(np.random.SeedSequence(bo.rng_seed))
    acq_root = np.random.SeedSequence(entropy=bo.rng_seed, spawn_key=(1,))

    # Initialization: seeded-uniform box points.
    for _ in range(bo.init_samples):
        if run.counter.remaining == 0:
            break
        point = LowDimPoint(init_rng.uniform(0.0, 1.0, size=d_in))
        try:
            bd = run.evaluate(point)
        except BudgetExhausted as exc:
            if exc.partial is not None and len(run.obs) > 0:
                run.obs.add(point, exc.partial.delta, adversarial=exc.partial.adversarial)
            if len(run.obs) == 0:
                raise InsufficientBudget(
                    "budget exhausted before the first distance evaluation completed"
                ) from exc
            return run.finalize()
        run.obs.add(point, bd.delta, adversarial=bd.adversarial)

    if len(run.obs) == 0:
        raise InsufficientBudget("no distance evaluation completed")

    # Optimization loop: fit, propose, evaluate.
    t = len(run.obs)
    while t < bo.max_iterations and run.counter.remaining > 0:
        model = fit(run.obs)
        child_seed = int(acq_root.spawn(1)[0].generate_state(1)[0])
        point = maximize_acquisition(model, run.obs.incumbent_value,
                                     replace(acq, rng_seed=child_seed))
        if run.obs.contains_near(point):
            # A degenerate argmax would waste budget re-measuring a known
            # direction; fall back to a seeded-uniform draw.
            point = LowDimPoint(init_rng.uniform(0.0, 1.0, size=d_in))
        try:
            bd = run.evaluate(point)
        except BudgetExhausted as exc:
            if exc.partial is not None:
                run.obs.add(point, exc.partial.delta, adversarial=exc.partial.adversarial)
            break
        t += 1
        if bo.stop_tolerance > 0 and bd.adversarial and bd.delta <= bo.stop_tolerance:
            return run.finalize(converged_at=(point, bd.delta))
        run.obs.add(point, bd.delta, adversarial=bd.adversarial)

    return run.finalize()


def run_random_baseline(task: AttackTask, gen_spec: GeneratorSpec,
                        search: SearchParams, seed: int = 0,
                        clock=time.perf_counter,
                        trace_header: dict | None = None,
                        record_hook=None) -> AttackResult:
    """Uniform direction sampling with the same evaluation and trace format."""
    header = trace_header if trace_header is not None else {"seed": seed}
    run = _Run(task, gen_spec, search, clock, header)
    run.record_hook = record_hook
    rng = np.random.default_rng(np.random.SeedSequence(seed))

    while run.counter.remaining > 0:
        point = LowDimPoint(rng.uniform(0.0, 1.0, size=gen_spec.d_in))
        try:
            bd = run.evaluate(point)
        except BudgetExhausted as exc:
            if exc.partial is not None and len(run.obs) > 0:
                run.obs.add(point, exc.partial.delta, adversarial=exc.partial.adversarial)
            if len(run.obs) == 0:
                raise InsufficientBudget(
                    "budget exhausted before the first distance evaluation completed"
                ) from exc
            break
        run.obs.add(point, bd.delta, adversarial=bd.adversarial)

    if len(run.obs) == 0:
        raise InsufficientBudget("no distance evaluation completed")
    return run.finalize()
