"""Boundary-distance evaluation along a fixed direction, hard labels only.

This implements the two-phase search: a fine-grained linear scan out from
the original sample until the decision flips (or the distance cap is
hit), then a binary search that shrinks the bracket to the stopping
tolerance. The bracket invariant -- low end last answered -1, high end
last answered +1 -- is maintained throughout; a -1 at the midpoint
advances the LOW endpoint.

Distances are scalars along the unit direction, so widths and caps are
well-defined regardless of the sample space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .core import Direction, QueryCounter, Sample, counted_query
from .errors import BudgetExhausted


@dataclass(frozen=True)
class SearchParams:
    """Fine-search step, binary stopping tolerance, and the distance cap."""

    eta: float
    epsilon_bin: float
    delta_max: float

    def __post_init__(self):
        if not 0.0 < self.epsilon_bin < self.eta < self.delta_max:
            raise ValueError("need 0 < epsilon_bin < eta < delta_max")

    @classmethod
    def defaults(cls, dim: int) -> "SearchParams":
        """Defaults for a d-pixel [0,1] image: cap at the box diagonal."""
        delta_max = math.sqrt(dim)
        return cls(eta=0.05 * delta_max, epsilon_bin=1e-3 * delta_max,
                   delta_max=delta_max)


@dataclass(frozen=True)
class BoundaryDistance:
    """Result of one distance evaluation.

    ``adversarial`` records whether the point at ``delta`` ever answered
    +1 during the search; ``capped`` marks evaluations that hit the
    distance cap or were truncated by the query budget before reaching
    the stopping tolerance. ``brackets`` (when recorded) holds the
    (low, high) pairs: the initial bracket, then one per binary step.
    """

    delta: float
    capped: bool
    queries_spent: int
    adversarial: bool
    brackets: tuple = field(default=(), compare=False)


def evaluate_distance(rule, oracle, x0: Sample, theta: Direction,
                      params: SearchParams, counter: QueryCounter,
                      probe_hook=None, record_brackets: bool = False) -> BoundaryDistance:
    """Distance from ``x0`` to the decision boundary along ``theta``.

    Every oracle query passes through the counter. If the budget runs out
    mid-search, BudgetExhausted is re-raised with ``partial`` set to the
    best bracket upper bound so far (capped), or the distance cap if the
    fine phase never saw a +1.
    """
    spent = 0
    brackets: list[tuple[float, float]] = []

    def probe(delta: float) -> int:
        nonlocal spent
        point = Sample(x0.values + delta * theta.values, x0.shape)
        sign = counted_query(rule, oracle, point, counter)
        spent += 1
        if probe_hook is not None:
            probe_hook(delta, sign)
        return sign

    def partial_result(high: float | None) -> BoundaryDistance:
        if high is None:
            return BoundaryDistance(params.delta_max, capped=True,
                                    queries_spent=spent, adversarial=False,
                                    brackets=tuple(brackets))
        return BoundaryDistance(high, capped=True, queries_spent=spent,
                                adversarial=True, brackets=tuple(brackets))

    # Fine-grained phase: probe eta, 2*eta, ... (last probe clamped to the
    # cap) until the decision flips or the cap answers -1.
    low = 0.0
    high = None
    step = 1
    try:
        while True:
            delta = min(step * params.eta, params.delta_max)
            if probe(delta) == 1:
                high = delta
                break
            low = delta
            if delta >= params.delta_max:
                return BoundaryDistance(params.delta_max, capped=True,
                                        queries_spent=spent, adversarial=False,
                                        brackets=tuple(brackets))
            step += 1

        if record_brackets:
            brackets.append((low, high))

        # Binary phase: halve the bracket, keeping low -> -1 and high -> +1.
        while high - low > params.epsilon_bin:
            mid = 0.5 * (low + high)
            if probe(mid) == -1:
                low = mid
            else:
                high = mid
            if record_brackets:
                brackets.append((low, high))
    except BudgetExhausted as exc:
        raise BudgetExhausted(partial=partial_result(high)) from exc

    return BoundaryDistance(high, capped=False, queries_spent=spent,
                            adversarial=True, brackets=tuple(brackets))
