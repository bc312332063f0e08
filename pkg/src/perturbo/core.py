"""Domain types, the label-to-sign decision rule, and budgeted query accounting.

Everything here is deliberately small: flat float vectors with explicit
shape metadata, a decision rule turning opaque class labels into +1/-1,
and a counter that makes over-budget querying impossible. No score or
gradient access exists anywhere in this package; oracles expose labels
only.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import BudgetExhausted, ShapeMismatch, ZeroPerturbation

Shape = tuple[int, int, int]
DecisionRule = Callable[[int], int]


def _as_vector(values) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64).reshape(-1)
    if arr.size == 0:
        raise ValueError("empty value vector")
    if not np.all(np.isfinite(arr)):
        raise ValueError("vector contains non-finite entries")
    return arr


@dataclass(frozen=True)
class Sample:
    """A flat pixel vector with its (height, width, channels) shape."""

    values: np.ndarray
    shape: Shape

    def __post_init__(self):
        object.__setattr__(self, "values", _as_vector(self.values))
        h, w, c = self.shape
        if h * w * c != self.values.size:
            raise ShapeMismatch(
                f"shape {self.shape} does not match vector length {self.values.size}"
            )

    @property
    def dim(self) -> int:
        return self.values.size

    def as_image(self) -> np.ndarray:
        return self.values.reshape(self.shape)


@dataclass(frozen=True)
class Direction:
    """A unit-L2-norm search direction with Sample shape conventions."""

    values: np.ndarray
    shape: Shape

    def __post_init__(self):
        object.__setattr__(self, "values", _as_vector(self.values))
        h, w, c = self.shape
        if h * w * c != self.values.size:
            raise ShapeMismatch(
                f"shape {self.shape} does not match vector length {self.values.size}"
            )
        norm = float(np.linalg.norm(self.values))
        if abs(norm - 1.0) > 1e-9:
            raise ValueError(f"direction norm {norm!r} not within 1e-9 of 1")

    @property
    def linf(self) -> float:
        return float(np.max(np.abs(self.values)))


@dataclass(frozen=True)
class LowDimPoint:
    """A point in the normalized [0, 1]^d' search box."""

    coords: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.coords, dtype=np.float64).reshape(-1)
        if arr.size < 1:
            raise ValueError("low-dim point needs at least one coordinate")
        if not np.all(np.isfinite(arr)):
            raise ValueError("non-finite coordinates")
        if arr.min() < 0.0 or arr.max() > 1.0:
            raise ValueError("coordinates must lie in [0, 1]")
        object.__setattr__(self, "coords", arr)

    @property
    def dim(self) -> int:
        return self.coords.size


@dataclass(frozen=True)
class AttackTask:
    """One attack: original sample, true label, oracle handle, and budget.

    ``target_label`` is None for untargeted attacks, otherwise the class
    the adversarial example must be pushed into.
    """

    origin: Sample
    true_label: int
    oracle: object
    budget: int
    target_label: int | None = None

    def __post_init__(self):
        if self.budget < 1:
            raise ValueError("budget must be >= 1")
        if self.target_label is not None and self.target_label == self.true_label:
            raise ValueError("targeted attack must target a class other than the true label")

    @property
    def targeted(self) -> bool:
        return self.target_label is not None


@dataclass
class QueryCounter:
    """Monotone oracle-query counter; used never exceeds budget."""

    budget: int
    used: int = 0

    def __post_init__(self):
        if self.budget < 1:
            raise ValueError("budget must be >= 1")
        if not 0 <= self.used <= self.budget:
            raise ValueError("used must lie in [0, budget]")

    @property
    def remaining(self) -> int:
        return self.budget - self.used

    def tick(self) -> None:
        if self.used >= self.budget:
            raise BudgetExhausted()
        self.used += 1


def make_decision_rule(task: AttackTask) -> DecisionRule:
    """Map predicted labels to the attack's +1 (adversarial) / -1 sign.

    Untargeted: +1 iff the prediction differs from the true label.
    Targeted k: +1 iff the prediction equals k.
    """
    if task.targeted:
        k = task.target_label

        def rule(predicted: int) -> int:
            return 1 if predicted == k else -1

    else:
        y = task.true_label

        def rule(predicted: int) -> int:
            return -1 if predicted == y else 1

    return rule


def counted_query(rule: DecisionRule, oracle, point: Sample, counter: QueryCounter) -> int:
    """One budgeted hard-label query: count, classify, sign."""
    counter.tick()
    return rule(oracle.classify(point))


def normalize_direction(v, shape: Shape) -> Direction:
    """L2-normalize a perturbation vector into a search direction."""
    arr = np.asarray(v, dtype=np.float64).reshape(-1)
    norm = float(np.linalg.norm(arr))
    if norm < 1e-12:
        raise ZeroPerturbation(f"norm {norm!r} below 1e-12")
    return Direction(arr / norm, shape)
