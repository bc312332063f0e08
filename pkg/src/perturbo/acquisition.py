"""Expected Improvement (for minimization) and its box-constrained maximizer.

The incumbent is the smallest boundary distance observed so far, so a
candidate improves when its predicted value falls below it. Maximization
is seeded random multistart plus shrinking-radius local refinement; it
costs zero oracle queries and is fully deterministic given the config.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .core import LowDimPoint
from .gp import GPModel, posterior_many

_SIGMA_FLOOR = 1e-12
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class AcquisitionConfig:
    candidate_count: int = 1000
    refine_steps: int = 20
    refine_radius: float = 0.05
    rng_seed: int = 0

    def __post_init__(self):
        if self.candidate_count < 1:
            raise ValueError("candidate_count must be >= 1")
        if not 0.0 < self.refine_radius <= 0.5:
            raise ValueError("refine_radius must lie in (0, 0.5]")
        if self.refine_steps < 0:
            raise ValueError("refine_steps must be >= 0")


def expected_improvement(mean, variance, incumbent):
    """EI toward smaller values; vectorizes over mean/variance arrays."""
    mean = np.asarray(mean, dtype=np.float64)
    sigma = np.sqrt(np.maximum(np.asarray(variance, dtype=np.float64), 0.0))
    gap = incumbent - mean
    det = np.maximum(gap, 0.0)  # deterministic limit below the sigma floor
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(sigma >= _SIGMA_FLOOR, gap / np.where(sigma > 0, sigma, 1.0), 0.0)
        ei = gap * ndtr(z) + sigma * _INV_SQRT_2PI * np.exp(-0.5 * z * z)
    out = np.where(sigma >= _SIGMA_FLOOR, ei, det)
    if out.ndim == 0:
        return float(out)
    return out


def _ei_at(model: GPModel, coords: np.ndarray, incumbent: float) -> np.ndarray:
    mean, var = posterior_many(model, coords)
    return expected_improvement(mean, var, incumbent)


def maximize_acquisition(model: GPModel, incumbent: float,
                         cfg: AcquisitionConfig) -> LowDimPoint:
    """Pick the box point with the highest EI under the fitted model.

    Random candidates first, then local search around the best one with a
    radius that shrinks geometrically; only improving moves are accepted,
    so the result can never score below the best raw candidate.
    """
    d = model.train_points.shape[1]
    rng = np.random.default_rng(cfg.rng_seed)
    candidates = rng.uniform(0.0, 1.0, size=(cfg.candidate_count, d))
    scores = _ei_at(model, candidates, incumbent)
    best_idx = int(np.argmax(scores))
    best = candidates[best_idx].copy()
    best_score = float(scores[best_idx])
    raw_best_score = best_score

    radius = cfg.refine_radius
    for _ in range(cfg.refine_steps):
        probe = np.clip(best + rng.uniform(-radius, radius, size=d), 0.0, 1.0)
        score = float(_ei_at(model, probe[None, :], incumbent)[0])
        if score > best_score:
            best, best_score = probe, score
        radius *= 0.7

    assert best_score >= raw_best_score
    return LowDimPoint(best)
