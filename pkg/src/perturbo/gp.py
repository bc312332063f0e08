"""Gaussian-process regression over the [0, 1]^d' box with a Matern 5/2 kernel.

The surrogate models observed boundary distances. Values are standardized
before fitting; hyperparameters come from a deterministic log-marginal-
likelihood grid search so the whole pipeline is reproducible without an
iterative optimizer in the loop.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_solve, cholesky, solve_triangular
from scipy.spatial.distance import cdist

from .core import LowDimPoint
from .errors import SingularKernel

_SQRT5 = math.sqrt(5.0)

# Hyperparameter grid (standardized-value space).
LENGTH_SCALE_GRID = np.logspace(-2.0, 1.0, 16)
SIGNAL_VARIANCE_GRID = (0.5, 1.0, 2.0)

DEFAULT_JITTER = 1e-6
MAX_JITTER = 1e-4
DUPLICATE_RADIUS = 1e-9


@dataclass(frozen=True)
class KernelParams:
    length_scale: float
    signal_variance: float
    jitter: float = DEFAULT_JITTER

    def __post_init__(self):
        if not 1e-3 <= self.length_scale <= 1e3:
            raise ValueError("length_scale outside [1e-3, 1e3]")
        if not 1e-6 <= self.signal_variance <= 1e6:
            raise ValueError("signal_variance outside [1e-6, 1e6]")
        if self.jitter < 0.0:
            raise ValueError("jitter must be >= 0")


def matern52_r(r, params: KernelParams):
    """Kernel value as a function of Euclidean distance r (array or scalar)."""
    s = np.asarray(r, dtype=np.float64) * (_SQRT5 / params.length_scale)
    return params.signal_variance * (1.0 + s + s * s / 3.0) * np.exp(-s)


def matern52(x: LowDimPoint, x2: LowDimPoint, params: KernelParams) -> float:
    """Matern 5/2 covariance between two box points."""
    if x.dim != x2.dim:
        raise ValueError("points must share a dimension")
    r = float(np.linalg.norm(x.coords - x2.coords))
    return float(matern52_r(r, params))


class ObservationSet:
    """The (point, distance) pairs driving the posterior, plus the incumbent.

    Near-duplicate points (within 1e-9) are rejected at insertion to keep
    the kernel matrix well conditioned. ``adversarial`` tracks whether the
    evaluation actually crossed the boundary, which decides which
    observation an attack may return as its adversarial example.
    """

    def __init__(self):
        self._points: list[np.ndarray] = []
        self._values: list[float] = []
        self._adversarial: list[bool] = []

    def __len__(self) -> int:
        return len(self._points)

    def add(self, point: LowDimPoint, value: float, adversarial: bool = True) -> bool:
        """Insert an observation; returns False for rejected near-duplicates."""
        if not math.isfinite(value):
            raise ValueError("observation value must be finite")
        coords = point.coords
        for existing in self._points:
            if coords.size == existing.size and np.linalg.norm(coords - existing) < DUPLICATE_RADIUS:
                return False
        self._points.append(coords.copy())
        self._values.append(float(value))
        self._adversarial.append(bool(adversarial))
        return True

    def contains_near(self, point: LowDimPoint) -> bool:
        coords = point.coords
        return any(
            coords.size == p.size and np.linalg.norm(coords - p) < DUPLICATE_RADIUS
            for p in self._points
        )

    @property
    def points_array(self) -> np.ndarray:
        return np.array(self._points)

    @property
    def values_array(self) -> np.ndarray:
        return np.array(self._values)

    @property
    def incumbent_index(self) -> int:
        """Index of the smallest value; ties broken toward verified-adversarial
        observations, then toward the earlier observation."""
        if not self._values:
            raise ValueError("no observations")
        order = sorted(
            range(len(self._values)),
            key=lambda i: (self._values[i], not self._adversarial[i], i),
        )
        return order[0]

    @property
    def incumbent_value(self) -> float:
        return self._values[self.incumbent_index]

    def incumbent(self) -> tuple[LowDimPoint, float, bool]:
        i = self.incumbent_index
        return LowDimPoint(self._points[i]), self._values[i], self._adversarial[i]

    def any_adversarial(self) -> bool:
        return any(self._adversarial)


@dataclass(frozen=True)
class GPModel:
    """Fitted GP: kernel, standardization constants, Cholesky factor, weights."""

    params: KernelParams
    train_points: np.ndarray
    value_mean: float
    value_std: float
    chol: np.ndarray = field(repr=False)
    alpha: np.ndarray = field(repr=False)

    @property
    def n_train(self) -> int:
        return self.train_points.shape[0]


def _log_marginal_likelihood(y: np.ndarray, chol: np.ndarray, alpha: np.ndarray) -> float:
    n = y.size
    return float(
        -0.5 * y @ alpha - np.sum(np.log(np.diag(chol))) - 0.5 * n * math.log(2.0 * math.pi)
    )


def _try_cholesky(K: np.ndarray, jitter: float) -> tuple[np.ndarray, float]:
    """Lower Cholesky of K + jitter*I, escalating jitter x10 up to MAX_JITTER."""
    j = jitter if jitter > 0 else DEFAULT_JITTER
    while True:
        try:
            L = cholesky(K + j * np.eye(K.shape[0]), lower=True)
            return L, j
        except (np.linalg.LinAlgError, ValueError):
            if j >= MAX_JITTER:
                raise SingularKernel(f"Cholesky failed at jitter {j}") from None
            j = min(j * 10.0, MAX_JITTER)


def fit(obs: ObservationSet, jitter: float = DEFAULT_JITTER) -> GPModel:
    """Standardize values, grid-search hyperparameters, factor the kernel."""
    if len(obs) == 0:
        raise ValueError("cannot fit a GP on zero observations")
    X = obs.points_array
    y_raw = obs.values_array
    mean = float(np.mean(y_raw))
    std = float(np.std(y_raw))
    if std < 1e-12:
        std = 1.0
    y = (y_raw - mean) / std

    r = cdist(X, X)
    best = None
    for ls in LENGTH_SCALE_GRID:
        for sv in SIGNAL_VARIANCE_GRID:
            params = KernelParams(length_scale=float(ls), signal_variance=float(sv),
                                  jitter=jitter)
            K = matern52_r(r, params)
            try:
                L, used_jitter = _try_cholesky(K, jitter)
            except SingularKernel:
                continue
            alpha = cho_solve((L, True), y)
            lml = _log_marginal_likelihood(y, L, alpha)
            if best is None or lml > best[0]:
                best = (lml, params, L, alpha, used_jitter)
    if best is None:
        raise SingularKernel("no hyperparameter setting produced a positive-definite kernel")
    _, params, L, alpha, used_jitter = best
    if used_jitter != params.jitter:
        params = KernelParams(params.length_scale, params.signal_variance, used_jitter)
    return GPModel(params=params, train_points=X, value_mean=mean, value_std=std,
                   chol=L, alpha=alpha)


def posterior_many(model: GPModel, coords: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Posterior mean/variance (de-standardized) at an (m, d) array of points."""
    coords = np.atleast_2d(np.asarray(coords, dtype=np.float64))
    k_star = matern52_r(cdist(model.train_points, coords), model.params)
    mean_std = k_star.T @ model.alpha
    v = solve_triangular(model.chol, k_star, lower=True)
    var_std = np.maximum(model.params.signal_variance - np.sum(v * v, axis=0), 0.0)
    mean = mean_std * model.value_std + model.value_mean
    var = var_std * model.value_std ** 2
    return mean, var


def posterior(model: GPModel, x: LowDimPoint) -> tuple[float, float]:
    """Posterior mean and (non-negative) variance at a single box point."""
    mean, var = posterior_many(model, x.coords[None, :])
    return float(mean[0]), float(var[0])
