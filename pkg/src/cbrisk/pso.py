"""Particle swarm optimization for non-differentiable objectives.

Used to fit the local similarity exponents and the posterior-probability
rank weights, whose cross-validated objectives have no useful gradients.
Minimization convention throughout.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .dataset import DataError


@dataclass(frozen=True)
class PSOConfig:
    """Swarm hyperparameters and search box.

    ``seeded_positions`` are injected into the initial swarm (clipped to the
    box), guaranteeing the final best is never worse than those points.
    """

    lower: np.ndarray
    upper: np.ndarray
    swarm_size: int = 30
    iterations: int = 100
    inertia: float = 0.729
    cognitive: float = 1.49445
    social: float = 1.49445
    seed: int = 0
    seeded_positions: tuple = ()

    def __post_init__(self):
        lower = np.atleast_1d(np.asarray(self.lower, float))
        upper = np.atleast_1d(np.asarray(self.upper, float))
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        if lower.shape != upper.shape or (lower >= upper).any():
            raise DataError("bounds must satisfy lower < upper per dimension")
        if self.swarm_size < 2:
            raise DataError("swarm_size must be at least 2")
        if self.iterations < 0:
            raise DataError("iterations must be non-negative")
        if not 0.0 <= self.inertia <= 1.0:
            raise DataError("inertia must lie in [0, 1]")

    @property
    def n_dims(self) -> int:
        return self.lower.size


@dataclass
class PSOResult:
    position: np.ndarray
    cost: float
    history: np.ndarray  # best-so-far cost after init and each iteration
    n_evaluations: int


def _evaluate(
    cost: Callable[[np.ndarray], float], X: np.ndarray, jobs: int
) -> np.ndarray:
    def one(x):
        v = float(cost(x))
        return v if np.isfinite(v) else np.inf

    if jobs <= 1:
        values = [one(x) for x in X]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            values = list(pool.map(one, X))
    return np.asarray(values, float)


def pso_optimize(
    cost: Callable[[np.ndarray], float],
    config: PSOConfig,
    jobs: int = 1,
) -> PSOResult:
    """Minimize ``cost`` over the configured box.

    Velocity update: v' = inertia * v + cognitive * r1 * (pbest - x)
    + social * r2 * (gbest - x); positions move by v' and are clipped to
    the box, velocities are clamped to half the box width. All random
    draws come from one seeded generator advanced in a fixed order, so the
    result does not depend on evaluation scheduling (``jobs``).
    """
    rng = np.random.default_rng(config.seed)
    lower, upper = config.lower, config.upper
    d = config.n_dims
    X = rng.uniform(lower, upper, size=(config.swarm_size, d))
    for i, pos in enumerate(config.seeded_positions[: config.swarm_size]):
        X[i] = np.clip(np.asarray(pos, float), lower, upper)
    V = np.zeros_like(X)
    vmax = 0.5 * (upper - lower)

    values = _evaluate(cost, X, jobs)
    pbest_x = X.copy()
    pbest_y = values.copy()
    g = int(np.argmin(pbest_y))
    gbest_x = pbest_x[g].copy()
    gbest_y = float(pbest_y[g])
    history = [gbest_y]
    n_eval = config.swarm_size

    for _ in range(config.iterations):
        r1 = rng.random((config.swarm_size, d))
        r2 = rng.random((config.swarm_size, d))
        V = (
            config.inertia * V
            + config.cognitive * r1 * (pbest_x - X)
            + config.social * r2 * (gbest_x - X)
        )
        V = np.clip(V, -vmax, vmax)
        X = np.clip(X + V, lower, upper)
        values = _evaluate(cost, X, jobs)
        n_eval += config.swarm_size
        improved = values < pbest_y
        pbest_x[improved] = X[improved]
        pbest_y[improved] = values[improved]
        g = int(np.argmin(pbest_y))
        if pbest_y[g] < gbest_y:
            gbest_y = float(pbest_y[g])
            gbest_x = pbest_x[g].copy()
        history.append(gbest_y)

    return PSOResult(
        position=gbest_x,
        cost=gbest_y,
        history=np.asarray(history),
        n_evaluations=n_eval,
    )
