"""Synthetic case generator with right-skewed features and a threshold label rule.

Stands in for confidential financial data in tests, demos and benchmarks.
Each feature j is a power transform of a latent uniform draw,
``x_j = u_j ** (1 + skew_j)``, so skew 0 gives a uniform feature and larger
skews concentrate mass near zero (a long right tail, as is typical for
balance-sheet figures). A case is labeled insolvent when its weighted
resource score ``sum_j beta_j * u_j + noise`` falls in the lowest
``n_insolvent`` scores, i.e. the label is a noisy threshold rule on a
weighted combination of the de-skewed features ``x_j ** (1 / (1 + skew_j))``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .dataset import Dataset, DataError, FeatureSchema, INSOLVENT, SOLVENT


@dataclass(frozen=True)
class SynthConfig:
    """Generator settings: sizes, skew, and the label rule's weights/noise."""

    n_features: int
    n_solvent: int
    n_insolvent: int
    skew: float | Sequence[float] = 1.5
    signal_weights: Optional[Sequence[float]] = None  # default: linear decay
    noise: float = 0.05
    missing_rate: float = 0.0

    def __post_init__(self):
        if self.n_features < 1:
            raise DataError("n_features must be positive")
        if self.n_solvent < 1 or self.n_insolvent < 1:
            raise DataError("class sizes must be positive")
        if not 0 <= self.missing_rate < 1:
            raise DataError("missing_rate must be in [0, 1)")

    def skew_vector(self) -> np.ndarray:
        s = np.broadcast_to(np.asarray(self.skew, float), (self.n_features,)).copy()
        if (s < 0).any():
            raise DataError("skew must be non-negative")
        return s

    def weight_vector(self) -> np.ndarray:
        if self.signal_weights is None:
            L = self.n_features
            w = (L - np.arange(L)) / L
        else:
            w = np.asarray(self.signal_weights, float)
            if w.shape != (self.n_features,):
                raise DataError("signal_weights length must match n_features")
        return w


def synth_generate(config: SynthConfig, seed: int) -> Dataset:
    """Draw a labeled synthetic dataset; identical output for equal seeds."""
    rng = np.random.default_rng(seed)
    n = config.n_solvent + config.n_insolvent
    L = config.n_features
    latent = rng.random((n, L))
    score = latent @ config.weight_vector()
    if config.noise > 0:
        score = score + config.noise * rng.standard_normal(n)
    # lowest-resource cases become the insolvent class, exactly n_insolvent of them
    order = np.argsort(score, kind="stable")
    labels = np.full(n, SOLVENT, dtype=np.int8)
    labels[order[: config.n_insolvent]] = INSOLVENT

    X = latent ** (1.0 + config.skew_vector())
    if config.missing_rate > 0:
        mask = rng.random((n, L)) < config.missing_rate
        X = np.where(mask, np.nan, X)

    schema = FeatureSchema.generic(L)
    ids = [f"S{i + 1:05d}" for i in range(n)]
    return Dataset(
        schema=schema,
        ids=ids,
        X=X,
        labels=labels,
        provenance=f"synthetic(seed={seed})",
    )
