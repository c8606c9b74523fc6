"""Aggregation weights from noise estimates: the inverse-noise incentive.

Cleaner updates get larger weights, so influence on the global model is the
reward for uploading less-perturbed adapters. There is deliberately no cap:
a near-zero-noise client may dominate the aggregate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .estimation import NoiseEstimates

DEFAULT_TAU = 1e-8
SIMPLEX_TOL = 1e-9


@dataclass(frozen=True)
class WeightVector:
    """Simplex weights: every entry in (0, 1], summing to 1 within 1e-9."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 1 or w.size == 0:
            raise ValueError("weights must be a non-empty vector")
        if (w <= 0).any() or (w > 1).any():
            raise ValueError("weights must lie in (0, 1]")
        if abs(w.sum() - 1.0) > SIMPLEX_TOL:
            raise ValueError("weights must sum to 1 within 1e-9")
        object.__setattr__(self, "weights", w)

    def __len__(self) -> int:
        return self.weights.size

    @classmethod
    def uniform(cls, n: int) -> "WeightVector":
        return cls(np.full(n, 1.0 / n))


def inverse_noise_weights(est: NoiseEstimates, tau: float = DEFAULT_TAU) -> WeightVector:
    """Map estimates to simplex weights: w_i = s_i / sum(s), s_i = 1/(sigma_hat_i + tau).

    tau guards division by zero for estimated-clean clients; each weight is
    strictly decreasing in its own estimate, holding the others fixed.
    """
    if tau <= 0:
        raise ValueError("tau must be positive")
    scores = 1.0 / (est.sigma_hat + tau)
    return WeightVector(scores / scores.sum())
