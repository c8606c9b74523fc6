"""Client-side noise adaptation: UCB over a discrete set of noise levels.

Each client tracks an exponential moving average of the utility observed
after playing each level and picks the level with the largest optimistic
index. The EMA (rather than a running mean) keeps the estimates responsive
when the utility landscape drifts across rounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

ACTION_PRESETS: dict[str, tuple[float, ...]] = {
    "coarse": (0.0, 0.1, 0.5, 1.0),
    "moderate": (0.0, 0.2, 0.4, 0.6, 0.8, 1.0),
    "fine": tuple(round(0.1 * i, 1) for i in range(11)),
}


@dataclass(frozen=True)
class ActionSet:
    """Sorted distinct noise levels in [0, 1] a client may choose from."""

    levels: tuple[float, ...]

    def __post_init__(self):
        levels = tuple(float(v) for v in self.levels)
        if not levels:
            raise ValueError("action set must be nonempty")
        if any(not 0.0 <= v <= 1.0 for v in levels):
            raise ValueError("levels must lie in [0, 1]")
        if sorted(set(levels)) != list(levels):
            raise ValueError("levels must be sorted ascending and distinct")
        object.__setattr__(self, "levels", levels)

    def __len__(self) -> int:
        return len(self.levels)

    @classmethod
    def from_spec(cls, spec: "str | Sequence[float] | ActionSet") -> "ActionSet":
        """Build from a preset name, an explicit level sequence, or pass through."""
        if isinstance(spec, ActionSet):
            return spec
        if isinstance(spec, str):
            if spec not in ACTION_PRESETS:
                raise ValueError(
                    f"unknown action-set preset {spec!r}; known: {sorted(ACTION_PRESETS)}"
                )
            return cls(ACTION_PRESETS[spec])
        return cls(tuple(spec))


@dataclass(frozen=True)
class UcbState:
    """Per-client bandit statistics: EMA utility per level, pull counts, round."""

    mu_hat: np.ndarray
    counts: np.ndarray
    round: int = 0

    def __post_init__(self):
        mu = np.asarray(self.mu_hat, dtype=np.float64)
        counts = np.asarray(self.counts, dtype=np.int64)
        if mu.shape != counts.shape or mu.ndim != 1:
            raise ValueError("mu_hat and counts must be vectors of equal length")
        if (counts < 0).any() or counts.sum() > self.round:
            raise ValueError("counts must be non-negative and sum to at most round")
        object.__setattr__(self, "mu_hat", mu)
        object.__setattr__(self, "counts", counts)

    @classmethod
    def fresh(cls, n_actions: int, mu_0: float) -> "UcbState":
        return cls(np.full(n_actions, float(mu_0)), np.zeros(n_actions, dtype=np.int64))


@dataclass(frozen=True)
class PrivacyPreference:
    """Weight of the privacy term in a client's utility; non-negative."""

    gamma: float

    def __post_init__(self):
        if self.gamma < 0:
            raise ValueError("gamma must be non-negative")


def ucb_select(state: UcbState, actions: ActionSet, kappa: float, t: int) -> int:
    """Index of the level maximizing mu_hat_k + kappa*sqrt(2 ln t / max(1, n_k)).

    Ties break toward the lowest index, so selection is deterministic.
    """
    if t < 1:
        raise ValueError("round t must be >= 1")
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    if len(state.mu_hat) != len(actions):
        raise ValueError("state size does not match action set")
    bonus = kappa * np.sqrt(2.0 * math.log(t) / np.maximum(1, state.counts))
    return int(np.argmax(state.mu_hat + bonus))


def ucb_update(state: UcbState, k: int, utility: float, beta: float) -> UcbState:
    """Record one observation for level k: bump its count, EMA-update its mean."""
    if not 0.0 < beta <= 1.0:
        raise ValueError("beta must be in (0, 1]")
    if not 0 <= k < len(state.mu_hat):
        raise ValueError(f"action index {k} out of range")
    mu = state.mu_hat.copy()
    counts = state.counts.copy()
    mu[k] = (1.0 - beta) * mu[k] + beta * utility
    counts[k] += 1
    return UcbState(mu, counts, state.round + 1)


def client_utility(local_accuracy: float, noise_level: float, gamma: float) -> float:
    """Normalized per-round utility: (accuracy + gamma * noise_level) / (1 + gamma).

    The normalization keeps utilities in [0, 1] and comparable across
    clients with different privacy preferences.
    """
    if not 0.0 <= local_accuracy <= 1.0:
        raise ValueError("local_accuracy must be in [0, 1]")
    if not 0.0 <= noise_level <= 1.0:
        raise ValueError("noise_level must be in [0, 1]")
    if gamma < 0:
        raise ValueError("gamma must be non-negative")
    return (local_accuracy + gamma * noise_level) / (1.0 + gamma)


def sample_preferences(
    n: int, mu: float, std: float, rng: np.random.Generator
) -> list[PrivacyPreference]:
    """Draw n privacy preferences ~ N(mu, std^2), clamped below at 0."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if std < 0:
        raise ValueError("std must be non-negative")
    draws = mu + std * rng.standard_normal(n)
    return [PrivacyPreference(max(0.0, float(g))) for g in draws]
