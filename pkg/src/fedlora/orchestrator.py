"""The federated round loop, run-level metrics, sweeps, and baselines.

One round: every client trains an adapter on a fresh shard, picks a noise
level (bandit policy or a fixed profile), perturbs and uploads; the server
estimates per-client noise from the uploaded matrices alone, maps estimates
to aggregation weights, merges the weighted update, and the clients observe
their utility against the new global model.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from . import task as task_mod
from .adapters import (
    ClientUpdate,
    GlobalModel,
    aggregate_avg_separate,
    aggregate_stacked,
    merge_global,
    perturb_adapter,
)
from .estimation import EstimationSource, apply_estimation_bias, estimate_noise
from .policy import ActionSet, UcbState, client_utility, sample_preferences, ucb_select, ucb_update
from .seeding import Stream, stream
from .task import Dataset, Split, TaskConfig
from .weighting import DEFAULT_TAU, WeightVector, inverse_noise_weights

# fixed heterogeneous profile used by the aggregator-comparison experiments
# (mean normalized level 0.37, spanning clean through maximally noisy clients)
HETEROGENEOUS_LEVELS = (0.0, 0.0, 0.1, 0.1, 0.5, 0.5, 0.5, 1.0, 1.0, 1.0)

STABILIZATION_WINDOW = 5


class Aggregator(str, Enum):
    NOISE_WEIGHTED = "noise_weighted"  # estimate noise, inverse-noise weighted stacking
    UNIFORM_STACK = "uniform_stack"  # stacking with uniform weights
    SEPARATE_AVG = "separate_avg"  # mean(B) @ mean(A)


@dataclass(frozen=True)
class SimConfig:
    seed: int = 0
    n_clients: int = 10
    rounds: int = 20
    alpha_dir: float = 0.3
    gamma_mu: float = 0.5
    gamma_std: float = 0.1
    sigma_max: float = 0.1
    action_set: str | tuple[float, ...] = "coarse"
    # defaults tuned so strategies settle within a 40-round horizon: a small
    # exploration bonus relative to the per-level utility gaps, and an EMA
    # that burns off the optimistic initialization within a few pulls
    kappa: float = 0.04
    beta: float = 0.7
    mu_0: float = 1.0
    aggregator: Aggregator = Aggregator.NOISE_WEIGHTED
    estimation_source: EstimationSource = EstimationSource.B_ONLY
    bias_rho: float = 1.0
    tau: float = DEFAULT_TAU
    ina_enabled: bool = True
    fixed_levels: tuple[float, ...] | float | None = None
    fresh_proportions: bool = False
    n_test: int = 2000
    task: TaskConfig = field(default_factory=TaskConfig)

    def __post_init__(self):
        object.__setattr__(self, "aggregator", Aggregator(self.aggregator))
        object.__setattr__(self, "estimation_source", EstimationSource(self.estimation_source))
        if isinstance(self.action_set, (list, tuple)):
            object.__setattr__(self, "action_set", tuple(float(v) for v in self.action_set))
        if self.rounds < 1:
            raise ValueError("rounds must be >= 1")
        if self.n_clients < 1:
            raise ValueError("n_clients must be >= 1")
        if self.aggregator is Aggregator.NOISE_WEIGHTED and self.n_clients < 3:
            raise ValueError("noise_weighted aggregation needs at least 3 clients")
        if self.sigma_max <= 0:
            raise ValueError("sigma_max must be positive")
        if not self.ina_enabled and self.fixed_levels is None:
            raise ValueError("fixed_levels is required when ina_enabled is false")
        ActionSet.from_spec(self.action_set)  # validate eagerly
        self.level_profile()  # validate fixed levels eagerly

    def actions(self) -> ActionSet:
        return ActionSet.from_spec(self.action_set)

    def level_profile(self) -> np.ndarray | None:
        """Per-client fixed levels (broadcast from a scalar), or None under the policy."""
        if self.fixed_levels is None:
            return None
        levels = np.atleast_1d(np.asarray(self.fixed_levels, dtype=np.float64))
        if levels.size == 1:
            levels = np.full(self.n_clients, levels[0])
        if levels.size != self.n_clients:
            raise ValueError("fixed_levels length must equal n_clients")
        if (levels < 0).any() or (levels > 1).any():
            raise ValueError("fixed levels must lie in [0, 1]")
        return levels


@dataclass(frozen=True)
class RoundRecord:
    round: int
    global_accuracy: float
    local_accuracy: np.ndarray
    levels: np.ndarray
    true_stds: np.ndarray
    sigma_hat: np.ndarray  # NaN when the aggregator does not estimate
    weights: np.ndarray
    utilities: np.ndarray
    mu_hat: np.ndarray  # (n_clients, n_actions) policy estimates after the round


@dataclass(frozen=True)
class RunSummary:
    """Run-level metrics: means over rounds (and clients where applicable)."""

    global_accuracy_mean: float
    local_accuracy_mean: float
    utility_mean: float
    noise_level_mean: float
    stabilization_round: int | None
    records: tuple[RoundRecord, ...]
    config: SimConfig


@dataclass
class SimState:
    model: GlobalModel
    test_set: Dataset
    class_weights: np.ndarray  # (n_clients, n_classes)
    gammas: np.ndarray
    ucb: list[UcbState]
    t: int = 0


def init_state(cfg: SimConfig) -> SimState:
    tcfg = cfg.task
    class_weights = task_mod.dirichlet_class_weights(
        cfg.n_clients, tcfg.n_classes, cfg.alpha_dir, stream(cfg.seed, Stream.DATA, 0)
    )
    test_set = task_mod.gen_mixture_data(
        cfg.n_test,
        tcfg.d_in,
        tcfg.n_classes,
        tcfg.class_separation,
        stream(cfg.seed, Stream.DATA, 1),
        Split.TEST,
    )
    gammas = np.array(
        [
            p.gamma
            for p in sample_preferences(
                cfg.n_clients, cfg.gamma_mu, cfg.gamma_std, stream(cfg.seed, Stream.POLICY, 0)
            )
        ]
    )
    model = GlobalModel(base=np.zeros((tcfg.n_classes, tcfg.d_in)))
    ucb = [UcbState.fresh(len(cfg.actions()), cfg.mu_0) for _ in range(cfg.n_clients)]
    return SimState(model, test_set, class_weights, gammas, ucb)


def _client_update(cfg: SimConfig, state: SimState, client_id: int, t: int):
    """Draw the round's fresh shard and train an adapter on it."""
    tcfg = cfg.task
    shard = task_mod.sample_shard(
        tcfg.n_per_client,
        state.class_weights[client_id],
        tcfg.d_in,
        tcfg.class_separation,
        stream(cfg.seed, Stream.DATA, 2, client_id, t),
    )
    adapter = task_mod.local_train(
        state.model, shard, tcfg, stream(cfg.seed, Stream.INIT, client_id, t)
    )
    return adapter, shard


def run_round(state: SimState, cfg: SimConfig) -> RoundRecord:
    """Advance the simulation by one round and return its record.

    The model is only replaced after aggregation succeeds, so a failing
    round leaves the state untouched.
    """
    t = state.t + 1
    n = cfg.n_clients
    actions = cfg.actions()
    profile = cfg.level_profile()

    if cfg.fresh_proportions:
        state.class_weights = task_mod.dirichlet_class_weights(
            n, cfg.task.n_classes, cfg.alpha_dir, stream(cfg.seed, Stream.DATA, 3, t)
        )

    trained = [_client_update(cfg, state, i, t) for i in range(n)]
    shards = [shard for _, shard in trained]

    if cfg.ina_enabled:
        chosen = [ucb_select(state.ucb[i], actions, cfg.kappa, t) for i in range(n)]
        levels = np.array([actions.levels[k] for k in chosen])
    else:
        chosen = None
        levels = profile.copy()

    updates = [
        ClientUpdate(
            client_id=i,
            round=t,
            adapter=perturb_adapter(
                trained[i][0], levels[i], cfg.sigma_max, stream(cfg.seed, Stream.NOISE, i, t)
            ),
            true_noise_level=float(levels[i]),
        )
        for i in range(n)
    ]
    uploaded = [u.adapter for u in updates]

    sigma_hat = np.full(n, np.nan)
    if cfg.aggregator is Aggregator.NOISE_WEIGHTED:
        est = estimate_noise(uploaded, cfg.estimation_source)
        if cfg.bias_rho != 1.0:
            est = apply_estimation_bias(est, cfg.bias_rho)
        weight_vec = inverse_noise_weights(est, cfg.tau)
        delta = aggregate_stacked(uploaded, weight_vec.weights)
        sigma_hat = est.sigma_hat
    elif cfg.aggregator is Aggregator.UNIFORM_STACK:
        weight_vec = WeightVector.uniform(n)
        delta = aggregate_stacked(uploaded, weight_vec.weights)
    else:
        weight_vec = WeightVector.uniform(n)
        delta = aggregate_avg_separate(uploaded)

    state.model = merge_global(state.model, cfg.task.scale * delta)

    global_acc = task_mod.evaluate(state.model, state.test_set)
    local_acc = np.array([task_mod.evaluate(state.model, shard) for shard in shards])
    utilities = np.array(
        [client_utility(local_acc[i], levels[i], state.gammas[i]) for i in range(n)]
    )
    if cfg.ina_enabled:
        for i in range(n):
            state.ucb[i] = ucb_update(state.ucb[i], chosen[i], utilities[i], cfg.beta)

    state.t = t
    return RoundRecord(
        round=t,
        global_accuracy=global_acc,
        local_accuracy=local_acc,
        levels=levels,
        true_stds=levels * cfg.sigma_max,
        sigma_hat=sigma_hat,
        weights=weight_vec.weights,
        utilities=utilities,
        mu_hat=np.stack([s.mu_hat for s in state.ucb]),
    )


def stabilization_round(level_history: np.ndarray, window: int = STABILIZATION_WINDOW) -> int | None:
    """First round t such that no client changes its level during [t, t+window-1].

    Requires the full window to fit inside the run; returns None when no
    such window exists.
    """
    n_rounds = level_history.shape[0]
    for t0 in range(n_rounds - window + 1):
        block = level_history[t0 : t0 + window]
        if (block == block[0]).all():
            return t0 + 1
    return None


def summarize(records: Sequence[RoundRecord], cfg: SimConfig) -> RunSummary:
    levels = np.stack([r.levels for r in records])
    return RunSummary(
        global_accuracy_mean=float(np.mean([r.global_accuracy for r in records])),
        local_accuracy_mean=float(np.mean([r.local_accuracy for r in records])),
        utility_mean=float(np.mean([r.utilities for r in records])),
        noise_level_mean=float(levels.mean()),
        stabilization_round=stabilization_round(levels),
        records=tuple(records),
        config=cfg,
    )


def run_simulation(cfg: SimConfig) -> RunSummary:
    """Run the configured number of rounds and summarize."""
    state = init_state(cfg)
    records = [run_round(state, cfg) for _ in range(cfg.rounds)]
    return summarize(records, cfg)


SWEEP_AXES = ("gamma_mu", "alpha_dir", "n_clients", "bias_rho", "action_set")


@dataclass(frozen=True)
class SweepCell:
    value: object
    summary: RunSummary | None
    error: str | None = None


def run_sweep(base_cfg: SimConfig, axis: str, values: Sequence) -> list[SweepCell]:
    """One simulation per axis value; cell seeds are offset deterministically.

    A failing cell is recorded with its error and the sweep continues.
    """
    if axis not in SWEEP_AXES:
        raise ValueError(f"unknown sweep axis {axis!r}; known: {SWEEP_AXES}")
    if not values:
        raise ValueError("sweep values must be nonempty")
    cells = []
    for idx, value in enumerate(values):
        try:
            cfg = dataclasses.replace(base_cfg, seed=base_cfg.seed + idx, **{axis: value})
            cells.append(SweepCell(value, run_simulation(cfg)))
        except Exception as exc:  # noqa: BLE001 - per-cell fault isolation
            cells.append(SweepCell(value, None, f"{type(exc).__name__}: {exc}"))
    return cells


def standalone_baseline(
    cfg: SimConfig, noise_levels: Sequence[float] | float | None = None
) -> np.ndarray:
    """Per-client accuracy trajectories without aggregation.

    Each client trains alone for ``cfg.rounds`` rounds on the same shard
    streams it would see in the federation and is evaluated on the global
    test set after every round. ``noise_levels`` (scalar or per-client)
    adds the client's own perturbation before merging; None means clean.
    Returns an (n_clients, rounds) array.
    """
    state = init_state(cfg)
    if noise_levels is None:
        levels = np.zeros(cfg.n_clients)
    else:
        levels = np.atleast_1d(np.asarray(noise_levels, dtype=np.float64))
        if levels.size == 1:
            levels = np.full(cfg.n_clients, levels[0])
    accuracies = np.zeros((cfg.n_clients, cfg.rounds))
    for i in range(cfg.n_clients):
        model = GlobalModel(base=np.zeros((cfg.task.n_classes, cfg.task.d_in)))
        for t in range(1, cfg.rounds + 1):
            shard = task_mod.sample_shard(
                cfg.task.n_per_client,
                state.class_weights[i],
                cfg.task.d_in,
                cfg.task.class_separation,
                stream(cfg.seed, Stream.DATA, 2, i, t),
            )
            adapter = task_mod.local_train(model, shard, cfg.task, stream(cfg.seed, Stream.INIT, i, t))
            if levels[i] > 0:
                adapter = perturb_adapter(
                    adapter, levels[i], cfg.sigma_max, stream(cfg.seed, Stream.NOISE, i, t)
                )
            model = merge_global(model, cfg.task.scale * aggregate_stacked([adapter], [1.0]))
            accuracies[i, t - 1] = task_mod.evaluate(model, state.test_set)
    return accuracies
