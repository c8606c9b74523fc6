"""Deterministic simulator of privacy-heterogeneous federated low-rank
fine-tuning with noise-aware weighted aggregation and client-side noise
adaptation."""

from .adapters import (
    AdapterPair,
    ClientUpdate,
    GlobalModel,
    aggregate_avg_separate,
    aggregate_stacked,
    init_adapter,
    merge_global,
    perturb_adapter,
)
from .estimation import EstimationSource, NoiseEstimates, apply_estimation_bias, estimate_noise
from .orchestrator import (
    Aggregator,
    HETEROGENEOUS_LEVELS,
    RoundRecord,
    RunSummary,
    SimConfig,
    run_round,
    run_simulation,
    run_sweep,
    standalone_baseline,
)
from .policy import (
    ActionSet,
    PrivacyPreference,
    UcbState,
    client_utility,
    sample_preferences,
    ucb_select,
    ucb_update,
)
from .task import Dataset, TaskConfig, dirichlet_partition, evaluate, gen_mixture_data, local_train
from .weighting import WeightVector, inverse_noise_weights

__version__ = "0.1.0"

__all__ = [
    "AdapterPair",
    "ActionSet",
    "Aggregator",
    "ClientUpdate",
    "Dataset",
    "EstimationSource",
    "GlobalModel",
    "HETEROGENEOUS_LEVELS",
    "NoiseEstimates",
    "PrivacyPreference",
    "RoundRecord",
    "RunSummary",
    "SimConfig",
    "TaskConfig",
    "UcbState",
    "WeightVector",
    "aggregate_avg_separate",
    "aggregate_stacked",
    "apply_estimation_bias",
    "client_utility",
    "dirichlet_partition",
    "estimate_noise",
    "evaluate",
    "gen_mixture_data",
    "init_adapter",
    "inverse_noise_weights",
    "local_train",
    "merge_global",
    "perturb_adapter",
    "run_round",
    "run_simulation",
    "run_sweep",
    "sample_preferences",
    "standalone_baseline",
    "ucb_select",
    "ucb_update",
]
