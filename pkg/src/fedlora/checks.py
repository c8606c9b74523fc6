"""Built-in self-check suites behind ``fedlora check --suite ...``.

Each check runs with fixed seeds and returns (name, passed, detail) tuples;
thresholds match the package's acceptance tests.
"""

from __future__ import annotations

import numpy as np
from scipy import stats

from .adapters import AdapterPair, aggregate_stacked
from .estimation import estimate_noise
from .policy import ActionSet, UcbState, ucb_select, ucb_update
from .task import Dataset, TaskConfig, gen_mixture_data, loss_and_grads

CheckResult = tuple[str, bool, str]

SPEARMAN_THRESHOLD = 0.95
BEST_ARM_THRESHOLD = 0.8
GRADIENT_TOLERANCE = 1e-4
STACKING_TOLERANCE = 1e-10


def rank1_cohort(
    rng: np.random.Generator,
    stds: np.ndarray,
    d_out: int = 20,
    rank: int = 10,
) -> list[AdapterPair]:
    """Clients sharing one rank-1 signal direction, each with its own noise std."""
    direction = rng.standard_normal(d_out * rank)
    direction /= np.linalg.norm(direction)
    adapters = []
    for std in stds:
        coeff = rng.normal(1.0, 0.1)
        vec = coeff * direction + std * rng.standard_normal(direction.size)
        adapters.append(
            AdapterPair(np.zeros((rank, d_out)), vec.reshape(d_out, rank))
        )
    return adapters


def estimation_spearman(n_seeds: int = 20) -> float:
    """Mean Spearman correlation between estimated and true noise scales."""
    stds = np.arange(10) / 100.0  # 0.00 .. 0.09
    correlations = []
    for seed in range(n_seeds):
        adapters = rank1_cohort(np.random.default_rng(seed), stds)
        est = estimate_noise(adapters)
        correlations.append(stats.spearmanr(est.sigma_hat, stds).statistic)
    return float(np.mean(correlations))


def check_estimation() -> list[CheckResult]:
    rho = estimation_spearman()
    return [
        (
            "rank1_spearman",
            rho >= SPEARMAN_THRESHOLD,
            f"spearman={rho:.4f} threshold={SPEARMAN_THRESHOLD}",
        )
    ]


def best_arm_fraction(
    n_seeds: int = 50,
    means: tuple[float, float] = (0.9, 0.1),
    kappa: float = 0.2,
    beta: float = 0.3,
    rounds: int = 200,
    tail: tuple[int, int] = (151, 200),
    reward_std: float = 0.1,
) -> float:
    """Stationary bandit oracle: average tail-window pull fraction of the best arm."""
    actions = ActionSet((0.0, 1.0))
    fractions = []
    for seed in range(n_seeds):
        rng = np.random.default_rng(seed)
        state = UcbState.fresh(len(means), 1.0)
        pulls = []
        for t in range(1, rounds + 1):
            k = ucb_select(state, actions, kappa, t)
            reward = rng.normal(means[k], reward_std)
            state = ucb_update(state, k, reward, beta)
            pulls.append(k)
        window = pulls[tail[0] - 1 : tail[1]]
        fractions.append(window.count(0) / len(window))
    return float(np.mean(fractions))


def check_bandit() -> list[CheckResult]:
    frac = best_arm_fraction()
    return [
        (
            "best_arm_tail_fraction",
            frac >= BEST_ARM_THRESHOLD,
            f"fraction={frac:.4f} threshold={BEST_ARM_THRESHOLD}",
        )
    ]


def max_gradient_error() -> float:
    """Max relative error of analytic adapter gradients vs central differences."""
    cfg = TaskConfig()
    rng = np.random.default_rng(7)
    pool = gen_mixture_data(8, cfg.d_in, cfg.n_classes, cfg.class_separation, rng)
    data = Dataset(pool.features[:3], pool.labels[:3])
    a = rng.normal(0, 0.1, (cfg.rank, cfg.d_in))
    b = rng.normal(0, 0.1, (cfg.n_classes, cfg.rank))
    base = rng.normal(0, 0.05, (cfg.n_classes, cfg.d_in))

    def loss_at(a_mat, b_mat):
        return loss_and_grads(a_mat, b_mat, base, data.features, data.labels, cfg.scale)[0]

    _, da, db = loss_and_grads(a, b, base, data.features, data.labels, cfg.scale)
    eps = 1e-6
    worst = 0.0
    for mat, grad in ((a, da), (b, db)):
        fd = np.zeros_like(mat)
        for idx in np.ndindex(mat.shape):
            bump = np.zeros_like(mat)
            bump[idx] = eps
            if mat is a:
                fd[idx] = (loss_at(a + bump, b) - loss_at(a - bump, b)) / (2 * eps)
            else:
                fd[idx] = (loss_at(a, b + bump) - loss_at(a, b - bump)) / (2 * eps)
        denom = np.maximum(np.abs(fd), 1e-8)
        worst = max(worst, float(np.max(np.abs(grad - fd) / denom)))
    return worst


def check_gradients() -> list[CheckResult]:
    err = max_gradient_error()
    return [
        (
            "finite_difference",
            err <= GRADIENT_TOLERANCE,
            f"max_rel_err={err:.3e} tolerance={GRADIENT_TOLERANCE}",
        )
    ]


def stacking_gap(seed: int = 3, n: int = 6) -> float:
    """Gap between product-sum aggregation and explicit block-stacked matrices."""
    rng = np.random.default_rng(seed)
    adapters = [
        AdapterPair(rng.standard_normal((4, 12)), rng.standard_normal((5, 4)))
        for _ in range(n)
    ]
    weights = rng.dirichlet(np.ones(n))
    combined = aggregate_stacked(adapters, weights)
    b_stacked = np.hstack([w * ad.b_mat for w, ad in zip(weights, adapters)])
    a_stacked = np.vstack([ad.a_mat for ad in adapters])
    return float(np.max(np.abs(combined - b_stacked @ a_stacked)))


def check_aggregation() -> list[CheckResult]:
    gap = stacking_gap()
    return [
        (
            "stacked_equivalence",
            gap <= STACKING_TOLERANCE,
            f"max_abs_gap={gap:.3e} tolerance={STACKING_TOLERANCE}",
        )
    ]
