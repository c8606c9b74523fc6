"""Acceptance gate: every criterion at its stated tolerance.

Each test prints one ``[acceptance] <name>: PASS/FAIL`` line (visible with
``pytest -s`` or in captured output). Run the whole gate with::

    pytest tests/test_acceptance.py -v -s
"""

import dataclasses
import time

import numpy as np
from scipy import stats

from fedlora.adapters import AdapterPair, aggregate_stacked
from fedlora.estimation import estimate_noise
from fedlora.orchestrator import (
    HETEROGENEOUS_LEVELS,
    Aggregator,
    SimConfig,
    run_simulation,
)
from fedlora.output import dumps, round_rows, summary_document
from fedlora.policy import ActionSet, UcbState, client_utility, ucb_select, ucb_update
from fedlora.task import TaskConfig, dirichlet_partition, gen_mixture_data, loss_and_grads
from fedlora.weighting import inverse_noise_weights


def _report(name: str, ok: bool, detail: str, elapsed: float, budget: float):
    line = f"[acceptance] {name}: {'PASS' if ok else 'FAIL'} ({detail}; {elapsed:.1f}s of {budget:.0f}s budget)"
    print(line)
    assert ok, line
    assert elapsed <= budget, f"{name}: exceeded runtime budget ({elapsed:.1f}s > {budget}s)"


def test_c1_formula_exactness():
    t0 = time.time()
    ok, details = True, []

    # inverse-noise weights on hand values
    from fedlora.estimation import EstimationSource, NoiseEstimates

    w = inverse_noise_weights(NoiseEstimates(np.array([0.1, 0.2]), EstimationSource.B_ONLY)).weights
    ok &= np.allclose(w, [2 / 3, 1 / 3], atol=1e-6)
    w0 = inverse_noise_weights(
        NoiseEstimates(np.array([0.0, 0.1, 0.1]), EstimationSource.B_ONLY), tau=1e-8
    ).weights
    ok &= w0[0] > 1 - 1e-6

    # client utility
    ok &= abs(client_utility(0.6, 0.5, 0.5) - 0.85 / 1.5) <= 1e-6
    ok &= client_utility(0.73, 0.4, 0.0) == 0.73
    ok &= abs(client_utility(1.0, 1.0, 2.7) - 1.0) <= 1e-6

    # UCB index and tie-breaking
    state = UcbState(np.array([0.9, 0.1]), np.array([10, 10]), round=20)
    ok &= ucb_select(state, ActionSet((0.0, 1.0)), 0.2, 20) == 0
    fresh = UcbState.fresh(4, 1.0)
    ok &= ucb_select(fresh, ActionSet((0.0, 0.1, 0.5, 1.0)), 0.2, 1) == 0

    # EMA update
    upd = ucb_update(UcbState(np.array([0.5]), np.array([2]), round=2), 0, 0.9, beta=0.3)
    ok &= abs(upd.mu_hat[0] - 0.62) <= 1e-6

    # stacked aggregation on hand matrices
    u1 = AdapterPair(np.array([[2.0, 0.0]]), np.array([[1.0], [0.0]]))
    u2 = AdapterPair(np.array([[0.0, 3.0]]), np.array([[0.0], [1.0]]))
    got = aggregate_stacked([u1, u2], [0.5, 0.5])
    ok &= np.allclose(got, [[1.0, 0.0], [0.0, 1.5]], atol=1e-10)

    _report("1 formula exactness", bool(ok), "all worked examples within tolerance", time.time() - t0, 1.0)


def test_c2_noise_estimation_fidelity():
    t0 = time.time()
    stds = np.arange(10) / 100.0  # 0.00 .. 0.09
    correlations = []
    for seed in range(20):
        rng = np.random.default_rng(seed)
        direction = rng.standard_normal(200)
        direction /= np.linalg.norm(direction)
        adapters = []
        for std in stds:
            vec = rng.normal(1.0, 0.1) * direction + std * rng.standard_normal(200)
            adapters.append(AdapterPair(np.zeros((10, 20)), vec.reshape(20, 10)))
        est = estimate_noise(adapters)
        correlations.append(stats.spearmanr(est.sigma_hat, stds).statistic)
    mean_rho = float(np.mean(correlations))
    _report(
        "2 noise-estimation fidelity",
        mean_rho >= 0.95,
        f"spearman={mean_rho:.4f} over 20 seeds, threshold 0.95",
        time.time() - t0,
        30.0,
    )


def test_c3_incentive_effectiveness():
    t0 = time.time()
    gaps = []
    for seed in range(10):
        cfg = SimConfig(seed=seed, ina_enabled=False, fixed_levels=HETEROGENEOUS_LEVELS)
        weighted = run_simulation(cfg)
        uniform = run_simulation(dataclasses.replace(cfg, aggregator=Aggregator.UNIFORM_STACK))
        gaps.append(weighted.global_accuracy_mean - uniform.global_accuracy_mean)
    mean_gap = float(np.mean(gaps))
    _report(
        "3 incentive effectiveness",
        mean_gap >= 0.02,
        f"noise-weighted minus uniform accuracy gap={mean_gap:+.4f} over 10 paired seeds, "
        f"threshold +0.02",
        time.time() - t0,
        300.0,
    )


def test_c4_ucb_convergence():
    t0 = time.time()
    fractions = []
    for seed in range(50):
        rng = np.random.default_rng(seed)
        state = UcbState.fresh(2, 1.0)
        pulls = []
        for t in range(1, 201):
            k = ucb_select(state, ActionSet((0.0, 1.0)), kappa=0.2, t=t)
            state = ucb_update(state, k, rng.normal((0.9, 0.1)[k], 0.1), beta=0.3)
            pulls.append(k)
        tail = pulls[150:200]
        fractions.append(tail.count(0) / len(tail))
    frac = float(np.mean(fractions))
    _report(
        "4 UCB convergence",
        frac >= 0.8,
        f"best-arm fraction over rounds 151-200 = {frac:.4f}, threshold 0.8",
        time.time() - t0,
        10.0,
    )


def test_c5_strategy_stabilization():
    t0 = time.time()
    found = []
    for seed in range(10):
        s = run_simulation(SimConfig(seed=seed, rounds=40))
        found.append(s.stabilization_round)
    hits = sum(1 for r in found if r is not None and r <= 40)
    _report(
        "5 strategy stabilization",
        hits >= 8,
        f"stabilized {hits}/10 seeds at T=40 (rounds: {found}), threshold 8",
        time.time() - t0,
        600.0,
    )


def test_c6_bias_tolerance():
    t0 = time.time()
    means = {}
    for rho in (0.8, 1.0, 1.2):
        accs = [
            run_simulation(dataclasses.replace(SimConfig(seed=seed), bias_rho=rho)).global_accuracy_mean
            for seed in range(10)
        ]
        means[rho] = float(np.mean(accs))
    lo = means[0.8] / means[1.0]
    hi = means[1.2] / means[1.0]
    _report(
        "6 bias tolerance",
        lo >= 0.85 and hi >= 0.85,
        f"retention rho=0.8: {lo:.4f}, rho=1.2: {hi:.4f}, threshold 0.85",
        time.time() - t0,
        600.0,
    )


def test_c7_privacy_preference_trend():
    t0 = time.time()
    acc, noise = [], []
    for mu in (0.3, 0.5, 0.7):
        runs = [
            run_simulation(dataclasses.replace(SimConfig(seed=seed), gamma_mu=mu))
            for seed in range(10)
        ]
        acc.append(float(np.mean([r.global_accuracy_mean for r in runs])))
        noise.append(float(np.mean([r.noise_level_mean for r in runs])))
    noise_up = noise[0] <= noise[1] <= noise[2]
    acc_down = acc[0] >= acc[1] >= acc[2]
    _report(
        "7 privacy-preference trend",
        noise_up and acc_down,
        f"noise means {[round(v, 4) for v in noise]} nondecreasing={noise_up}; "
        f"accuracy means {[round(v, 4) for v in acc]} nonincreasing={acc_down}",
        time.time() - t0,
        900.0,
    )


def test_c8_gradient_and_conservation_suite():
    t0 = time.time()
    ok, notes = True, []

    # finite-difference gradient check at 1e-4 relative
    cfg = TaskConfig()
    g = np.random.default_rng(77)
    pool = gen_mixture_data(8, cfg.d_in, cfg.n_classes, cfg.class_separation, g)
    x, y = pool.features[:3], pool.labels[:3]
    a = g.normal(0, 0.1, (cfg.rank, cfg.d_in))
    b = g.normal(0, 0.1, (cfg.n_classes, cfg.rank))
    base = g.normal(0, 0.05, (cfg.n_classes, cfg.d_in))
    _, da, db = loss_and_grads(a, b, base, x, y, cfg.scale)
    eps, worst = 1e-6, 0.0
    for mat, grad, is_a in ((a, da, True), (b, db, False)):
        fd = np.zeros_like(mat)
        for idx in np.ndindex(mat.shape):
            bump = np.zeros_like(mat)
            bump[idx] = eps
            if is_a:
                hi = loss_and_grads(mat + bump, b, base, x, y, cfg.scale)[0]
                lo = loss_and_grads(mat - bump, b, base, x, y, cfg.scale)[0]
            else:
                hi = loss_and_grads(a, mat + bump, base, x, y, cfg.scale)[0]
                lo = loss_and_grads(a, mat - bump, base, x, y, cfg.scale)[0]
            fd[idx] = (hi - lo) / (2 * eps)
        worst = max(worst, float(np.max(np.abs(grad - fd) / np.maximum(np.abs(fd), 1e-8))))
    ok &= worst <= 1e-4
    notes.append(f"max FD rel err {worst:.2e}")

    # Dirichlet partition conserves samples exactly
    ds = gen_mixture_data(1003, 8, 4, 2.0, np.random.default_rng(5))
    parts = dirichlet_partition(ds, 10, 0.3, np.random.default_rng(6))
    conserved = sum(len(p) for p in parts) == 1003
    ok &= conserved
    notes.append(f"partition conserves={conserved}")

    # weights on the simplex within 1e-9 every round of a default run
    summary = run_simulation(SimConfig(seed=1))
    simplex = all(abs(r.weights.sum() - 1.0) <= 1e-9 and (r.weights > 0).all() for r in summary.records)
    ok &= simplex
    notes.append(f"simplex every round={simplex}")

    # replay determinism, byte-exact through the serialization layer
    again = run_simulation(SimConfig(seed=1))
    bytes1 = dumps(summary_document(summary)) + repr(round_rows(summary))
    bytes2 = dumps(summary_document(again)) + repr(round_rows(again))
    deterministic = bytes1 == bytes2
    ok &= deterministic
    notes.append(f"replay byte-exact={deterministic}")

    _report("8 gradient and conservation suite", bool(ok), "; ".join(notes), time.time() - t0, 60.0)
