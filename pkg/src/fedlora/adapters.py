"""Low-rank adapter pairs, Gaussian noise injection, and aggregation rules.

A client's update to the frozen base weights is the product ``b_mat @ a_mat``
of two thin matrices. The server combines client updates either by weighted
summation of the per-client products (equivalent to stacking the B blocks
against the concatenated A blocks) or by averaging A and B separately and
multiplying the means, which is biased whenever clients disagree.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

WEIGHT_SUM_TOL = 1e-9


@dataclass(frozen=True)
class AdapterPair:
    """A low-rank update: ``a_mat`` is (rank, d_in), ``b_mat`` is (d_out, rank)."""

    a_mat: np.ndarray
    b_mat: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.a_mat, dtype=np.float64)
        b = np.asarray(self.b_mat, dtype=np.float64)
        if a.ndim != 2 or b.ndim != 2:
            raise ValueError("adapter matrices must be 2-D")
        if a.shape[0] != b.shape[1]:
            raise ValueError(
                f"rank mismatch: a_mat has {a.shape[0]} rows, b_mat has {b.shape[1]} columns"
            )
        if not (np.isfinite(a).all() and np.isfinite(b).all()):
            raise ValueError("adapter matrices must be finite")
        object.__setattr__(self, "a_mat", a)
        object.__setattr__(self, "b_mat", b)

    @property
    def rank(self) -> int:
        return self.a_mat.shape[0]

    @property
    def d_in(self) -> int:
        return self.a_mat.shape[1]

    @property
    def d_out(self) -> int:
        return self.b_mat.shape[0]

    def delta(self) -> np.ndarray:
        """Effective dense update ``b_mat @ a_mat`` (d_out, d_in)."""
        return self.b_mat @ self.a_mat


@dataclass(frozen=True)
class ClientUpdate:
    """Round-stamped upload.

    ``true_noise_level`` is the client's hidden normalized action; it exists
    for the evaluation harness only. Server-side estimation and weighting
    functions take bare AdapterPair sequences so they cannot read it.
    """

    client_id: int
    round: int
    adapter: AdapterPair
    true_noise_level: float

    def __post_init__(self):
        if not 0.0 <= self.true_noise_level <= 1.0:
            raise ValueError("true_noise_level must be in [0, 1]")
        if self.round < 1:
            raise ValueError("round must be >= 1")


@dataclass(frozen=True)
class GlobalModel:
    """Frozen base weights plus the accumulated aggregated update."""

    base: np.ndarray
    delta: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        base = np.asarray(self.base, dtype=np.float64).copy()
        base.setflags(write=False)
        delta = self.delta
        if delta is None:
            delta = np.zeros_like(base)
        delta = np.asarray(delta, dtype=np.float64)
        if delta.shape != base.shape:
            raise ValueError(f"delta shape {delta.shape} != base shape {base.shape}")
        if not np.isfinite(delta).all():
            raise ValueError("delta must be finite")
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "delta", delta)

    @property
    def d_out(self) -> int:
        return self.base.shape[0]

    @property
    def d_in(self) -> int:
        return self.base.shape[1]

    def effective(self) -> np.ndarray:
        """Current weights ``base + delta``."""
        return self.base + self.delta


def init_adapter(
    rank: int, d_in: int, d_out: int, init_std: float, rng: np.random.Generator
) -> AdapterPair:
    """Fresh adapter: ``a_mat`` ~ N(0, init_std^2) i.i.d., ``b_mat`` zero.

    Zero B forces a zero effective update at initialization.
    """
    if rank < 1 or rank > min(d_in, d_out):
        raise ValueError(f"rank must be in [1, min(d_in, d_out)], got {rank}")
    if init_std <= 0:
        raise ValueError("init_std must be positive")
    a = rng.normal(0.0, init_std, size=(rank, d_in))
    b = np.zeros((d_out, rank))
    return AdapterPair(a, b)


def perturb_adapter(
    adapter: AdapterPair,
    noise_level: float,
    sigma_max: float,
    rng: np.random.Generator,
) -> AdapterPair:
    """Add i.i.d. Gaussian noise of std ``noise_level * sigma_max`` to both matrices.

    The input adapter is never modified. Level 0 returns an exact copy.
    """
    if not 0.0 <= noise_level <= 1.0:
        raise ValueError("noise_level must be in [0, 1]")
    if sigma_max <= 0:
        raise ValueError("sigma_max must be positive")
    std = noise_level * sigma_max
    if std == 0.0:
        return AdapterPair(adapter.a_mat.copy(), adapter.b_mat.copy())
    a = adapter.a_mat + rng.normal(0.0, std, size=adapter.a_mat.shape)
    b = adapter.b_mat + rng.normal(0.0, std, size=adapter.b_mat.shape)
    return AdapterPair(a, b)


def _check_shapes(adapters: Sequence[AdapterPair], require_equal_rank: bool = False):
    if not adapters:
        raise ValueError("need at least one adapter")
    d_in, d_out = adapters[0].d_in, adapters[0].d_out
    for ad in adapters:
        if ad.d_in != d_in or ad.d_out != d_out:
            raise ValueError("adapters disagree on d_in/d_out")
        if require_equal_rank and ad.rank != adapters[0].rank:
            raise ValueError("separate-matrix averaging requires equal ranks")


def aggregate_stacked(
    adapters: Sequence[AdapterPair],
    weights: Sequence[float] | np.ndarray | None = None,
) -> np.ndarray:
    """Weighted sum of per-client products: sum_i w_i * (B_i @ A_i).

    ``weights=None`` means uniform 1/N. Identical to stacking the weighted
    B blocks against the concatenated A blocks, without materializing the
    stacked matrices.
    """
    _check_shapes(adapters)
    n = len(adapters)
    if weights is None:
        w = np.full(n, 1.0 / n)
    else:
        w = np.asarray(weights, dtype=np.float64)
        if w.shape != (n,):
            raise ValueError(f"weights length {w.shape} != number of updates {n}")
        if (w < 0).any() or abs(w.sum() - 1.0) > WEIGHT_SUM_TOL:
            raise ValueError("weights must be non-negative and sum to 1 within 1e-9")
    out = np.zeros((adapters[0].d_out, adapters[0].d_in))
    for wi, ad in zip(w, adapters):
        out += wi * ad.delta()
    return out


def aggregate_avg_separate(adapters: Sequence[AdapterPair]) -> np.ndarray:
    """Product of the separately averaged factors: mean(B_i) @ mean(A_i)."""
    _check_shapes(adapters, require_equal_rank=True)
    a_mean = np.mean([ad.a_mat for ad in adapters], axis=0)
    b_mean = np.mean([ad.b_mat for ad in adapters], axis=0)
    return b_mean @ a_mean


def merge_global(model: GlobalModel, delta_g: np.ndarray) -> GlobalModel:
    """Accumulate an aggregated update into the model; the base is untouched."""
    delta_g = np.asarray(delta_g, dtype=np.float64)
    if delta_g.shape != model.base.shape:
        raise ValueError(f"delta shape {delta_g.shape} != model shape {model.base.shape}")
    return GlobalModel(base=model.base, delta=model.delta + delta_g)
