"""Server-side per-client noise-scale estimation from uploaded adapters.

Estimation is blind: it sees only adapter matrices, never the clients'
chosen noise levels. For each client the remaining clients' flattened
matrices span a public subspace (their shared signal); the energy of the
client's component orthogonal to that subspace is dominated by the
client's own injected noise, because isotropic zero-mean noise has no
preferred direction and its expected projection onto any fixed
low-dimensional subspace is negligible.

Per client i:
  x_i     = vec(chosen matrix of client i)
  X^(-i)  = columns x_j for j != i, centered by their row-mean mu
  U_K     = top-K left singular vectors of the centered X^(-i), with
            K = (numerical rank) - 1
  r_i     = (I - U_K U_K^T)(x_i - mu)
  sigma_hat_i = sqrt(||r_i||^2 / max(d - K, 1))

The singular subspace is computed from the (N-1)x(N-1) Gram matrix, which
is exact and much cheaper than an SVD of the d x (N-1) matrix when d is
large; equivalence to the direct SVD is covered by tests.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .adapters import AdapterPair

# Singular values below this fraction of the largest are treated as zero.
# The Gram route squares the spectrum, so an exactly-zero singular value
# resurfaces around sqrt(float64 eps) ~ 1.5e-8 of the largest; the threshold
# must sit above that noise floor or the rank count flutters.
RANK_TOL = 1e-6


class EstimationSource(str, Enum):
    """Which adapter matrix feeds the estimator."""

    B_ONLY = "b_only"
    A_ONLY = "a_only"
    COMBINED = "combined"


@dataclass(frozen=True)
class NoiseEstimates:
    """Per-client noise-scale estimates, one non-negative entry per client."""

    sigma_hat: np.ndarray
    source: EstimationSource

    def __post_init__(self):
        sig = np.asarray(self.sigma_hat, dtype=np.float64)
        if sig.ndim != 1 or sig.size == 0:
            raise ValueError("sigma_hat must be a non-empty vector")
        if not np.isfinite(sig).all() or (sig < 0).any():
            raise ValueError("sigma_hat entries must be finite and non-negative")
        object.__setattr__(self, "sigma_hat", sig)

    def __len__(self) -> int:
        return self.sigma_hat.size


def _loo_basis(columns: np.ndarray, i: int) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal basis of the top-K left singular subspace of the centered
    leave-one-out matrix, plus the row-mean used for centering.

    K is one less than the numerical rank; an all-equal (or all-zero)
    leave-one-out matrix yields an empty basis, so the caller projects
    against the zero subspace rather than failing.
    """
    others = np.delete(columns, i, axis=1)
    mu = others.mean(axis=1)
    centered = others - mu[:, None]
    gram = centered.T @ centered
    evals, evecs = np.linalg.eigh(gram)
    order = np.argsort(evals)[::-1]
    svals = np.sqrt(np.clip(evals[order], 0.0, None))
    if svals.size == 0 or svals[0] <= 0.0:
        k = 0
    else:
        available = int(np.count_nonzero(svals > RANK_TOL * svals[0]))
        k = max(available - 1, 0)
    if k == 0:
        return np.zeros((columns.shape[0], 0)), mu
    top = evecs[:, order[:k]]
    basis = (centered @ top) / svals[:k]
    return basis, mu


def _loo_residual(columns: np.ndarray, i: int) -> tuple[np.ndarray, int]:
    """Residual of column i outside the leave-one-out subspace, and K."""
    basis, mu = _loo_basis(columns, i)
    centered = columns[:, i] - mu
    residual = centered - basis @ (basis.T @ centered)
    return residual, basis.shape[1]


def _flatten(adapters: Sequence[AdapterPair], source: EstimationSource) -> np.ndarray:
    which = "b_mat" if source is EstimationSource.B_ONLY else "a_mat"
    return np.column_stack([getattr(ad, which).ravel() for ad in adapters])


def _estimate_single(columns: np.ndarray) -> np.ndarray:
    d = columns.shape[0]
    out = np.empty(columns.shape[1])
    for i in range(columns.shape[1]):
        residual, k = _loo_residual(columns, i)
        out[i] = np.sqrt(residual @ residual / max(d - k, 1))
    return out


def estimate_noise(
    adapters: Sequence[AdapterPair],
    source: EstimationSource = EstimationSource.B_ONLY,
) -> NoiseEstimates:
    """Estimate each client's noise scale by leave-one-out PCA residual energy.

    ``combined`` averages the estimates obtained from the B and A matrices
    separately. Requires at least 3 clients so every leave-one-out matrix
    has at least two columns.
    """
    source = EstimationSource(source)
    if len(adapters) < 3:
        raise ValueError("leave-one-out estimation needs at least 3 clients")
    shapes = {(ad.a_mat.shape, ad.b_mat.shape) for ad in adapters}
    if len(shapes) > 1:
        raise ValueError("all adapters must share the same shapes")
    if source is EstimationSource.COMBINED:
        sig_b = _estimate_single(_flatten(adapters, EstimationSource.B_ONLY))
        sig_a = _estimate_single(_flatten(adapters, EstimationSource.A_ONLY))
        sigma = (sig_b + sig_a) / 2.0
    else:
        sigma = _estimate_single(_flatten(adapters, source))
    return NoiseEstimates(sigma_hat=sigma, source=source)


def apply_estimation_bias(est: NoiseEstimates, rho: float) -> NoiseEstimates:
    """Raise every estimate to the power rho (robustness hook; order-preserving)."""
    if rho <= 0:
        raise ValueError("rho must be positive")
    return NoiseEstimates(sigma_hat=est.sigma_hat**rho, source=est.source)
