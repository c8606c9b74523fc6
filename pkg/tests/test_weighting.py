"""Inverse-noise weight allocation."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fedlora.estimation import EstimationSource, NoiseEstimates, apply_estimation_bias
from fedlora.weighting import WeightVector, inverse_noise_weights


def estimates(values):
    return NoiseEstimates(np.asarray(values, dtype=float), EstimationSource.B_ONLY)


def test_equal_estimates_uniform_weights():
    w = inverse_noise_weights(estimates([0.2] * 5)).weights
    assert np.allclose(w, 0.2, atol=1e-12)


def test_hand_example_two_clients():
    w = inverse_noise_weights(estimates([0.1, 0.2]), tau=1e-8).weights
    assert np.allclose(w, [2 / 3, 1 / 3], atol=1e-6)


def test_zero_noise_client_dominates():
    w = inverse_noise_weights(estimates([0.0, 0.1, 0.1]), tau=1e-8).weights
    assert w[0] > 1 - 1e-6
    assert w[1] == pytest.approx(w[2], rel=1e-9)


def test_single_client_full_weight():
    w = inverse_noise_weights(estimates([0.42])).weights
    assert w[0] == pytest.approx(1.0, abs=1e-15)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(0.0, 5.0), min_size=1, max_size=12))
def test_simplex_invariant(values):
    w = inverse_noise_weights(estimates(values)).weights
    assert abs(w.sum() - 1.0) <= 1e-9
    assert (w > 0).all()


# grid-valued estimates keep pairwise gaps far above float resolution, so
# strict order comparisons cannot degenerate into ties
grid_estimates = st.lists(
    st.integers(1, 5000).map(lambda v: v / 1000.0), min_size=2, max_size=12, unique=True
)


@settings(max_examples=100, deadline=None)
@given(grid_estimates)
def test_order_reversal(values):
    sig = np.array(values)
    w = inverse_noise_weights(estimates(sig)).weights
    order_sig = np.argsort(sig)
    order_w = np.argsort(-w)
    assert np.array_equal(order_sig, order_w)


def test_order_reversal_with_zero_estimate():
    w = inverse_noise_weights(estimates([0.3, 0.0, 0.05])).weights
    assert w[1] > w[2] > w[0]


@settings(max_examples=50, deadline=None)
@given(grid_estimates, st.floats(0.01, 100.0))
def test_scaling_preserves_ordering(values, c):
    sig = np.array(values)
    w1 = inverse_noise_weights(estimates(sig)).weights
    w2 = inverse_noise_weights(estimates(c * sig)).weights
    assert np.array_equal(np.argsort(w1), np.argsort(w2))


@settings(max_examples=50, deadline=None)
@given(grid_estimates, st.floats(0.2, 3.0))
def test_composition_with_bias_preserves_ordering(values, rho):
    est = estimates(values)
    w_plain = inverse_noise_weights(est).weights
    w_biased = inverse_noise_weights(apply_estimation_bias(est, rho)).weights
    assert np.array_equal(np.argsort(w_plain), np.argsort(w_biased))


def test_weight_vector_validation():
    with pytest.raises(ValueError):
        WeightVector(np.array([0.6, 0.6]))
    with pytest.raises(ValueError):
        WeightVector(np.array([1.2, -0.2]))
    assert len(WeightVector.uniform(4)) == 4


def test_tau_must_be_positive():
    with pytest.raises(ValueError):
        inverse_noise_weights(estimates([0.1]), tau=0.0)
