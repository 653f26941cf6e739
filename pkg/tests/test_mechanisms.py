import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from ldprobust.divergence import max_privacy_loss
from ldprobust.errors import InvalidArgument
from ldprobust.mechanisms import (ClipSpec, PrivacyBudget, clip_l1, laplace_noise, laplace_perturb,
                                  randomized_response_matrix)


def test_budget_validation():
    with pytest.raises(InvalidArgument):
        PrivacyBudget(0)
    with pytest.raises(InvalidArgument):
        PrivacyBudget(-1)
    assert PrivacyBudget.infinite().is_infinite
    assert str(PrivacyBudget(math.inf)) == "inf"


def test_laplace_scale_is_sensitivity_over_epsilon():
    # Same uniform stream, scale 1 from (sens=1, eps=1) and scale 2 from (sens=4, eps=2).
    v = np.zeros(1000)
    a = laplace_perturb(v, 1.0, 1.0, np.random.default_rng(0))
    b = laplace_perturb(v, 4.0, 2.0, np.random.default_rng(0))
    np.testing.assert_allclose(b, 2 * a)
    np.testing.assert_allclose(a, laplace_noise(1000, 1.0, np.random.default_rng(0)))


def test_laplace_deterministic():
    v = np.arange(5.0)
    a = laplace_perturb(v, 1.0, 1.0, np.random.default_rng(42))
    b = laplace_perturb(v, 1.0, 1.0, np.random.default_rng(42))
    assert np.array_equal(a, b)


def test_laplace_moments():
    noise = laplace_noise(100_000, 1.0, np.random.default_rng(2024))
    assert abs(noise.mean()) <= 0.02
    assert abs(noise.var(ddof=1) - 2.0) <= 0.05 * 2.0


def test_laplace_infinite_budget_is_identity():
    v = np.array([0.3, -1.0, 2.0])
    rng = np.random.default_rng(0)
    out = laplace_perturb(v, 1.0, math.inf, rng)
    assert np.array_equal(out, v)


def test_laplace_bad_sensitivity():
    with pytest.raises(InvalidArgument):
        laplace_perturb([1.0], 0.0, 1.0, np.random.default_rng(0))


def test_laplace_cdf_inversion_matches_distribution():
    # P(|X| > t) = exp(-t / b) for Laplace(0, b).
    b = 0.7
    x = laplace_noise(200_000, b, np.random.default_rng(9))
    for t in (0.5, 1.0, 2.0):
        assert np.mean(np.abs(x) > t) == pytest.approx(math.exp(-t / b), abs=5e-3)


def test_rr_binary_ln3():
    k = randomized_response_matrix(2, math.log(3)).kernel
    np.testing.assert_allclose(k, [[0.75, 0.25], [0.25, 0.75]], atol=1e-15)


def test_rr_four_ary_ln3():
    k = randomized_response_matrix(4, math.log(3)).kernel
    np.testing.assert_allclose(np.diag(k), 0.5, atol=1e-15)
    np.testing.assert_allclose(k[~np.eye(4, dtype=bool)], 1 / 6, atol=1e-15)


def test_rr_tiny_budget_is_near_uniform():
    np.testing.assert_allclose(randomized_response_matrix(2, 1e-9).kernel, 0.5, atol=1e-9)


def test_rr_rejects_small_alphabet_and_infinite_budget():
    with pytest.raises(InvalidArgument):
        randomized_response_matrix(1, 1.0)
    with pytest.raises(InvalidArgument):
        randomized_response_matrix(3, math.inf)


@given(st.integers(2, 10), st.floats(1e-3, 10.0))
def test_rr_rows_and_tightness(k, eps):
    m = randomized_response_matrix(k, eps)
    assert np.all(m.kernel >= 0)
    np.testing.assert_allclose(m.kernel.sum(axis=1), 1.0, atol=1e-12)
    assert max_privacy_loss(m) == pytest.approx(eps, abs=1e-12)


def test_clip_examples():
    spec = ClipSpec(2.0)
    np.testing.assert_allclose(clip_l1([3.0, -1.0], spec), [1.5, -0.5])
    np.testing.assert_array_equal(clip_l1([0.5, -0.5], spec), [0.5, -0.5])
    np.testing.assert_array_equal(clip_l1([0.0, 0.0], spec), [0.0, 0.0])


def test_clip_spec_validation():
    with pytest.raises(InvalidArgument):
        ClipSpec(0.0)


@given(arrays(np.float64, st.integers(1, 20), elements=st.floats(-1e6, 1e6)), st.floats(1e-3, 1e3))
def test_clip_bound_and_direction(v, radius):
    out = clip_l1(v, ClipSpec(radius))
    assert np.abs(out).sum() <= radius + 1e-12 * max(1.0, radius)
    # Nonnegative scalar multiple of the input.
    norm = np.abs(v).sum()
    if norm > 0:
        scale = np.abs(out).sum() / norm
        np.testing.assert_allclose(out, scale * v, rtol=1e-12, atol=1e-300)
