import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from blinkscope.errors import ShapeError
from blinkscope.nn.functional import (batch_cross_entropy, cross_entropy, relu, sigmoid, softmax,
                                      tanh_act)

finite = st.floats(-30, 30, allow_nan=False)


def test_sigmoid_values():
    assert sigmoid(0.0) == 0.5
    assert abs(sigmoid(50.0) - 1.0) < 1e-12
    # Closed form with mpmath-free double arithmetic: 1 / (1 + e^-1).
    assert sigmoid(1.0) == pytest.approx(0.7310585786, abs=1e-10)


def test_sigmoid_extremes_are_finite():
    out = sigmoid(np.array([-1000.0, 1000.0]))
    assert np.all(np.isfinite(out))
    assert out[0] >= 0 and out[1] <= 1


def test_tanh_values():
    assert tanh_act(0.0) == 0.0
    assert tanh_act(-0.7) == -tanh_act(0.7)
    assert tanh_act(1.0) == pytest.approx(0.7615941560, abs=1e-10)


@given(arrays(np.float64, 7, elements=finite))
def test_activation_ranges(x):
    s = sigmoid(x)
    t = tanh_act(x)
    assert np.all((s > 0) & (s < 1) | np.isclose(s, 0) | np.isclose(s, 1))
    assert np.all(np.abs(t) <= 1)
    assert np.all(relu(x) >= 0)


@given(arrays(np.float64, (3, 2), elements=finite), finite)
def test_softmax_normalized_and_shift_invariant(z, c):
    p = softmax(z)
    assert np.allclose(p.sum(axis=-1), 1.0, atol=1e-9)
    assert np.allclose(softmax(z + c), p, atol=1e-9)


def test_cross_entropy_examples():
    assert cross_entropy(np.array([1.0, 0.0]), 0) == 0.0
    assert cross_entropy(np.array([0.5, 0.5]), 1) == pytest.approx(math.log(2))
    assert cross_entropy(np.array([0.9, 0.1]), 1) == pytest.approx(2.302585, abs=1e-6)


def test_cross_entropy_clamps_zero_probability():
    assert cross_entropy(np.array([1.0, 0.0]), 1) == pytest.approx(-math.log(1e-12))


def test_cross_entropy_label_out_of_range():
    with pytest.raises(ShapeError):
        cross_entropy(np.array([0.5, 0.5]), 2)


@given(st.floats(1e-6, 1 - 1e-6), st.integers(0, 1))
def test_cross_entropy_nonnegative(p, label):
    probs = np.array([1 - p, p])
    assert cross_entropy(probs, label) >= 0


def test_batch_cross_entropy_is_mean():
    p = np.array([[0.5, 0.5], [0.9, 0.1]])
    assert batch_cross_entropy(p, np.array([1, 1])) == pytest.approx((math.log(2) + math.log(10)) / 2)
