import numpy as np
import pytest
from gradfixtures import STEP, TOLERANCE, layer_case, sequence_case

from blinkscope.nn.gradcheck import ABS_FLOOR, check_gradients, grad_check, numeric_gradient, relative_error


def test_numeric_gradient_of_quadratic():
    x = np.array([1.0, -2.0, 0.5])
    g = numeric_gradient(lambda: float(np.sum(x ** 2)), x, 1e-3)
    assert np.allclose(g, 2 * x, atol=1e-9)


def test_relative_error_floor():
    assert relative_error(1e-9, 0.0) == pytest.approx(1e-9 / ABS_FLOOR)
    assert relative_error(2.0, 1.0) == pytest.approx(0.5)


def test_step_must_be_positive():
    with pytest.raises(ValueError):
        check_gradients(lambda: 0.0, {"x": np.zeros(1)}, {"x": np.zeros(1)}, step=0.0)


def test_tiny_lstm_seed_42_passes():
    model, feats, labels = sequence_case(6, hidden=3, seed=42)
    report = grad_check(model, feats, labels, step=STEP, tolerance=TOLERANCE)
    assert report.passed, report.summary()


def test_corrupted_component_is_flagged():
    model, feats, labels = sequence_case(5)
    _, grads = model.sequence_loss_and_grads(feats, labels)
    grads = {k: v.copy() for k, v in grads.items()}
    target = "lstm.W_cx"
    idx = int(np.argmax(np.abs(grads[target])))
    grads[target].reshape(-1)[idx] *= 2.0
    report = grad_check(model, feats, labels, grads=grads)
    assert not report.passed
    assert report.params[target].flagged == [idx]
    assert all(not r.flagged for name, r in report.params.items() if name != target)


def test_convolution_alone_passes():
    net, x, labels = layer_case("conv2d")
    report = grad_check(net, x, labels, names=["conv.W", "conv.b"])
    assert report.passed
    assert set(report.params) == {"conv.W", "conv.b"}


def test_end_to_end_lrcn_gradients_through_features():
    """Frames -> conv features -> LSTM: gradients of the feature layers are checked too."""
    model, _, _ = sequence_case(3)
    for seed in range(50):
        rng = np.random.default_rng(seed)
        frames = rng.normal(size=(3, 1, 8, 8))
        labels = rng.integers(0, 2, 3)
        if _feature_margin(model, frames) > 0.05:
            break
    report = grad_check(model, frames, labels)
    assert report.passed, report.summary()
    assert "conv1_1.W" in report.params and "fc6.W" in report.params


def _feature_margin(model, frames):
    from gradfixtures import kink_margin
    from blinkscope.nn.layers import Network

    net = model.cnn.net
    sub = Network(net.specs[:model.cnn.feature_layers], net.input_shape)
    sub.set_params({k: v for k, v in model.cnn.feature_params().items()})
    return kink_margin(sub, frames)
