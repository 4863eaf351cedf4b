import numpy as np
import pytest

from blinkscope.errors import ShapeError
from blinkscope.nn.lstm import LstmState, lstm_step
from blinkscope.nn.models import ArchConfig, CnnModel, LrcnModel, cnn_layer_specs, frames_to_batch, vgg16_arch
from blinkscope.pipeline import classify_cnn, classify_lrcn
from blinkscope.sequence import EyeSequence

TINY = ArchConfig(height=12, width=16, block_filters=(3, 4), feature_dim=6, fc7_units=5, hidden_size=4)


@pytest.fixture
def seq(rng):
    return EyeSequence(rng.uniform(size=(9, 12, 16, 1)), 25.0)


def test_layer_names_follow_vgg_pattern():
    names = [s.name for s in cnn_layer_specs(TINY)]
    assert names[:3] == ["conv1_1", "relu1_1", "pool1"]
    assert names[-5:] == ["fc7", "relu7", "drop7", "fc8", "prob"]
    assert {"fc6", "fc7", "fc8", "drop6", "drop7"} <= set(names)
    drops = [s for s in cnn_layer_specs(TINY) if s.kind == "dropout"]
    assert all(s.options["p"] == 0.5 for s in drops)


def test_vgg16_layout_builds_specs():
    arch = vgg16_arch()
    specs = cnn_layer_specs(arch)
    assert sum(s.kind == "maxpool2d" for s in specs) == 5
    assert arch.input_shape == (3, 224, 224)


def test_frames_to_batch():
    assert frames_to_batch(np.zeros((4, 5, 6))).shape == (4, 1, 5, 6)
    assert frames_to_batch(np.zeros((4, 5, 6, 3))).shape == (4, 3, 5, 6)
    with pytest.raises(ShapeError):
        frames_to_batch(np.zeros((5, 6)))


def test_cnn_probabilities(seq):
    model = CnnModel(TINY, seed=0)
    p = model.predict_proba(frames_to_batch(seq.frames))
    assert p.shape == (9, 2)
    assert np.allclose(p.sum(axis=1), 1.0, atol=1e-9)


def test_cnn_is_permutation_equivariant(seq, rng):
    model = CnnModel(TINY, seed=0)
    base = classify_cnn(seq, model).p_closed
    perm = rng.permutation(len(seq))
    shuffled = EyeSequence(seq.frames[perm], seq.fps)
    assert np.allclose(classify_cnn(shuffled, model).p_closed, base[perm], atol=1e-12)
    dup = EyeSequence(np.stack([seq.frames[2], seq.frames[5], seq.frames[2]]), 25.0)
    p = classify_cnn(dup, model).p_closed
    assert p[0] == p[2]


def test_cnn_shape_mismatch(rng):
    model = CnnModel(TINY, seed=0)
    with pytest.raises(ShapeError):
        classify_cnn(EyeSequence(rng.uniform(size=(3, 10, 16, 1))), model)


def test_lrcn_chunked_equals_whole(seq):
    model = LrcnModel(TINY, seed=3)
    whole = classify_lrcn(seq, model).p_closed
    parts, state = [], None
    for a, b in ((0, 2), (2, 3), (3, 9)):
        s, state = classify_lrcn(seq.slice(a, b), model, state, return_state=True)
        parts.append(s.p_closed)
    assert np.max(np.abs(np.concatenate(parts) - whole)) < 1e-9


def test_lrcn_frame_by_frame_state_threading(seq):
    model = LrcnModel(TINY, seed=3)
    whole = classify_lrcn(seq, model).p_closed
    state = None
    for t in range(len(seq)):
        s, state = classify_lrcn(seq.slice(t, t + 1), model, state, return_state=True)
        assert abs(s.p_closed[0] - whole[t]) < 1e-9


def test_lrcn_is_causal(seq):
    model = LrcnModel(TINY, seed=3)
    whole = classify_lrcn(seq, model).p_closed
    for k in (1, 4, 8):
        assert np.max(np.abs(classify_lrcn(seq.slice(0, k), model).p_closed - whole[:k])) < 1e-9


def test_lrcn_length_one_is_single_step_composition(seq):
    model = LrcnModel(TINY, seed=3)
    one = seq.slice(0, 1)
    feats = model.features(frames_to_batch(one.frames))[0]
    state, _ = lstm_step(LstmState.zeros(TINY.hidden_size), feats,
                         model.lstm.params)
    z = model.head.params["W"] @ state.hidden + model.head.params["b"]
    p = np.exp(z - z.max())
    p /= p.sum()
    assert classify_lrcn(one, model).p_closed[0] == pytest.approx(p[1], abs=1e-12)


def test_lrcn_needs_frames():
    model = LrcnModel(TINY, seed=0)
    with pytest.raises(ShapeError):
        classify_lrcn(EyeSequence(np.zeros((0, 12, 16, 1))), model)


def test_lrcn_features_come_from_relu6():
    model = LrcnModel(TINY, seed=0)
    names = [l.name for l in model.cnn.net.layers[:model.cnn.feature_layers]]
    assert names[-2:] == ["fc6", "relu6"]
    assert set(model.cnn.feature_params()) == {k for k in model.params
                                               if not k.startswith(("lstm.", "head."))}
