"""The frame classifier (CNN) and the recurrent sequence classifier (LRCN)."""

from dataclasses import asdict, dataclass

import numpy as np

from ..errors import ShapeError
from .functional import batch_cross_entropy, cross_entropy_grad
from .layers import FullyConnected, LayerSpec, Network, Softmax, layer_index
from .checkpoint import ModelCheckpoint
from .lstm import Lstm, LstmState


@dataclass
class ArchConfig:
    """Layout of the eye-state CNN.

    Defaults are desk scale: 36x60 grayscale crops through three conv blocks.
    Each block is a same-padded 3x3 convolution, relu and a 2x2/2 max-pool.
    Then fc6 -> fc7 -> fc8 (two-way softmax). fc6 feeds the LSTM in the LRCN.
    """

    height: int = 36
    width: int = 60
    channels: int = 1
    block_filters: tuple = (8, 16, 32)
    convs_per_block: int = 1
    feature_dim: int = 256
    fc7_units: int = 256
    dropout: float = 0.5
    hidden_size: int = 256

    @property
    def input_shape(self):
        return (self.channels, self.height, self.width)

    def to_dict(self):
        d = asdict(self)
        d["block_filters"] = list(self.block_filters)
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if "block_filters" in d:
            d["block_filters"] = tuple(d["block_filters"])
        return cls(**d)


def vgg16_arch():
    """The full-scale layout: 224x224 RGB, five VGG16 conv blocks, 4096-wide fc layers."""
    return ArchConfig(height=224, width=224, channels=3, block_filters=(64, 128, 256, 512, 512),
                      feature_dim=4096, fc7_units=4096, hidden_size=256)


def cnn_layer_specs(arch):
    convs = arch.convs_per_block
    if isinstance(convs, int):
        convs = [convs] * len(arch.block_filters)
    if arch.block_filters and len(convs) != len(arch.block_filters):
        raise ValueError("convs_per_block must match the number of blocks")
    specs = []
    for b, (filters, n) in enumerate(zip(arch.block_filters, convs), start=1):
        for k in range(1, n + 1):
            specs.append(LayerSpec("conv2d", f"conv{b}_{k}", {"filters": filters, "kernel": 3, "padding": "same"}))
            specs.append(LayerSpec("activation", f"relu{b}_{k}", {"fn": "relu"}))
        specs.append(LayerSpec("maxpool2d", f"pool{b}", {"size": 2, "stride": 2}))
    specs += [
        LayerSpec("flatten", "flatten"),
        LayerSpec("fully_connected", "fc6", {"units": arch.feature_dim}),
        LayerSpec("activation", "relu6", {"fn": "relu"}),
        LayerSpec("dropout", "drop6", {"p": arch.dropout}),
        LayerSpec("fully_connected", "fc7", {"units": arch.fc7_units}),
        LayerSpec("activation", "relu7", {"fn": "relu"}),
        LayerSpec("dropout", "drop7", {"p": arch.dropout}),
        LayerSpec("fully_connected", "fc8", {"units": 2}),
        LayerSpec("softmax", "prob"),
    ]
    return specs


def frames_to_batch(frames):
    """(T, H, W, C) or (T, H, W) frames -> (T, C, H, W) batch for the network."""
    frames = np.asarray(frames, dtype=np.float64)
    if frames.ndim == 3:
        frames = frames[..., None]
    if frames.ndim != 4:
        raise ShapeError(f"frames must be (T, H, W[, C]), got {frames.shape}")
    return frames.transpose(0, 3, 1, 2)


class CnnModel:
    """Per-frame open/closed classifier. Output column 1 is P(closed)."""

    kind = "cnn"

    def __init__(self, arch=None, seed=0):
        self.arch = arch or ArchConfig()
        self.net = Network(cnn_layer_specs(self.arch), self.arch.input_shape, seed=seed)
        self.feature_layers = layer_index(self.net, "relu6") + 1

    @property
    def params(self):
        return self.net.params

    def set_params(self, params):
        self.net.set_params(params)

    def feature_params(self):
        names = {l.name for l in self.net.layers[:self.feature_layers]}
        return {k: v for k, v in self.params.items() if k.split(".")[0] in names}

    def check_frames(self, batch):
        if batch.shape[1:] != self.arch.input_shape:
            raise ShapeError(f"frames of shape {batch.shape[1:]} (C, H, W) do not match model input "
                             f"{self.arch.input_shape}")

    def predict_proba(self, batch, chunk=256):
        """Class probabilities for a (N, C, H, W) batch, evaluated in infer mode."""
        self.check_frames(batch)
        out = [self.net.forward(batch[s:s + chunk]) for s in range(0, len(batch), chunk)]
        return np.concatenate(out) if out else np.zeros((0, 2))

    def features(self, batch, chunk=256):
        self.check_frames(batch)
        out = [self.net.forward(batch[s:s + chunk], upto=self.feature_layers)
               for s in range(0, len(batch), chunk)]
        return np.concatenate(out) if out else np.zeros((0, self.arch.feature_dim))

    def loss_and_grads(self, batch, labels, rng=None, mode="train"):
        probs = self.net.forward(batch, mode=mode, rng=rng)
        loss = batch_cross_entropy(probs, labels)
        self.net.backward(cross_entropy_grad(probs, labels))
        return loss, {k: v.copy() for k, v in self.net.grads.items()}


class LrcnModel:
    """Frozen CNN features -> LSTM -> fully connected two-way softmax per step."""

    kind = "lrcn"

    def __init__(self, arch=None, seed=0, cnn=None):
        self.arch = arch or (cnn.arch if cnn is not None else ArchConfig())
        self.cnn = cnn if cnn is not None else CnnModel(self.arch, seed=seed)
        rng = np.random.default_rng(seed)
        self.lstm = Lstm(self.arch.feature_dim, self.arch.hidden_size, seed=rng.integers(2 ** 31))
        self.head = FullyConnected("head", self.arch.hidden_size, 2)
        self.head.init(rng, "head")
        self.softmax = Softmax("prob")

    @property
    def sequence_params(self):
        p = {f"lstm.{k}": v for k, v in self.lstm.params.items()}
        p.update({f"head.{k}": v for k, v in self.head.params.items()})
        return p

    @property
    def params(self):
        p = self.cnn.feature_params()
        p.update(self.sequence_params)
        return p

    def set_sequence_params(self, params):
        self.lstm.set_params({k[5:]: v for k, v in params.items() if k.startswith("lstm.")})
        for k in ("W", "b"):
            value = np.asarray(params[f"head.{k}"], dtype=np.float64)
            if value.shape != self.head.params[k].shape:
                raise ShapeError(f"head.{k}: expected shape {self.head.params[k].shape}, got {value.shape}")
            self.head.params[k] = value.copy()

    def set_params(self, params):
        feature = {k: v for k, v in params.items() if not k.startswith(("lstm.", "head."))}
        full = dict(self.cnn.params)
        full.update(feature)
        self.cnn.set_params(full)
        self.set_sequence_params(params)

    def features(self, batch):
        return self.cnn.features(batch)

    def run_features(self, feats, state=None):
        """Per-step class probabilities for a (T, F) feature sequence, plus the final state."""
        hs, state = self.lstm.forward(feats, state)
        probs = self.softmax.forward(self.head.forward(hs))
        return probs, state

    def run(self, batch, state=None):
        return self.run_features(self.features(batch), state)

    def initial_state(self):
        return LstmState.zeros(self.arch.hidden_size)

    def sequence_loss_and_grads(self, feats, labels, need_input_grad=False):
        """Mean per-step cross entropy over one sequence and its gradients (full BPTT)."""
        probs, _ = self.run_features(feats)
        loss = batch_cross_entropy(probs, labels)
        dz = self.softmax.backward(cross_entropy_grad(probs, labels))
        dh = self.head.backward(dz)
        dfeats = self.lstm.backward(dh)
        grads = {f"lstm.{k}": v for k, v in self.lstm.grads.items()}
        grads.update({f"head.{k}": v.copy() for k, v in self.head.grads.items()})
        if need_input_grad:
            return loss, grads, dfeats
        return loss, grads

    def loss_and_grads(self, batch, labels):
        """End-to-end gradients including the convolutional feature extractor."""
        net, upto = self.cnn.net, self.cnn.feature_layers
        feats = net.forward(batch, mode="infer", upto=upto)
        loss, grads, dfeats = self.sequence_loss_and_grads(feats, labels, need_input_grad=True)
        net.backward(dfeats, upto=upto)
        names = {l.name for l in net.layers[:upto]}
        grads.update({k: v.copy() for k, v in net.grads.items() if k.split(".")[0] in names})
        return loss, grads



def to_checkpoint(model, **metadata):
    """Snapshot ``model`` as a single-precision :class:`ModelCheckpoint`."""
    arch = model.arch
    meta = {
        "model": model.kind,
        "arch": arch.to_dict(),
        "input": {"height": arch.height, "width": arch.width, "channels": arch.channels},
        "hidden_size": arch.hidden_size,
    }
    meta.update(metadata)
    tensors = {k: np.asarray(v, dtype=np.float32) for k, v in model.params.items()}
    return ModelCheckpoint(tensors, meta)


def from_checkpoint(ckpt):
    """Rebuild a CnnModel or LrcnModel; every architecture parameter must be present exactly once."""
    kind = ckpt.metadata.get("model")
    if kind not in ("cnn", "lrcn"):
        raise ShapeError(f"checkpoint model kind {kind!r} is not cnn or lrcn")
    arch = ArchConfig.from_dict(ckpt.metadata["arch"])
    model = CnnModel(arch) if kind == "cnn" else LrcnModel(arch)
    expected = set(model.params)
    present = set(ckpt.named_tensors)
    if expected != present:
        missing = sorted(expected - present)
        extra = sorted(present - expected)
        raise ShapeError(f"checkpoint tensors do not match architecture (missing {missing[:3]}, "
                         f"unexpected {extra[:3]})")
    model.set_params({k: v.astype(np.float64) for k, v in ckpt.named_tensors.items()})
    return model
