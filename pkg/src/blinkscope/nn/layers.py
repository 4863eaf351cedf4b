"""Feed-forward layers with hand-written backward passes.

Every layer works on a batch: images are (N, C, H, W) and vectors (N, D).
Parameters live in ``layer.params`` under short local names ("W", "b");
a :class:`Network` exposes them as "<layer name>.<param>".
"""

from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import ShapeError
from .functional import relu, sigmoid, softmax

LAYER_KINDS = ("conv2d", "maxpool2d", "fully_connected", "activation", "dropout", "flatten", "softmax")
ACTIVATIONS = ("sigmoid", "tanh", "relu")


@dataclass
class LayerSpec:
    """Declarative description of one layer.

    ``options`` holds the kind-specific hyperparameters:

    * conv2d: ``filters``, ``kernel`` (default 3), ``padding`` ("same" | "valid")
    * maxpool2d: ``size`` (default 2), ``stride`` (default 2)
    * fully_connected: ``units``
    * activation: ``fn`` in sigmoid | tanh | relu
    * dropout: ``p`` in [0, 1), default 0.5
    """

    kind: str
    name: str = ""
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in LAYER_KINDS:
            raise ValueError(f"unknown layer kind {self.kind!r}")
        if self.kind == "dropout":
            p = self.options.setdefault("p", 0.5)
            if not 0.0 <= p < 1.0:
                raise ValueError(f"dropout probability must lie in [0, 1), got {p}")
        if self.kind == "activation" and self.options.get("fn") not in ACTIVATIONS:
            raise ValueError(f"activation fn must be one of {ACTIVATIONS}")

    def to_dict(self):
        return {"kind": self.kind, "name": self.name, "options": dict(self.options)}

    @classmethod
    def from_dict(cls, d):
        return cls(d["kind"], d.get("name", ""), dict(d.get("options", {})))


class Layer:
    kind = ""
    has_params = False

    def __init__(self, name):
        self.name = name
        self.params = {}
        self.grads = {}

    def output_shape(self, in_shape):
        return in_shape

    def forward(self, x, train=False, rng=None):
        raise NotImplementedError

    def backward(self, dy):
        raise NotImplementedError


def _uniform(rng, shape, limit):
    return rng.uniform(-limit, limit, size=shape)


def init_limit(gain, fan_in, fan_out):
    """Uniform init bound: He for relu inputs, Xavier otherwise, Xavier/10 for the logit layer."""
    if gain == "he":
        return np.sqrt(6.0 / fan_in)
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return limit * 0.1 if gain == "head" else limit


class Conv2d(Layer):
    kind = "conv2d"
    has_params = True

    def __init__(self, name, in_channels, filters, kernel=3, padding="same"):
        super().__init__(name)
        if padding not in ("same", "valid"):
            raise ValueError(f"padding must be 'same' or 'valid', got {padding!r}")
        if padding == "same" and kernel % 2 == 0:
            raise ValueError("same padding needs an odd kernel")
        self.in_channels = in_channels
        self.filters = filters
        self.kernel = kernel
        self.pad = kernel // 2 if padding == "same" else 0
        self.params = {
            "W": np.zeros((filters, in_channels, kernel, kernel)),
            "b": np.zeros(filters),
        }

    def init(self, rng, gain):
        limit = init_limit(gain, self.in_channels * self.kernel ** 2, self.filters * self.kernel ** 2)
        self.params["W"] = _uniform(rng, self.params["W"].shape, limit)
        self.params["b"] = np.zeros(self.filters)

    def output_shape(self, in_shape):
        c, h, w = in_shape
        if c != self.in_channels:
            raise ShapeError(f"{self.name}: expected {self.in_channels} channels, got {c}")
        ho = h + 2 * self.pad - self.kernel + 1
        wo = w + 2 * self.pad - self.kernel + 1
        if ho < 1 or wo < 1:
            raise ShapeError(f"{self.name}: input {h}x{w} smaller than kernel {self.kernel}")
        return (self.filters, ho, wo)

    def forward(self, x, train=False, rng=None):
        n, c, h, w = x.shape
        _, ho, wo = self.output_shape((c, h, w))
        p, k = self.pad, self.kernel
        xp = np.pad(x, ((0, 0), (0, 0), (p, p), (p, p))) if p else x
        win = sliding_window_view(xp, (k, k), axis=(2, 3))  # N, C, Ho, Wo, k, k
        cols = win.transpose(0, 2, 3, 1, 4, 5).reshape(n * ho * wo, c * k * k)
        wmat = self.params["W"].reshape(self.filters, -1)
        out = cols @ wmat.T + self.params["b"]
        self._cache = (x.shape, cols)
        return out.reshape(n, ho, wo, self.filters).transpose(0, 3, 1, 2)

    def backward(self, dy):
        (n, c, h, w), cols = self._cache
        k, p = self.kernel, self.pad
        _, _, ho, wo = dy.shape
        d2 = dy.transpose(0, 2, 3, 1).reshape(-1, self.filters)
        self.grads["W"] = (d2.T @ cols).reshape(self.params["W"].shape)
        self.grads["b"] = d2.sum(axis=0)
        dcols = (d2 @ self.params["W"].reshape(self.filters, -1)).reshape(n, ho, wo, c, k, k)
        dxp = np.zeros((n, c, h + 2 * p, w + 2 * p))
        for i in range(k):
            for j in range(k):
                dxp[:, :, i:i + ho, j:j + wo] += dcols[:, :, :, :, i, j].transpose(0, 3, 1, 2)
        return dxp[:, :, p:p + h, p:p + w] if p else dxp


class MaxPool2d(Layer):
    kind = "maxpool2d"

    def __init__(self, name, size=2, stride=2):
        super().__init__(name)
        self.size = size
        self.stride = stride

    def output_shape(self, in_shape):
        c, h, w = in_shape
        ho = (h - self.size) // self.stride + 1
        wo = (w - self.size) // self.stride + 1
        if ho < 1 or wo < 1:
            raise ShapeError(f"{self.name}: input {h}x{w} smaller than pool window {self.size}")
        return (c, ho, wo)

    def forward(self, x, train=False, rng=None):
        n, c, h, w = x.shape
        _, ho, wo = self.output_shape((c, h, w))
        s, k = self.stride, self.size
        win = sliding_window_view(x, (k, k), axis=(2, 3))[:, :, ::s, ::s][:, :, :ho, :wo]
        flat = win.reshape(n, c, ho, wo, k * k)
        arg = flat.argmax(axis=-1)
        self._cache = (x.shape, arg)
        return np.take_along_axis(flat, arg[..., None], axis=-1)[..., 0]

    def backward(self, dy):
        shape, arg = self._cache
        n, c, ho, wo = dy.shape
        s, k = self.stride, self.size
        dx = np.zeros(shape)
        di, dj = np.divmod(arg, k)
        rows = np.arange(ho)[None, None, :, None] * s + di
        cols = np.arange(wo)[None, None, None, :] * s + dj
        nn_ = np.arange(n)[:, None, None, None]
        cc = np.arange(c)[None, :, None, None]
        # Overlapping windows may pick the same input; accumulate.
        np.add.at(dx, (nn_, cc, rows, cols), dy)
        return dx


class FullyConnected(Layer):
    kind = "fully_connected"
    has_params = True

    def __init__(self, name, in_features, units):
        super().__init__(name)
        self.in_features = in_features
        self.units = units
        self.params = {"W": np.zeros((units, in_features)), "b": np.zeros(units)}

    def init(self, rng, gain):
        limit = init_limit(gain, self.in_features, self.units)
        self.params["W"] = _uniform(rng, (self.units, self.in_features), limit)
        self.params["b"] = np.zeros(self.units)

    def output_shape(self, in_shape):
        if tuple(in_shape) != (self.in_features,):
            raise ShapeError(f"{self.name}: expected input ({self.in_features},), got {tuple(in_shape)}")
        return (self.units,)

    def forward(self, x, train=False, rng=None):
        self.output_shape(x.shape[1:])
        self._x = x
        return x @ self.params["W"].T + self.params["b"]

    def backward(self, dy):
        self.grads["W"] = dy.T @ self._x
        self.grads["b"] = dy.sum(axis=0)
        return dy @ self.params["W"]


class Activation(Layer):
    kind = "activation"

    def __init__(self, name, fn):
        super().__init__(name)
        self.fn = fn

    def forward(self, x, train=False, rng=None):
        if self.fn == "relu":
            y = relu(x)
        elif self.fn == "sigmoid":
            y = sigmoid(x)
        else:
            y = np.tanh(x)
        self._x, self._y = x, y
        return y

    def backward(self, dy):
        if self.fn == "relu":
            return dy * (self._x > 0)
        if self.fn == "sigmoid":
            return dy * self._y * (1.0 - self._y)
        return dy * (1.0 - self._y ** 2)


class Dropout(Layer):
    """Inverted dropout: survivors are scaled by 1/(1-p) at train time only."""

    kind = "dropout"

    def __init__(self, name, p=0.5):
        super().__init__(name)
        self.p = p

    def forward(self, x, train=False, rng=None):
        if not train or self.p == 0.0:
            self._mask = None
            return x
        if rng is None:
            raise ValueError(f"{self.name}: train-mode dropout needs an rng")
        self._mask = (rng.random(x.shape) >= self.p) / (1.0 - self.p)
        return x * self._mask

    def backward(self, dy):
        return dy if self._mask is None else dy * self._mask


class Flatten(Layer):
    kind = "flatten"

    def output_shape(self, in_shape):
        return (int(np.prod(in_shape)),)

    def forward(self, x, train=False, rng=None):
        self._shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, dy):
        return dy.reshape(self._shape)


class Softmax(Layer):
    kind = "softmax"

    def forward(self, x, train=False, rng=None):
        self._y = softmax(x)
        return self._y

    def backward(self, dy):
        y = self._y
        return y * (dy - (dy * y).sum(axis=-1, keepdims=True))


def build_layer(spec, in_shape, index):
    name = spec.name or f"{spec.kind}{index}"
    o = spec.options
    if spec.kind == "conv2d":
        if len(in_shape) != 3:
            raise ShapeError(f"layer {index} ({name}): conv2d needs (C, H, W) input, got {in_shape}")
        return Conv2d(name, in_shape[0], o["filters"], o.get("kernel", 3), o.get("padding", "same"))
    if spec.kind == "maxpool2d":
        return MaxPool2d(name, o.get("size", 2), o.get("stride", 2))
    if spec.kind == "fully_connected":
        if len(in_shape) != 1:
            raise ShapeError(f"layer {index} ({name}): fully_connected needs flat input, got {in_shape}")
        return FullyConnected(name, in_shape[0], o["units"])
    if spec.kind == "activation":
        return Activation(name, o["fn"])
    if spec.kind == "dropout":
        return Dropout(name, o.get("p", 0.5))
    if spec.kind == "flatten":
        return Flatten(name)
    return Softmax(name)


class Network:
    """A feed-forward stack of layers built from :class:`LayerSpec` entries.

    >>> net = Network([LayerSpec("fully_connected", "fc", {"units": 2})], (3,))
    >>> sorted(net.params)
    ['fc.W', 'fc.b']
    """

    def __init__(self, specs, input_shape, seed=None):
        self.specs = [s if isinstance(s, LayerSpec) else LayerSpec.from_dict(s) for s in specs]
        self.input_shape = tuple(int(d) for d in input_shape)
        self.layers = []
        shape = self.input_shape
        for i, spec in enumerate(self.specs):
            try:
                layer = build_layer(spec, shape, i)
                shape = layer.output_shape(shape)
            except ShapeError as exc:
                raise ShapeError(f"layer {i}: {exc}") from None
            self.layers.append(layer)
        self.output_shape = shape
        names = [l.name for l in self.layers]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate layer names in {names}")
        self.initialize(np.random.default_rng(seed))

    def initialize(self, rng):
        for i, layer in enumerate(self.layers):
            if not layer.has_params:
                continue
            nxt = next((l for l in self.layers[i + 1:] if l.kind in ("activation", "softmax")
                        or l.has_params), None)
            if isinstance(nxt, Activation) and nxt.fn == "relu":
                gain = "he"
            else:
                gain = "head" if isinstance(nxt, Softmax) else "xavier"
            layer.init(rng, gain)

    @property
    def params(self):
        return {f"{l.name}.{k}": v for l in self.layers for k, v in l.params.items()}

    @property
    def grads(self):
        return {f"{l.name}.{k}": v for l in self.layers for k, v in l.grads.items()}

    def set_params(self, params):
        for l in self.layers:
            for k in l.params:
                key = f"{l.name}.{k}"
                value = np.asarray(params[key], dtype=np.float64)
                if value.shape != l.params[k].shape:
                    raise ShapeError(f"{key}: expected shape {l.params[k].shape}, got {value.shape}")
                l.params[k] = value.copy()

    def _check_input(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.shape == self.input_shape:
            return x[None], True
        if x.shape[1:] != self.input_shape:
            raise ShapeError(f"layer 0: input shape {x.shape} does not match {self.input_shape}")
        return x, False

    def forward(self, x, mode="infer", rng=None, upto=None):
        """Run the stack. ``mode`` is "train" or "infer"; dropout is active only in train.

        A single sample (no batch axis) returns a single output.
        ``upto`` stops after that many layers.
        """
        if mode not in ("train", "infer"):
            raise ValueError(f"mode must be 'train' or 'infer', got {mode!r}")
        x, single = self._check_input(x)
        train = mode == "train"
        for layer in self.layers[:upto]:
            x = layer.forward(x, train=train, rng=rng)
        return x[0] if single else x

    def backward(self, dy, upto=None):
        """Propagate ``dy`` back through the layers used by the last forward call."""
        for layer in reversed(self.layers[:upto]):
            dy = layer.backward(dy)
        return dy


def layer_index(network, name):
    for i, layer in enumerate(network.layers):
        if layer.name == name:
            return i
    raise KeyError(name)
