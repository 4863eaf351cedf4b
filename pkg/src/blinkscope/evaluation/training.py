"""Two-step training: the frame CNN first, then LSTM + head on frozen CNN features."""

from dataclasses import asdict, dataclass, field

import numpy as np

from ..errors import ShapeError
from ..nn.checkpoint import params_digest
from ..nn.functional import batch_cross_entropy
from ..nn.models import ArchConfig, CnnModel, LrcnModel, frames_to_batch
from ..nn.optim import Adam, Sgd, lr_schedule
from .augment import augment_batch, augment_sequence


@dataclass
class TrainConfig:
    epochs: int = 30
    batch_size: int = 16
    base_lr: float = 0.01
    lr_decay: float = 0.9
    decay_every: int = 2
    momentum: float = 0.0
    augment: bool = True
    seed: int = 0

    def to_dict(self):
        return asdict(self)


@dataclass
class TrainLog:
    initial_loss: float = None
    epochs: list = field(default_factory=list)  # dicts with epoch, loss, lr

    def add(self, epoch, loss, lr):
        self.epochs.append({"epoch": epoch, "loss": float(loss), "lr": float(lr)})

    @property
    def losses(self):
        return [e["loss"] for e in self.epochs]


def train_cnn(data, arch=None, cfg=None):
    """Fit the frame classifier with mini-batch SGD and the step-decay schedule.

    ``data`` is a LabeledFrameSet. Returns (CnnModel, TrainLog).
    """
    arch = arch or ArchConfig()
    cfg = cfg or TrainConfig()
    labels = np.asarray(data.labels, dtype=np.int64)
    if len(np.unique(labels)) < 2:
        raise ValueError("training data must contain both open and closed examples")
    rng = np.random.default_rng(cfg.seed)
    model = CnnModel(arch, seed=int(rng.integers(2 ** 31)))
    images = np.asarray(data.images, dtype=np.float64)
    model.check_frames(frames_to_batch(images[:1]))
    log = TrainLog(initial_loss=batch_cross_entropy(model.predict_proba(frames_to_batch(images)), labels))
    opt = Sgd(cfg.momentum)
    n = len(labels)
    for epoch in range(cfg.epochs):
        lr = lr_schedule(cfg.base_lr, epoch, cfg.lr_decay, cfg.decay_every)
        order = rng.permutation(n)
        total = 0.0
        for s in range(0, n, cfg.batch_size):
            idx = order[s:s + cfg.batch_size]
            batch = images[idx]
            if cfg.augment:
                batch = augment_batch(batch, rng)
            loss, grads = model.loss_and_grads(frames_to_batch(batch), labels[idx], rng=rng)
            model.set_params(opt.update(model.params, grads, lr))
            total += loss * len(idx)
        log.add(epoch, total / n, lr)
    return model, log


def _sequence_items(data):
    items = data.items if hasattr(data, "items") else list(data)
    for k, seq in enumerate(items):
        if seq.labels is None or (seq.labels < 0).any():
            raise ValueError(f"sequence {k} is not fully labeled")
    return items


def train_lrcn(data, cnn, cfg=None, hidden_size=None):
    """Train LSTM + head on features from the frozen ``cnn``.

    Sequences in a batch are unrolled one at a time (no padding) and their
    gradients summed before each Adam step. The feature extractor is never
    updated. Returns (LrcnModel, TrainLog).
    """
    cfg = cfg or TrainConfig(batch_size=4)
    if not isinstance(cnn, CnnModel):
        raise ShapeError("train_lrcn needs a trained CnnModel as feature extractor")
    items = _sequence_items(data)
    arch = cnn.arch if hidden_size is None else ArchConfig.from_dict({**cnn.arch.to_dict(),
                                                                     "hidden_size": hidden_size})
    for seq in items:
        if frames_to_batch(seq.frames[:1]).shape[1:] != arch.input_shape:
            raise ShapeError(f"sequence frames {seq.frame_shape} incompatible with CNN input {arch.input_shape}")
    rng = np.random.default_rng(cfg.seed)
    model = LrcnModel(arch, seed=int(rng.integers(2 ** 31)), cnn=cnn)
    frozen_before = params_digest(cnn.feature_params())

    def features(seqs):
        return [model.features(frames_to_batch(s.frames)) for s in seqs]

    clean_feats = features(items)
    labels = [s.labels.astype(np.int64) for s in items]
    log = TrainLog(initial_loss=float(np.mean([batch_cross_entropy(model.run_features(f)[0], y)
                                               for f, y in zip(clean_feats, labels)])))
    opt = Adam()
    n = len(items)
    for epoch in range(cfg.epochs):
        lr = lr_schedule(cfg.base_lr, epoch, cfg.lr_decay, cfg.decay_every)
        feats = features([augment_sequence(s, rng=rng) for s in items]) if cfg.augment else clean_feats
        order = rng.permutation(n)
        total = 0.0
        for s in range(0, n, cfg.batch_size):
            idx = order[s:s + cfg.batch_size]
            acc = None
            for k in sorted(idx):
                loss, grads = model.sequence_loss_and_grads(feats[k], labels[k])
                total += loss
                if acc is None:
                    acc = {name: g.copy() for name, g in grads.items()}
                else:
                    for name, g in grads.items():
                        acc[name] += g
            model.set_sequence_params(opt.update(model.sequence_params, acc, lr))
        log.add(epoch, total / n, lr)
    if params_digest(cnn.feature_params()) != frozen_before:
        raise RuntimeError("feature extractor parameters changed during LRCN training")
    return model, log
