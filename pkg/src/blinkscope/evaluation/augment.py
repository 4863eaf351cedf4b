"""Photometric and flip augmentation, drawn once per sequence so every frame gets the same edit."""

from dataclasses import dataclass

import numpy as np

from ..sequence import EyeSequence


@dataclass
class AugmentParams:
    flip: bool = False
    brightness: float = 0.0  # added after flipping
    contrast: float = 1.0  # scale about mid-gray 0.5

    @classmethod
    def draw(cls, rng, p_flip=0.5, max_brightness=0.1, contrast_range=(0.8, 1.25)):
        return cls(bool(rng.random() < p_flip), float(rng.uniform(-max_brightness, max_brightness)),
                   float(rng.uniform(*contrast_range)))


def augment_frame(image, params=None, seed=None):
    """Apply ``params`` (or a draw from ``seed``) to an (H, W[, C]) image in [0, 1]."""
    if params is None:
        params = AugmentParams.draw(np.random.default_rng(seed))
    out = np.asarray(image, dtype=np.float64)
    if params.flip:
        out = out[:, ::-1]
    out = np.clip(out + params.brightness, 0.0, 1.0)
    out = np.clip((out - 0.5) * params.contrast + 0.5, 0.0, 1.0)
    return out


def augment_batch(images, rng):
    """Independent augmentation of each (H, W, C) image in a batch, for frame-level training."""
    return np.stack([augment_frame(img, AugmentParams.draw(rng)) for img in images])


def augment_sequence(seq, seed=None, rng=None):
    rng = rng if rng is not None else np.random.default_rng(seed)
    params = AugmentParams.draw(rng)
    frames = np.stack([augment_frame(f, params) for f in seq.frames])
    meta = dict(seq.metadata, augment=params)
    labels = None if seq.labels is None else seq.labels.copy()
    return EyeSequence(frames, seq.fps, seq.eye, labels, meta)
