"""Eye-crop sequences and the EBSQ tensor file format.

EBSQ layout (little-endian)::

    b"EBSQ" | u32 version | u32 frames | u32 height | u32 width | u32 channels
    float32 pixels, frame-major then row-major (T, H, W, C)
    optional label block: 2 bytes per frame (left eye, right eye), 255 = unlabeled
"""

import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import FormatError, ShapeError

MAGIC = b"EBSQ"
VERSION = 1
UNLABELED = 255
_HEADER = struct.Struct("<4sIIIII")


@dataclass
class EyeSequence:
    frames: np.ndarray  # (T, H, W, C) in [0, 1]
    fps: float = 25.0
    eye: str = "left"
    labels: np.ndarray = None  # (T,) int8, 0 open / 1 closed / -1 unlabeled
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.frames = np.asarray(self.frames, dtype=np.float64)
        if self.frames.ndim == 3:
            self.frames = self.frames[..., None]
        if self.frames.ndim != 4:
            raise ShapeError(f"frames must be (T, H, W, C), got {self.frames.shape}")
        if not self.fps > 0:
            raise ValueError(f"fps must be positive, got {self.fps}")
        if self.eye not in ("left", "right"):
            raise ValueError(f"eye must be 'left' or 'right', got {self.eye!r}")
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=np.int8)
            if self.labels.shape != (len(self.frames),):
                raise ShapeError(f"{len(self.labels)} labels for {len(self.frames)} frames")
            if not np.isin(self.labels, (-1, 0, 1)).all():
                raise ValueError("labels must be 0, 1 or -1 (unlabeled)")

    def __len__(self):
        return len(self.frames)

    @property
    def frame_shape(self):
        return self.frames.shape[1:]

    @property
    def duration_s(self):
        return len(self) / self.fps

    def slice(self, start, stop):
        labels = None if self.labels is None else self.labels[start:stop]
        return EyeSequence(self.frames[start:stop], self.fps, self.eye, labels, dict(self.metadata))

    def save(self, path):
        labels = None
        if self.labels is not None:
            labels = np.full((len(self), 2), -1, dtype=np.int8)
            labels[:, 0 if self.eye == "left" else 1] = self.labels
        write_ebsq(path, self.frames, labels)

    @classmethod
    def load(cls, path, fps=25.0, eye=None):
        """Read an EBSQ file. Without ``eye``, the labeled column decides (left if both or neither)."""
        frames, labels = read_ebsq(path)
        eye_labels = None
        if labels is not None:
            has = [(labels[:, k] >= 0).any() for k in (0, 1)]
            if eye is None:
                eye = "right" if has[1] and not has[0] else "left"
            col = labels[:, 0 if eye == "left" else 1]
            eye_labels = col if (col >= 0).any() else None
        return cls(frames, fps, eye or "left", eye_labels)


def write_ebsq(path, frames, labels=None):
    """Write (T, H, W, C) frames and optional (T, 2) left/right labels (-1 = unlabeled)."""
    frames = np.asarray(frames)
    if frames.ndim == 3:
        frames = frames[..., None]
    t, h, w, c = frames.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, t, h, w, c))
        fh.write(np.ascontiguousarray(frames, dtype="<f4").tobytes())
        if labels is not None:
            labels = np.asarray(labels)
            if labels.shape != (t, 2):
                raise ShapeError(f"label block must be ({t}, 2), got {labels.shape}")
            block = np.where(labels < 0, UNLABELED, labels).astype(np.uint8)
            fh.write(block.tobytes())


def read_ebsq(path):
    with open(path, "rb") as fh:
        data = fh.read()
    return parse_ebsq(data, path)


def parse_ebsq(data, name="<bytes>"):
    if len(data) < _HEADER.size:
        raise FormatError(f"{name}: truncated EBSQ header", len(data))
    magic, version, t, h, w, c = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise FormatError(f"{name}: not an EBSQ file (bad magic)", 0)
    if version != VERSION:
        raise FormatError(f"{name}: unsupported EBSQ version {version}", 4)
    n_pix = t * h * w * c
    end = _HEADER.size + 4 * n_pix
    if len(data) < end:
        raise FormatError(f"{name}: pixel block truncated, expected {4 * n_pix} bytes", len(data))
    frames = np.frombuffer(data, dtype="<f4", count=n_pix, offset=_HEADER.size).reshape(t, h, w, c)
    if not np.isfinite(frames).all():
        bad = int(np.flatnonzero(~np.isfinite(frames.ravel()))[0])
        raise FormatError(f"{name}: non-finite pixel value", _HEADER.size + 4 * bad)
    rest = len(data) - end
    labels = None
    if rest:
        if rest != 2 * t:
            raise FormatError(f"{name}: label block has {rest} bytes, expected {2 * t}", end)
        block = np.frombuffer(data, dtype=np.uint8, offset=end).reshape(t, 2)
        bad = ~np.isin(block, (0, 1, UNLABELED))
        if bad.any():
            raise FormatError(f"{name}: invalid label byte", end + int(np.flatnonzero(bad.ravel())[0]))
        labels = np.where(block == UNLABELED, -1, block).astype(np.int8)
    return frames.astype(np.float64), labels
