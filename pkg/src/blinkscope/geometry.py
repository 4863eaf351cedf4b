"""Facial-landmark geometry: alignment, eye boxes, eye aspect ratio, eye crops.

Pixel convention: the center of pixel (row r, col c) sits at (x=c, y=r).
Landmarks use the 68-point layout with 0-based indices; the "left" eye is
points 36-41 and the "right" eye 42-47 (37-42 / 43-48 when counted from 1).
"""

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateGeometryError, FormatError, ShapeError

N_LANDMARKS = 68
EYE_INDICES = {"left": list(range(36, 42)), "right": list(range(42, 48))}
BROW_INDICES = list(range(17, 27))
# Outer lower-lip contour, corner to corner.
MOUTH_BOTTOM_INDICES = [48, 54, 55, 56, 57, 58, 59]

WIDTH_ENLARGE = 1.25
HEIGHT_ENLARGE = 1.75
MIN_BOX_PX = 4.0

LUMA = np.array([0.299, 0.587, 0.114])


@dataclass
class LandmarkFrame:
    frame_index: int
    timestamp_s: float
    points: np.ndarray
    left_label: int = None
    right_label: int = None

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.float64)
        if self.points.shape != (N_LANDMARKS, 2):
            raise ShapeError(f"frame {self.frame_index}: expected {N_LANDMARKS}x2 points, got {self.points.shape}")
        if self.frame_index < 0:
            raise ValueError(f"frame_index must be >= 0, got {self.frame_index}")
        for lab in (self.left_label, self.right_label):
            if lab is not None and lab not in (0, 1):
                raise ValueError(f"frame {self.frame_index}: labels must be 0 (open) or 1 (closed), got {lab}")

    def eye(self, which):
        return self.points[EYE_INDICES[which]]

    def label(self, which):
        return self.left_label if which == "left" else self.right_label

    def to_json(self):
        d = {"frame_index": int(self.frame_index), "timestamp_s": float(self.timestamp_s),
             "points": [[float(x), float(y)] for x, y in self.points]}
        if self.left_label is not None:
            d["left_label"] = int(self.left_label)
        if self.right_label is not None:
            d["right_label"] = int(self.right_label)
        return json.dumps(d, separators=(",", ":"))

    @classmethod
    def from_json(cls, line):
        d = json.loads(line)
        return cls(int(d["frame_index"]), float(d["timestamp_s"]), d["points"],
                   d.get("left_label"), d.get("right_label"))


def write_landmarks(path, frames):
    with open(path, "w", encoding="utf-8") as fh:
        for f in frames:
            fh.write(f.to_json() + "\n")


def read_landmarks(path):
    """Read a JSON Lines landmark stream. Errors name the line and its byte offset."""
    frames = []
    offset = 0
    with open(path, "rb") as fh:
        for lineno, raw in enumerate(fh, start=1):
            text = raw.strip()
            if text:
                try:
                    frames.append(LandmarkFrame.from_json(text.decode("utf-8")))
                except (ValueError, KeyError, TypeError) as exc:
                    raise FormatError(f"{path}: bad landmark record on line {lineno}: {exc}", offset) from None
            offset += len(raw)
    return frames


@dataclass
class SimilarityTransform:
    """p -> scale * R(rotation) p + translation."""

    scale: float = 1.0
    rotation_rad: float = 0.0
    translation: tuple = (0.0, 0.0)

    def __post_init__(self):
        if not self.scale > 0:
            raise DegenerateGeometryError(f"scale must be positive, got {self.scale}")
        self.translation = (float(self.translation[0]), float(self.translation[1]))

    @property
    def matrix(self):
        """2x3 affine matrix [A | t]."""
        c, s = math.cos(self.rotation_rad), math.sin(self.rotation_rad)
        k = self.scale
        return np.array([[k * c, -k * s, self.translation[0]],
                         [k * s, k * c, self.translation[1]]])

    def apply(self, points):
        pts = np.asarray(points, dtype=np.float64)
        m = self.matrix
        return pts @ m[:, :2].T + m[:, 2]

    def inverse(self):
        k = 1.0 / self.scale
        rot = -self.rotation_rad
        c, s = math.cos(rot), math.sin(rot)
        tx, ty = self.translation
        return SimilarityTransform(k, rot, (-k * (c * tx - s * ty), -k * (s * tx + c * ty)))

    def compose(self, other):
        """The transform that applies ``other`` first, then ``self``."""
        t = self.apply(np.array([other.translation]))[0]
        return SimilarityTransform(self.scale * other.scale, self.rotation_rad + other.rotation_rad, tuple(t))

    @classmethod
    def identity(cls):
        return cls()


@dataclass
class CanonicalFrame:
    """Target geometry for alignment: image size and eye-center positions (fractions of W, H)."""

    width: int = 256
    height: int = 256
    left_eye: tuple = (0.35, 0.40)
    right_eye: tuple = (0.65, 0.40)

    def eye_centers(self):
        return (np.array([self.left_eye[0] * self.width, self.left_eye[1] * self.height]),
                np.array([self.right_eye[0] * self.width, self.right_eye[1] * self.height]))


def eye_centers(frame):
    return frame.eye("left").mean(axis=0), frame.eye("right").mean(axis=0)


def estimate_alignment(frame, canonical=None):
    """Similarity transform carrying the two eye centers onto the canonical pair."""
    canonical = canonical or CanonicalFrame()
    src_l, src_r = eye_centers(frame)
    dst_l, dst_r = canonical.eye_centers()
    return similarity_from_pairs(src_l, src_r, dst_l, dst_r)


def similarity_from_pairs(src_a, src_b, dst_a, dst_b):
    sa, sb = complex(*src_a), complex(*src_b)
    da, db = complex(*dst_a), complex(*dst_b)
    if abs(sb - sa) < 1e-12:
        raise DegenerateGeometryError("eye centers coincide; alignment is undefined")
    if abs(db - da) < 1e-12:
        raise DegenerateGeometryError("canonical eye positions coincide")
    a = (db - da) / (sb - sa)
    t = da - a * sa
    return SimilarityTransform(abs(a), math.atan2(a.imag, a.real), (t.real, t.imag))


def transform_frame(frame, transform):
    return LandmarkFrame(frame.frame_index, frame.timestamp_s, transform.apply(frame.points),
                         frame.left_label, frame.right_label)


@dataclass
class EyeBox:
    center: tuple
    width: float
    height: float
    eye: str = "left"

    def __post_init__(self):
        if not (self.width > 0 and self.height > 0):
            raise DegenerateGeometryError(f"eye box must have positive size, got {self.width}x{self.height}")

    @property
    def left(self):
        return self.center[0] - self.width / 2.0

    @property
    def top(self):
        return self.center[1] - self.height / 2.0


def eye_crop_box(eye_points, eye="left", min_box_px=MIN_BOX_PX):
    """Tight box around the six eye points, enlarged 1.25x horizontally and 1.75x vertically about its center."""
    pts = np.asarray(eye_points, dtype=np.float64)
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    center = (lo + hi) / 2.0
    w = max((hi[0] - lo[0]) * WIDTH_ENLARGE, min_box_px)
    h = max((hi[1] - lo[1]) * HEIGHT_ENLARGE, min_box_px)
    return EyeBox((float(center[0]), float(center[1])), float(w), float(h), eye)


def ear(eye_points):
    """Eye aspect ratio (|p2-p6| + |p3-p5|) / (2 |p1-p4|) over the six eye points."""
    p = np.asarray(eye_points, dtype=np.float64)
    if p.shape != (6, 2):
        raise ShapeError(f"EAR needs 6 (x, y) points, got {p.shape}")
    horizontal = np.linalg.norm(p[0] - p[3])
    if horizontal <= 1e-12:
        raise DegenerateGeometryError("eye corner points coincide")
    vertical = np.linalg.norm(p[1] - p[5]) + np.linalg.norm(p[2] - p[4])
    return float(vertical / (2.0 * horizontal))


def to_gray(image):
    img = np.asarray(image, dtype=np.float64)
    if img.ndim == 2:
        return img
    if img.shape[2] == 1:
        return img[..., 0]
    return img[..., :3] @ LUMA


def sample_bilinear(image, xs, ys):
    """Bilinear samples of a (H, W[, C]) image at float coordinates.

    Out-of-range coordinates are clamped to the border (edge replication).
    Returns the samples and a boolean mask of which coordinates needed clamping.
    """
    img = np.asarray(image, dtype=np.float64)
    h, w = img.shape[:2]
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    outside = (xs < 0) | (xs > w - 1) | (ys < 0) | (ys > h - 1)
    x = np.clip(xs, 0, w - 1)
    y = np.clip(ys, 0, h - 1)
    x0 = np.floor(x).astype(np.int64)
    y0 = np.floor(y).astype(np.int64)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = x - x0
    fy = y - y0
    if img.ndim == 3:
        fx = fx[..., None]
        fy = fy[..., None]
    top = img[y0, x0] * (1.0 - fx) + img[y0, x1] * fx
    bottom = img[y1, x0] * (1.0 - fx) + img[y1, x1] * fx
    return top * (1.0 - fy) + bottom * fy, outside


def align_image(image, transform, canonical=None, out_shape=None):
    """Warp ``image`` into the canonical frame: output pixel q samples image at transform^-1(q)."""
    canonical = canonical or CanonicalFrame()
    h, w = out_shape or (canonical.height, canonical.width)
    inv = transform.inverse()
    ys, xs = np.mgrid[0:h, 0:w].astype(np.float64)
    src = inv.apply(np.stack([xs.ravel(), ys.ravel()], axis=1))
    out, _ = sample_bilinear(image, src[:, 0].reshape(h, w), src[:, 1].reshape(h, w))
    return out


def box_sample_grid(box, out_size):
    """Sample coordinates that resample ``box`` onto an (h, w) grid."""
    oh, ow = out_size
    xs = box.left + (np.arange(ow) + 0.5) * (box.width / ow) - 0.5
    ys = box.top + (np.arange(oh) + 0.5) * (box.height / oh) - 0.5
    return np.meshgrid(xs, ys)


def crop_box(image, box, out_size):
    gx, gy = box_sample_grid(box, out_size)
    out, outside = sample_bilinear(to_gray(image), gx, gy)
    return np.clip(out, 0.0, 1.0), bool(outside.any())


def crop_eye_sequence(frames, images, eye="left", out_size=(36, 60), fps=25.0):
    """Crop one eye from every (already aligned) frame into an EyeSequence.

    Boxes that run past the image are sampled with edge replication; the
    affected frame indices are listed in ``metadata["clamped_frames"]``.
    """
    from .sequence import EyeSequence

    if len(frames) != len(images):
        raise ShapeError(f"{len(frames)} landmark frames but {len(images)} images")
    order = [f.frame_index for f in frames]
    if any(b < a for a, b in zip(order, order[1:])):
        raise ValueError("frames must be in temporal order")
    crops, labels, clamped = [], [], []
    for k, (frame, image) in enumerate(zip(frames, images)):
        box = eye_crop_box(frame.eye(eye), eye)
        crop, was_clamped = crop_box(image, box, out_size)
        if was_clamped:
            clamped.append(k)
        crops.append(crop[..., None])
        lab = frame.label(eye)
        labels.append(-1 if lab is None else lab)
    labels = np.array(labels, dtype=np.int8)
    return EyeSequence(np.stack(crops) if crops else np.zeros((0, *out_size, 1)), fps, eye,
                       None if (labels < 0).all() else labels,
                       metadata={"clamped_frames": clamped})
