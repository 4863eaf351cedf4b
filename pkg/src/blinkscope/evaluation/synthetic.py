"""Parametric synthetic faces and eyes with known open/closed ground truth.

An eye is described by its aperture ``a`` in [0, 1] (0 fully closed). Ground
truth follows one convention everywhere: a < 0.5 is closed (label 1).

Geometry lives in the 256x256 canonical frame used for alignment, so eye
crops rendered directly from the scene and crops cut from rendered face
images agree up to resampling.
"""

from dataclasses import asdict, dataclass, field

import numpy as np

from ..geometry import (EYE_INDICES, CanonicalFrame, LandmarkFrame, SimilarityTransform,
                        box_sample_grid, eye_crop_box)
from ..sequence import EyeSequence

EYE_HALF_WIDTH = 15.0
GAP_OPEN = 12.0  # extra lid gap (px) at a = 1
GAP_MIN = 0.75  # lid gap of a fully closed eye
LID_POINT_FACTOR = 8.0 / 9.0  # lid height at x = +-R/3 relative to the center height

SKIN = 0.62
SCLERA = 0.92
IRIS = 0.30
PUPIL = 0.08
LASH = 0.14
BACKGROUND = 0.25


def closed_label(aperture):
    return (np.asarray(aperture) < 0.5).astype(np.int8)


def lid_gap(aperture):
    return GAP_MIN + GAP_OPEN * np.asarray(aperture, dtype=np.float64)


def eye_points(center, aperture, half_width=EYE_HALF_WIDTH):
    """The six landmarks p1..p6 of one eye (corner, two upper lid, corner, two lower lid)."""
    cx, cy = center
    r = half_width
    u = lid_gap(aperture) / 2.0 * LID_POINT_FACTOR
    return np.array([[cx - r, cy], [cx - r / 3, cy - u], [cx + r / 3, cy - u],
                     [cx + r, cy], [cx + r / 3, cy + u], [cx - r / 3, cy + u]])


def face_template(left_aperture=1.0, right_aperture=1.0, canonical=None):
    """68 landmarks of the synthetic face in canonical coordinates."""
    canonical = canonical or CanonicalFrame()
    sx, sy = canonical.width / 256.0, canonical.height / 256.0
    pts = np.zeros((68, 2))
    phi = np.pi * np.arange(17) / 16
    pts[0:17] = np.stack([128 - 78 * np.cos(phi), 105 + 95 * np.sin(phi)], axis=1)
    u = np.linspace(0, 1, 5)
    pts[17:22] = np.stack([68 + 44 * u, 82 - 8 * np.sin(np.pi * u)], axis=1)
    pts[22:27] = np.stack([144 + 44 * u, 82 - 8 * np.sin(np.pi * u)], axis=1)
    pts[27:31] = np.stack([np.full(4, 128.0), np.linspace(100, 140, 4)], axis=1)
    pts[31:36] = np.stack([np.linspace(112, 144, 5), np.full(5, 148.0)], axis=1)
    left_c, right_c = canonical.eye_centers()
    scale = np.array([sx, sy])
    # Eye points are placed in canonical units directly so they sit on the canonical eye centers.
    pts[0:36] *= scale
    pts[36:42] = eye_points(left_c, left_aperture, EYE_HALF_WIDTH * sx)
    pts[42:48] = eye_points(right_c, right_aperture, EYE_HALF_WIDTH * sx)
    theta = np.pi - np.pi * np.arange(12) / 6  # 48 left corner, counter-clockwise on screen
    outer = np.stack([128 + 26 * np.cos(theta), 170 - 10 * np.sin(theta)], axis=1)
    pts[48:60] = outer * scale
    theta_in = np.pi - np.pi * np.arange(8) / 4
    pts[60:68] = np.stack([128 + 18 * np.cos(theta_in), 170 - 4 * np.sin(theta_in)], axis=1) * scale
    return pts


@dataclass
class EyeLook:
    """Per-subject appearance: skin tone, iris gaze offset (fraction of half-width)."""

    skin: float = SKIN
    gaze: float = 0.0
    iris: float = IRIS


def eye_scene(xs, ys, center, aperture, look, half_width=EYE_HALF_WIDTH):
    """Gray levels of one eye region sampled at canonical coordinates (xs, ys).

    ``center``, ``aperture`` and ``look`` fields may be arrays broadcastable
    against ``xs`` for batched rendering.
    """
    cx, cy = center
    dx = xs - cx
    dy = ys - cy
    r = half_width
    t = dx / r
    inside = np.abs(t) < 1.0
    half = lid_gap(aperture) / 2.0 * np.clip(1.0 - t * t, 0.0, None)
    skin = np.broadcast_to(look.skin, np.broadcast_shapes(np.shape(xs), np.shape(look.skin)))
    out = np.array(skin, dtype=np.float64)
    opening = inside & (np.abs(dy) < half)
    rr = (dx - look.gaze * r) ** 2 + dy ** 2
    val = np.where(rr < (0.18 * r) ** 2, PUPIL, np.where(rr < (0.42 * r) ** 2, look.iris, SCLERA))
    out = np.where(opening, val, out)
    lash = inside & (np.abs(dy + half) < 0.9)
    out = np.where(lash, LASH, out)
    # Faint crease above the eye keeps the region textured when the lids are shut.
    crease = inside & (np.abs(dy + half + 4.0 + 2.0 * (1 - t * t)) < 0.6)
    out = np.where(crease & ~lash, out - 0.08, out)
    return out


def render_eye_crops(apertures, rng, out_size=(36, 60), looks=None, noise=0.04, jitter_px=0.3,
                     canonical=None):
    """Render eye crops for a batch of apertures, cropped exactly as the pipeline would.

    Returns (crops (N, H, W, 1), eye landmark arrays (N, 6, 2)).
    """
    canonical = canonical or CanonicalFrame()
    center, _ = canonical.eye_centers()
    apertures = np.asarray(apertures, dtype=np.float64)
    n = len(apertures)
    looks = looks or [EyeLook()] * n
    crops = np.empty((n, *out_size))
    pts_all = np.empty((n, 6, 2))
    for k in range(n):
        pts = eye_points(center, apertures[k]) + rng.normal(0.0, jitter_px, (6, 2))
        pts_all[k] = pts
        box = eye_crop_box(pts)
        gx, gy = box_sample_grid(box, out_size)
        crops[k] = eye_scene(gx, gy, center, apertures[k], looks[k])
    crops += rng.normal(0.0, noise, crops.shape)
    return np.clip(crops, 0.0, 1.0)[..., None], pts_all


def random_look(rng):
    return EyeLook(skin=float(rng.uniform(0.5, 0.72)), gaze=float(rng.uniform(-0.25, 0.25)),
                   iris=float(rng.uniform(0.2, 0.4)))


def render_face(left_aperture, right_aperture, look, pose, size=(256, 256), noise=0.03, rng=None,
                canonical=None):
    """Render a whole synthetic face under head ``pose`` (canonical -> image similarity).

    Returns (image (H, W) in [0, 1], 68 landmarks in image coordinates).
    """
    canonical = canonical or CanonicalFrame()
    h, w = size
    ys, xs = np.mgrid[0:h, 0:w].astype(np.float64)
    inv = pose.inverse()
    src = inv.apply(np.stack([xs.ravel(), ys.ravel()], axis=1))
    px = src[:, 0].reshape(h, w)
    py = src[:, 1].reshape(h, w)
    sx = canonical.width / 256.0
    sy = canonical.height / 256.0
    img = np.full((h, w), BACKGROUND)
    face = ((px / sx - 128) / 82) ** 2 + ((py / sy - 118) / 108) ** 2 < 1.0
    img[face] = look.skin
    pts = face_template(left_aperture, right_aperture, canonical)
    for lo, hi in ((17, 22), (22, 27)):
        brow = pts[lo:hi]
        for a, b in zip(brow[:-1], brow[1:]):
            img[_segment_mask(px, py, a, b, 2.5 * sy)] = 0.18
    img[_segment_mask(px, py, pts[27], pts[30], 1.5 * sx)] = look.skin - 0.1
    mouth = ((px / sx - 128) / 26) ** 2 + ((py / sy - 170) / 10) ** 2 < 1.0
    img[mouth] = 0.35
    left_c, right_c = canonical.eye_centers()
    for c, a in ((left_c, left_aperture), (right_c, right_aperture)):
        near = (np.abs(px - c[0]) < 30 * sx) & (np.abs(py - c[1]) < 20 * sy)
        img[near] = eye_scene(px[near], py[near], c, a,
                              EyeLook(look.skin, look.gaze, look.iris), EYE_HALF_WIDTH * sx)
    if rng is not None and noise:
        img = img + rng.normal(0.0, noise, img.shape)
    return np.clip(img, 0.0, 1.0), pose.apply(pts)


def _segment_mask(px, py, a, b, radius):
    ab = b - a
    t = np.clip(((px - a[0]) * ab[0] + (py - a[1]) * ab[1]) / max(float(ab @ ab), 1e-12), 0, 1)
    dx = px - (a[0] + t * ab[0])
    dy = py - (a[1] + t * ab[1])
    return dx * dx + dy * dy < radius * radius


def random_pose(rng, size=(256, 256), max_rot_deg=8.0, scale_range=(0.85, 1.0), max_shift=10.0):
    h, w = size
    s = rng.uniform(*scale_range)
    rot = np.deg2rad(rng.uniform(-max_rot_deg, max_rot_deg))
    center = np.array([128.0, 128.0])
    c, si = np.cos(rot), np.sin(rot)
    rc = s * np.array([c * center[0] - si * center[1], si * center[0] + c * center[1]])
    t = np.array([w / 2.0, h / 2.0]) - rc + rng.uniform(-max_shift, max_shift, 2)
    return SimilarityTransform(s, rot, tuple(t))


# --- aperture trajectories -------------------------------------------------

def blink_profile(length, rng, n_blinks=1, transitions=True, min_closed=2, max_closed=6):
    """Aperture trajectory with ``n_blinks`` open -> closed -> open blinks.

    With ``transitions`` a half-closed frame may precede and follow each closed run.
    """
    a = rng.uniform(0.75, 1.0, length)
    placed = 0
    attempts = 0
    taken = np.zeros(length, dtype=bool)
    while placed < n_blinks and attempts < 100:
        attempts += 1
        closed = int(rng.integers(min_closed, max_closed + 1))
        pad = 1
        if closed + 2 * pad > length:
            closed = max(1, length - 2 * pad)
        start = int(rng.integers(pad, length - closed - pad + 1))
        lo, hi = start - pad, start + closed + pad
        if taken[max(0, lo - 1):hi + 1].any():
            continue
        taken[lo:hi] = True
        a[start:start + closed] = rng.uniform(0.0, 0.25, closed)
        if transitions:
            if rng.random() < 0.5:
                a[start - 1] = rng.uniform(0.55, 0.7)
            if rng.random() < 0.5:
                a[start + closed] = rng.uniform(0.3, 0.45)
        placed += 1
    return a


def ambiguous_profile(length, rng, p_ambiguous=0.5, min_closed=2, max_closed=6):
    """Blink trajectory of clear frames where some frames are swapped for ambiguous ones.

    Ambiguous frames get an aperture drawn from [0.35, 0.65] regardless of
    their state, so only temporal context tells their label. They are only
    placed where the state equals the previous frame's state, which makes the
    label equal to the state of the most recent clear frame.
    Returns (apertures, labels, ambiguous mask).
    """
    a = blink_profile(length, rng, n_blinks=1 + int(length >= 16 and rng.random() < 0.5),
                      transitions=False, min_closed=min_closed, max_closed=max_closed)
    labels = closed_label(a)
    amb = np.zeros(length, dtype=bool)
    for t in range(1, length):
        if labels[t] == labels[t - 1] and rng.random() < p_ambiguous:
            amb[t] = True
    a = np.where(amb, rng.uniform(0.35, 0.65, length), a)
    return a, labels, amb


# --- benchmark containers --------------------------------------------------

@dataclass
class LabeledFrameSet:
    images: np.ndarray  # (N, H, W, 1)
    labels: np.ndarray  # (N,)
    apertures: np.ndarray
    provenance: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.labels)


@dataclass
class LabeledSequenceSet:
    items: list  # EyeSequence with labels
    landmarks: list  # per item: list of LandmarkFrame
    apertures: list
    ambiguous: list = None  # per item: bool mask, ambiguity sets only
    provenance: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.items)

    def all_labels(self):
        return np.concatenate([s.labels for s in self.items])


@dataclass
class SynthConfig:
    frames: int = 1000
    sequences: int = 50
    ambiguous_sequences: int = 50
    train_fraction: float = 0.8
    min_len: int = 10
    max_len: int = 20
    fps: float = 25.0
    height: int = 36
    width: int = 60
    noise: float = 0.04
    p_ambiguous: float = 0.5

    def to_dict(self):
        return asdict(self)

    def split(self, n):
        n_train = int(round(n * self.train_fraction))
        return n_train, n - n_train


@dataclass
class Benchmarks:
    frames_train: LabeledFrameSet
    frames_test: LabeledFrameSet
    sequences_train: LabeledSequenceSet
    sequences_test: LabeledSequenceSet
    ambiguity_train: LabeledSequenceSet
    ambiguity_test: LabeledSequenceSet
    config: SynthConfig
    seed: int


def make_frame_set(n, rng, cfg, tag):
    kind = rng.random(n)
    a = np.where(kind < 0.45, rng.uniform(0.7, 1.0, n),
                 np.where(kind < 0.9, rng.uniform(0.0, 0.3, n), rng.uniform(0.3, 0.7, n)))
    looks = [random_look(rng) for _ in range(n)]
    images, _ = render_eye_crops(a, rng, (cfg.height, cfg.width), looks, cfg.noise)
    return LabeledFrameSet(images, closed_label(a), a, {"source": "synthetic", "split": tag})


def _landmark_frames(apertures, eye_pts, fps, labels):
    frames = []
    for t, a in enumerate(apertures):
        pts = face_template(a, a)
        pts[EYE_INDICES["left"]] = eye_pts[t]
        lab = int(labels[t])
        frames.append(LandmarkFrame(t, t / fps, pts, lab, lab))
    return frames


def make_sequence_set(n, rng, cfg, tag, ambiguous=False):
    items, marks, aps, ambs = [], [], [], []
    for _ in range(n):
        length = int(rng.integers(cfg.min_len, cfg.max_len + 1))
        if ambiguous:
            a, labels, amb = ambiguous_profile(length, rng, cfg.p_ambiguous)
        else:
            a = blink_profile(length, rng, n_blinks=1 + int(length >= 16 and rng.random() < 0.3))
            labels, amb = closed_label(a), None
        look = random_look(rng)
        crops, pts = render_eye_crops(a, rng, (cfg.height, cfg.width), [look] * length, cfg.noise)
        items.append(EyeSequence(crops, cfg.fps, "left", labels))
        marks.append(_landmark_frames(a, pts, cfg.fps, labels))
        aps.append(a)
        ambs.append(amb)
    return LabeledSequenceSet(items, marks, aps, ambs if ambiguous else None,
                              {"source": "synthetic", "split": tag, "ambiguous": ambiguous})


def make_synthetic_benchmarks(seed=0, cfg=None):
    """Frame set, blink-sequence set and temporal-ambiguity set, each split train/test."""
    cfg = cfg or SynthConfig()
    root = np.random.SeedSequence(seed)
    s_frames, s_seq, s_amb = (np.random.default_rng(s) for s in root.spawn(3))
    f_tr, f_te = cfg.split(cfg.frames)
    q_tr, q_te = cfg.split(cfg.sequences)
    m_tr, m_te = cfg.split(cfg.ambiguous_sequences)
    return Benchmarks(
        make_frame_set(f_tr, s_frames, cfg, "train"),
        make_frame_set(f_te, s_frames, cfg, "test"),
        make_sequence_set(q_tr, s_seq, cfg, "train"),
        make_sequence_set(q_te, s_seq, cfg, "test"),
        make_sequence_set(m_tr, s_amb, cfg, "train", ambiguous=True),
        make_sequence_set(m_te, s_amb, cfg, "test", ambiguous=True),
        cfg, seed)


# --- whole synthetic videos ------------------------------------------------

def video_apertures(n_frames, fps, rng, blink_times_s=()):
    """Open-eye trajectory with a blink (about 0.2 s closed) starting at each listed time."""
    a = rng.uniform(0.8, 1.0, n_frames)
    for t0 in blink_times_s:
        start = int(round(t0 * fps))
        closed = max(2, int(round(rng.uniform(0.12, 0.24) * fps)))
        if start >= n_frames:
            continue
        a[start:start + closed] = rng.uniform(0.0, 0.2, len(a[start:start + closed]))
    return a


def regular_blink_times(duration_s, rng, interval=(2.0, 8.0)):
    times, t = [], rng.uniform(0.5, interval[1] / 2)
    while t < duration_s - 0.5:
        times.append(t)
        t += rng.uniform(*interval)
    return times


def render_video(duration_s, fps, seed=0, blink_times_s=None, size=(256, 256), noise=0.03,
                 blinking=True):
    """Render a synthetic talking-head clip.

    Returns (images list of (H, W) arrays, LandmarkFrame list with labels).
    """
    rng = np.random.default_rng(seed)
    n = int(round(duration_s * fps))
    if blink_times_s is None:
        blink_times_s = regular_blink_times(duration_s, rng) if blinking else []
    a = video_apertures(n, fps, rng, blink_times_s)
    look = random_look(rng)
    base = random_pose(rng, size)
    images, frames = [], []
    for t in range(n):
        # Slow head drift around the base pose.
        drift = SimilarityTransform(1.0, np.deg2rad(2.0 * np.sin(t / (3 * fps))),
                                    (3.0 * np.sin(t / (2 * fps)), 2.0 * np.cos(t / (5 * fps))))
        pose = drift.compose(base)
        img, pts = render_face(a[t], a[t], look, pose, size, noise, rng)
        lab = int(a[t] < 0.5)
        images.append(img)
        frames.append(LandmarkFrame(t, t / fps, pts, lab, lab))
    return images, frames
