"""Face splicing: landmark polygon masks, warping a face patch back, soft-mask blending.

Also holds minimal binary PGM/PPM (8-bit) readers and writers so that
composites can be stored bit-exactly without an imaging dependency.
"""

import re
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateGeometryError, FormatError, ShapeError
from .geometry import BROW_INDICES, MOUTH_BOTTOM_INDICES, sample_bilinear

MASK_POINT_INDICES = BROW_INDICES + MOUTH_BOTTOM_INDICES


def _cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def convex_hull(points):
    """Monotone-chain convex hull.

    Returns the hull vertices as an (M, 2) array in counter-clockwise order
    (for x right, y up), without collinear points.
    """
    pts = sorted({(float(x), float(y)) for x, y in np.asarray(points, dtype=np.float64)})
    if len(pts) < 3:
        raise DegenerateGeometryError(f"need at least 3 distinct points for a polygon, got {len(pts)}")
    lower, upper = [], []
    for p in pts:
        while len(lower) >= 2 and _cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    for p in reversed(pts):
        while len(upper) >= 2 and _cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    hull = lower[:-1] + upper[:-1]
    if len(hull) < 3:
        raise DegenerateGeometryError("points are collinear; the hull has no area")
    return np.array(hull)


def rasterize_convex(vertices, size, tol=1e-9):
    """Binary (H, W) raster: 1 where the pixel center lies inside or on the convex polygon."""
    h, w = size
    ys, xs = np.mgrid[0:h, 0:w].astype(np.float64)
    v = np.asarray(vertices, dtype=np.float64)
    inside = np.ones((h, w), dtype=bool)
    for a, b in zip(v, np.roll(v, -1, axis=0)):
        cross = (b[0] - a[0]) * (ys - a[1]) - (b[1] - a[1]) * (xs - a[0])
        inside &= cross >= -tol * max(1.0, float(np.hypot(*(b - a))))
    return inside.astype(np.uint8)


@dataclass
class PolygonMask:
    vertices: np.ndarray  # (M, 2) convex, counter-clockwise
    raster: np.ndarray  # (H, W) uint8 in {0, 1}

    @property
    def size(self):
        return self.raster.shape

    def is_convex(self):
        v = self.vertices
        n = len(v)
        crosses = [_cross(v[k], v[(k + 1) % n], v[(k + 2) % n]) for k in range(n)]
        return all(c > 0 for c in crosses) or all(c < 0 for c in crosses)


def polygon_mask(points, image_size):
    vertices = convex_hull(points)
    return PolygonMask(vertices, rasterize_convex(vertices, image_size))


def build_mask(frame, image_size):
    """Convex polygon over both eyebrows and the bottom mouth contour."""
    return polygon_mask(frame.points[MASK_POINT_INDICES], image_size)


def warp_back(patch, transform, target):
    """Resample ``patch`` into target coordinates.

    ``transform`` maps patch coordinates to target coordinates (the inverse of
    the alignment that produced the patch). Each target pixel whose preimage
    falls inside the patch takes the bilinear patch value; all others keep
    the target value.
    """
    patch = np.asarray(patch, dtype=np.float64)
    out = np.array(target, dtype=np.float64)
    if patch.ndim != out.ndim or patch.shape[2:] != out.shape[2:]:
        raise ShapeError(f"patch {patch.shape} and target {out.shape} have different channel layouts")
    covered, values = _warp(patch, transform, out.shape[:2])
    out[covered] = values[covered]
    return out


def warp_footprint(patch_shape, transform, target_size):
    """Boolean (H, W) map of the target pixels a warped patch covers."""
    covered, _ = _warp(np.zeros(patch_shape[:2]), transform, target_size)
    return covered


def _warp(patch, transform, size):
    h, w = size
    ph, pw = patch.shape[:2]
    ys, xs = np.mgrid[0:h, 0:w].astype(np.float64)
    src = transform.inverse().apply(np.stack([xs.ravel(), ys.ravel()], axis=1))
    sx = src[:, 0].reshape(h, w)
    sy = src[:, 1].reshape(h, w)
    eps = 1e-9
    covered = (sx >= -eps) & (sx <= pw - 1 + eps) & (sy >= -eps) & (sy <= ph - 1 + eps)
    values, _ = sample_bilinear(patch, sx, sy)
    return covered, values


def gaussian_kernel(sigma):
    """Normalized 2D Gaussian, truncated to the disc of radius 3 sigma."""
    if sigma < 0:
        raise ValueError(f"blur sigma must be >= 0, got {sigma}")
    if sigma == 0:
        return np.ones((1, 1))
    r = int(np.floor(3.0 * sigma))
    d = np.arange(-r, r + 1, dtype=np.float64)
    dist2 = d[:, None] ** 2 + d[None, :] ** 2
    k = np.where(dist2 <= (3.0 * sigma) ** 2, np.exp(-dist2 / (2.0 * sigma ** 2)), 0.0)
    return k / k.sum()


def gaussian_blur(image, sigma):
    """Blur a (H, W) image; borders are edge-replicated so constants stay constant."""
    img = np.asarray(image, dtype=np.float64)
    kernel = gaussian_kernel(sigma)
    r = kernel.shape[0] // 2
    if r == 0:
        return img.copy()
    h, w = img.shape
    padded = np.pad(img, r, mode="edge")
    out = np.zeros((h, w))
    for i, j in zip(*np.nonzero(kernel)):
        out += kernel[i, j] * padded[i:i + h, j:j + w]
    return out


@dataclass
class SpliceResult:
    composite: np.ndarray
    mask: PolygonMask
    blur_sigma: float
    soft_mask: np.ndarray
    provenance: dict = field(default_factory=dict)

    def metadata(self):
        return {
            "mask_vertices": [[float(x), float(y)] for x, y in self.mask.vertices],
            "blur_sigma": float(self.blur_sigma),
            "blur_target": "mask",
            "provenance": dict(self.provenance),
        }


def blend(warped, target, mask, blur_sigma=0.0, provenance=None):
    """Alpha-composite ``warped`` over ``target`` through the Gaussian-blurred mask raster."""
    warped = np.asarray(warped, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if warped.shape != target.shape:
        raise ShapeError(f"warped {warped.shape} and target {target.shape} differ in size")
    if mask.raster.shape != target.shape[:2]:
        raise ShapeError(f"mask {mask.raster.shape} does not match image {target.shape[:2]}")
    soft = np.clip(gaussian_blur(mask.raster.astype(np.float64), blur_sigma), 0.0, 1.0)
    alpha = soft[..., None] if target.ndim == 3 else soft
    composite = alpha * warped + (1.0 - alpha) * target
    return SpliceResult(composite, mask, float(blur_sigma), soft, dict(provenance or {}))


def perturb_colors(image, rng, gain=(0.85, 1.15), bias=(-0.06, 0.06)):
    """Tone-shifted copy of ``image`` (one gain and bias per channel)."""
    img = np.asarray(image, dtype=np.float64)
    channels = img.shape[2] if img.ndim == 3 else 1
    g = rng.uniform(*gain, channels)
    b = rng.uniform(*bias, channels)
    if img.ndim == 2:
        g, b = g[0], b[0]
    return np.clip(img * g + b, 0.0, 1.0)


# --- PGM / PPM --------------------------------------------------------------

def to_uint8(image):
    img = np.asarray(image)
    if img.dtype == np.uint8:
        return img
    return np.round(np.clip(img, 0.0, 1.0) * 255.0).astype(np.uint8)


def write_pnm(path, image, comment=None):
    """Binary PGM (H, W) or PPM (H, W, 3); float input in [0, 1] is quantized to 8 bits."""
    img = to_uint8(image)
    if img.ndim == 3 and img.shape[2] == 1:
        img = img[..., 0]
    if img.ndim == 2:
        magic = b"P5"
    elif img.ndim == 3 and img.shape[2] == 3:
        magic = b"P6"
    else:
        raise ShapeError(f"PNM images are (H, W) or (H, W, 3), got {img.shape}")
    h, w = img.shape[:2]
    header = magic + b"\n"
    if comment:
        header += b"".join(b"# " + line.encode("utf-8") + b"\n" for line in comment.splitlines())
    header += f"{w} {h}\n255\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header + np.ascontiguousarray(img).tobytes())


_TOKEN = re.compile(rb"\s*(?:#[^\n]*\n\s*)*(\S+)")


def parse_pnm(data, name="<bytes>"):
    if data[:2] not in (b"P5", b"P6"):
        raise FormatError(f"{name}: not a binary PGM/PPM file", 0)
    channels = 1 if data[:2] == b"P5" else 3
    pos = 2
    values = []
    for _ in range(3):
        m = _TOKEN.match(data, pos)
        if m is None or not m.group(1).isdigit():
            raise FormatError(f"{name}: bad PNM header field", pos)
        values.append(int(m.group(1)))
        pos = m.end()
    w, h, maxval = values
    if maxval != 255:
        raise FormatError(f"{name}: only 8-bit images (maxval 255) are supported", pos)
    pos += 1  # single whitespace byte before the raster
    need = w * h * channels
    if len(data) - pos != need:
        raise FormatError(f"{name}: raster holds {len(data) - pos} bytes, expected {need}", pos)
    img = np.frombuffer(data, dtype=np.uint8, offset=pos).reshape(h, w, channels)
    return img[..., 0].copy() if channels == 1 else img.copy()


def read_pnm(path):
    """Read an 8-bit binary PGM/PPM as a uint8 array."""
    with open(path, "rb") as fh:
        return parse_pnm(fh.read(), path)
