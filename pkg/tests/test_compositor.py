import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from blinkscope.compositor import (PolygonMask, blend, build_mask, convex_hull, gaussian_blur, gaussian_kernel,
                                   parse_pnm, perturb_colors, polygon_mask, rasterize_convex, read_pnm,
                                   warp_back, warp_footprint, write_pnm)
from blinkscope.errors import DegenerateGeometryError, FormatError, ShapeError
from blinkscope.evaluation.synthetic import face_template
from blinkscope.geometry import LandmarkFrame, SimilarityTransform

point_sets = st.lists(st.tuples(st.integers(0, 60), st.integers(0, 60)), min_size=3, max_size=40)


def square_mask(size=64, lo=16, hi=47):
    return polygon_mask([(lo, lo), (hi, lo), (hi, hi), (lo, hi)], (size, size))


def point_in_hull(p, hull):
    n = len(hull)
    for k in range(n):
        e, d = hull[(k + 1) % n] - hull[k], p - hull[k]
        if e[0] * d[1] - e[1] * d[0] < -1e-9:
            return False
    return True


# mask

def test_triangle_mask_contains_centroid():
    pts = np.array([[10.0, 10.0], [50.0, 12.0], [30.0, 45.0]])
    m = polygon_mask(pts, (64, 64))
    cx, cy = np.round(pts.mean(axis=0)).astype(int)
    assert m.raster[cy, cx] == 1
    assert len(m.vertices) == 3 and m.is_convex()


def test_interior_points_are_not_vertices():
    pts = [(0, 0), (10, 0), (10, 10), (0, 10), (5, 5), (3, 7), (5, 0)]
    hull = convex_hull(pts)
    assert sorted(map(tuple, hull.tolist())) == [(0, 0), (0, 10), (10, 0), (10, 10)]


def test_square_area_matches_pixel_count():
    for lo, hi in [(10.0, 50.0), (4.2, 60.7), (0.0, 63.0)]:
        m = polygon_mask([(lo, lo), (hi, lo), (hi, hi), (lo, hi)], (64, 64))
        side = np.floor(hi) - np.ceil(lo) + 1  # pixel centers inside or on the boundary
        assert m.raster.sum() == side ** 2
        assert abs(m.raster.sum() - (hi - lo) ** 2) <= 0.01 * (hi - lo) ** 2 + 4 * (hi - lo) + 4


def test_large_square_area_within_one_percent():
    m = polygon_mask([(0.5, 0.5), (400.5, 0.5), (400.5, 300.5), (0.5, 300.5)], (320, 420))
    assert abs(m.raster.sum() - 400 * 300) <= 0.01 * 400 * 300


def test_degenerate_point_sets():
    with pytest.raises(DegenerateGeometryError):
        convex_hull([(0, 0), (1, 1), (0, 0)])
    with pytest.raises(DegenerateGeometryError):
        convex_hull([(0, 0), (1, 1), (2, 2), (3, 3)])


@given(point_sets)
def test_hull_properties(points):
    pts = np.array(points, dtype=float)
    try:
        hull = convex_hull(pts)
    except DegenerateGeometryError:
        return
    as_set = {tuple(p) for p in pts.tolist()}
    assert all(tuple(v) in as_set for v in hull.tolist())
    assert all(point_in_hull(p, hull) for p in pts)
    assert PolygonMask(hull, np.zeros((1, 1))).is_convex()
    raster = rasterize_convex(hull, (61, 61))
    for x, y in pts.astype(int):
        assert raster[y, x] == 1


def test_build_mask_uses_brows_and_mouth():
    frame = LandmarkFrame(0, 0.0, face_template())
    m = build_mask(frame, (256, 256))
    brows = face_template()[17:27]
    assert m.raster.shape == (256, 256) and m.is_convex()
    assert m.vertices[:, 1].max() > brows[:, 1].max() + 40  # reaches down to the mouth
    ey = int(face_template()[36:48, 1].mean())
    ex = int(face_template()[36:48, 0].mean())
    assert m.raster[ey, ex] == 1


# warp

def test_identity_warp_replaces_target(rng):
    patch = rng.uniform(size=(20, 30))
    assert np.array_equal(warp_back(patch, SimilarityTransform(), np.zeros((20, 30))), patch)


def test_constant_patch_constant_region():
    t = SimilarityTransform(1.3, 0.4, (20.0, 5.0))
    out = warp_back(np.full((16, 16), 0.7), t, np.zeros((64, 64)))
    covered = warp_footprint((16, 16), t, (64, 64))
    assert covered.sum() > 200
    assert np.allclose(out[covered], 0.7)
    assert np.all(out[~covered] == 0)


def test_warp_round_trip_smooth_image():
    ys, xs = np.mgrid[0:64, 0:64]
    img = 0.5 + 0.4 * np.sin(xs / 9.0) * np.cos(ys / 11.0)
    t = SimilarityTransform(1.0, 0.2, (6.0, -4.0))
    there = warp_back(img, t, np.zeros((64, 64)))
    back = warp_back(there, t.inverse(), np.zeros((64, 64)))
    inner = (slice(16, 48), slice(16, 48))
    assert np.max(np.abs(back[inner] - img[inner])) <= 2 / 255


def test_warp_channel_mismatch():
    with pytest.raises(ShapeError):
        warp_back(np.zeros((4, 4, 3)), SimilarityTransform(), np.zeros((4, 4)))


# blur and blend

@pytest.mark.parametrize("sigma", [0.0, 0.5, 1.0, 2.5, 4.0])
def test_kernel_normalized(sigma):
    k = gaussian_kernel(sigma)
    assert abs(k.sum() - 1.0) < 1e-9
    assert np.allclose(k, k.T) and np.allclose(k, k[::-1])
    r = k.shape[0] // 2
    d2 = np.add.outer(np.arange(-r, r + 1) ** 2, np.arange(-r, r + 1) ** 2)
    assert np.all(k[d2 > 9 * sigma ** 2] == 0)


def test_negative_sigma_rejected():
    with pytest.raises(ValueError):
        gaussian_kernel(-1)


def test_blur_of_constant_is_constant():
    assert np.allclose(gaussian_blur(np.full((20, 25), 0.3), 2.0), 0.3, atol=1e-12)


def test_hard_mask_inside_is_warped_exactly(rng):
    m = square_mask()
    warped, target = rng.uniform(size=(64, 64)), rng.uniform(size=(64, 64))
    res = blend(warped, target, m, 0.0)
    inside = m.raster.astype(bool)
    assert np.array_equal(res.composite[inside], warped[inside])
    assert np.array_equal(res.composite[~inside], target[~inside])


@pytest.mark.parametrize("sigma", [0.0, 1.5, 3.0])
def test_blend_identity(sigma, rng):
    img = rng.uniform(size=(64, 64, 3))
    res = blend(img, img, square_mask(), sigma)
    assert np.allclose(res.composite, img, atol=1e-15)


@pytest.mark.parametrize("sigma", [1.0, 2.0, 3.3])
def test_far_pixels_byte_identical(sigma, rng):
    m = square_mask()
    warped, target = rng.uniform(size=(64, 64)), rng.uniform(size=(64, 64))
    res = blend(warped, target, m, sigma)
    ys, xs = np.mgrid[0:64, 0:64]
    dx = np.maximum(np.maximum(16 - xs, xs - 47), 0)
    dy = np.maximum(np.maximum(16 - ys, ys - 47), 0)
    far = np.hypot(dx, dy) > 3 * sigma
    assert far.any()
    assert res.composite[far].tobytes() == target[far].tobytes()


def test_soft_mask_range_and_monotone_along_rays():
    res = blend(np.ones((64, 64)), np.zeros((64, 64)), square_mask(), 3.0)
    soft = res.soft_mask
    assert soft.min() >= 0.0 and soft.max() <= 1.0
    row = soft[32, :32]  # ray from outside into the center
    col = soft[:32, 32]
    diag = soft[np.arange(32), np.arange(32)]
    for ray in (row, col, diag):
        assert np.all(np.diff(ray) >= -1e-12)


def test_blend_errors():
    m = square_mask()
    with pytest.raises(ShapeError):
        blend(np.zeros((64, 64)), np.zeros((64, 63)), m)
    with pytest.raises(ShapeError):
        blend(np.zeros((32, 32)), np.zeros((32, 32)), m)


def test_splice_metadata():
    res = blend(np.zeros((64, 64)), np.zeros((64, 64)), square_mask(), 2.0, {"source": "a"})
    meta = res.metadata()
    assert meta["blur_sigma"] == 2.0 and meta["blur_target"] == "mask"
    assert meta["provenance"] == {"source": "a"} and len(meta["mask_vertices"]) == 4


def test_perturb_colors_in_range(rng):
    out = perturb_colors(rng.uniform(size=(8, 8, 3)), rng)
    assert out.shape == (8, 8, 3) and out.min() >= 0 and out.max() <= 1


# PNM

@pytest.mark.parametrize("shape", [(7, 5), (4, 6, 3)])
def test_pnm_round_trip(tmp_path, rng, shape):
    img = rng.integers(0, 256, shape, dtype=np.uint8)
    write_pnm(tmp_path / "x.pnm", img, comment="blinkscope test\nsecond line")
    assert np.array_equal(read_pnm(tmp_path / "x.pnm"), img)


def test_pnm_float_quantization(tmp_path):
    write_pnm(tmp_path / "x.pgm", np.array([[0.0, 0.5, 1.0, 2.0]]))
    assert read_pnm(tmp_path / "x.pgm").tolist() == [[0, 128, 255, 255]]
    assert (tmp_path / "x.pgm").read_bytes()[:2] == b"P5"


def test_pnm_errors():
    with pytest.raises(FormatError, match="offset 0"):
        parse_pnm(b"P2\n1 1\n255\n\x00")
    with pytest.raises(FormatError, match="16 bit|8-bit"):
        parse_pnm(b"P5\n1 1\n65535\n\x00\x00")
    with pytest.raises(FormatError, match="expected 4"):
        parse_pnm(b"P5\n2 2\n255\n\x00")
    with pytest.raises(ShapeError):
        write_pnm("/dev/null", np.zeros((2, 2, 2)))
