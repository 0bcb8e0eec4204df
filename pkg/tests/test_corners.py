import math

import numpy as np
import pytest

from densepoly.frame_field import FrameField
from densepoly.polygonize import detect_corners, rdp, split_and_simplify
from densepoly.synth import SceneConfig, rasterize


def cross_field(shape=(40, 40)):
    return FrameField(np.full(shape, -1 + 0j), np.zeros(shape, complex))


def densify(ring, step=1.0):
    """Closed ring resampled at about ``step`` spacing, original vertices kept."""
    out = []
    n = len(ring)
    for k in range(n):
        a, b = np.asarray(ring[k], float), np.asarray(ring[(k + 1) % n], float)
        m = max(1, int(round(np.hypot(*(b - a)) / step)))
        out += [tuple(a + (b - a) * t / m) for t in range(m)]
    return out


def test_axis_square_has_four_corners():
    ring = [(5, 5), (25, 5), (25, 25), (5, 25)]
    path = densify(ring)
    corners = detect_corners(path, cross_field(), closed=True)
    assert len(corners) == 4
    assert {path[c] for c in corners} == {tuple(map(float, v)) for v in ring}


def test_straight_path_has_no_corners():
    path = [(x + 0.5, 10.5) for x in range(3, 30)]
    assert detect_corners(path, cross_field()) == set()


def test_l_shape_with_ground_truth_field_has_six_corners():
    ring = [(6, 6), (30, 6), (30, 16), (18, 16), (18, 32), (6, 32)]
    gt = rasterize([ring], SceneConfig(width=40, height=40))
    path = densify(ring)
    corners = detect_corners(path, gt.ff_gt, closed=True)
    assert len(corners) == 6
    assert {path[c] for c in corners} == {tuple(map(float, v)) for v in ring}


def test_degenerate_frame_uses_angle_threshold():
    shape = (30, 30)
    line = FrameField(np.ones(shape, complex), np.full(shape, -2 + 0j))
    bend = [(5.0, 10.0), (10.0, 10.0), (15.0, 10.0), (20.0, 15.0)]
    # 45 degree turn at node 2 exceeds pi/8; node 1 is straight
    assert detect_corners(bend, line) == {2}
    assert detect_corners(bend, line, angle_thresh=math.pi / 3) == set()


def test_detect_corners_needs_three_nodes():
    with pytest.raises(ValueError):
        detect_corners([(1, 1), (2, 2)], cross_field())


def test_rdp_straight_line():
    pts = np.stack([np.linspace(0, 99, 100), np.linspace(3, 50, 100)], 1)
    out = rdp(pts, 0.1)
    assert len(out) == 2
    assert np.array_equal(out[0], pts[0]) and np.array_equal(out[-1], pts[-1])


def test_rdp_zero_tolerance_is_identity():
    rng = np.random.default_rng(0)
    pts = rng.random((30, 2))
    assert np.array_equal(rdp(pts, 0.0), pts)
    pieces = split_and_simplify(pts, {10}, 0.0)
    assert np.array_equal(np.concatenate([pieces[0], pieces[1][1:]]), pts)


def test_rdp_against_brute_force_tolerance():
    # every dropped point lies within tol of the kept polyline
    rng = np.random.default_rng(1)
    pts = np.cumsum(rng.normal(size=(60, 2)), axis=0)
    out = rdp(pts, 1.5)
    from shapely.geometry import LineString, Point
    line = LineString(out)
    assert max(line.distance(Point(p)) for p in pts) <= 1.5 + 1e-12


def test_noisy_square_simplifies_to_four_vertices():
    rng = np.random.default_rng(2)
    ring = [(5, 5), (25, 5), (25, 25), (5, 25)]
    path = np.array(densify(ring))
    corners = {0, 20, 40, 60}
    jitter = rng.uniform(-0.3, 0.3, path.shape)
    jitter[sorted(corners)] = 0
    pieces = split_and_simplify(path + jitter, corners, 1.0, closed=True)
    verts = {tuple(v) for piece in pieces for v in piece}
    assert len(pieces) == 4 and len(verts) == 4
    assert verts == {tuple(map(float, v)) for v in ring}


def test_closed_path_without_corners_is_cut_in_two():
    t = np.linspace(0, 2 * np.pi, 40, endpoint=False)
    circle = np.stack([10 + 5 * np.cos(t), 10 + 5 * np.sin(t)], 1)
    pieces = split_and_simplify(circle, set(), 0.2, closed=True)
    assert len(pieces) == 2
    assert np.array_equal(pieces[0][-1], pieces[1][0])


def test_split_rejects_bad_corner():
    with pytest.raises(ValueError):
        split_and_simplify(np.zeros((5, 2)), {7}, 1.0)
