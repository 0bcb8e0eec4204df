import numpy as np
import pytest
from scipy import ndimage
from shapely.geometry import MultiLineString, Point

from densepoly.frame_field import FrameField
from densepoly.polygonize import AcmEnergy, AcmParams, SkeletonGraph, acm_refine, skeletonize
from densepoly.polygonize.acm import CubicSampler
from densepoly.synth import SceneConfig, generate_scene, rasterize

CROSS = lambda shape: FrameField(np.full(shape, -1 + 0j), np.zeros(shape, complex))


def ridge(shape, y0, width=2.0):
    rows = np.arange(shape[0]) + 0.5
    return np.tile(np.exp(-((rows - y0) ** 2) / (2 * width**2))[:, None], (1, shape[1]))


def test_params_validation():
    with pytest.raises(ValueError):
        AcmParams(lambda_data=0, lambda_ff=0, lambda_internal=0)
    with pytest.raises(ValueError):
        AcmParams(lambda_ff=-1)
    with pytest.raises(ValueError):
        AcmParams(step0=0)
    with pytest.raises(ValueError):
        AcmParams(max_iters=-1)


def test_max_iters_zero_is_identity():
    shape = (20, 20)
    g = SkeletonGraph([[3.5, 4.5], [8.2, 4.5], [8.2, 9.0]], [[0, 1], [1, 2]])
    out = acm_refine(g, np.zeros(shape), ridge(shape, 10), CROSS(shape), AcmParams(max_iters=0))
    assert np.array_equal(out.nodes, g.nodes) and np.array_equal(out.edges, g.edges)


def test_node_descends_onto_ridge():
    shape = (24, 24)
    f_edge = ridge(shape, 10.5)
    xs = np.arange(4, 20) + 0.5
    g = SkeletonGraph(np.stack([xs, np.full(len(xs), 12.5)], 1), [[k, k + 1] for k in range(len(xs) - 1)])
    p = AcmParams(lambda_ff=0, lambda_internal=0, tol=1e-6, max_iters=500)
    out = acm_refine(g, np.zeros(shape), f_edge, CROSS(shape), p)
    assert np.max(np.abs(out.nodes[:, 1] - 10.5)) < 1e-3
    assert np.allclose(out.nodes[:, 0], xs)


def test_energy_trace_is_monotone():
    cfg = SceneConfig(seed=3, width=96, height=96)
    polys = generate_scene(cfg)
    gt = rasterize(polys, cfg)
    g = skeletonize(gt.y_edge > 0.5)
    trace = []
    acm_refine(g, gt.y_int, ndimage.gaussian_filter(gt.y_edge, 0.5), gt.ff_gt, AcmParams(), trace)
    assert len(trace) > 2
    assert np.all(np.diff(trace) <= 0)
    assert trace[-1] < trace[0]


def test_clean_scene_nodes_land_on_contour():
    cfg = SceneConfig(seed=4, width=128, height=128)
    polys = generate_scene(cfg)
    gt = rasterize(polys, cfg)
    g = skeletonize(gt.y_edge > 0.5)
    out = acm_refine(g, gt.y_int, ndimage.gaussian_filter(gt.y_edge, 0.5), gt.ff_gt)
    lines = MultiLineString([list(r) + [r[0]] for r in polys])
    err = max(lines.distance(Point(p)) for p in out.nodes)
    assert err < 0.5


def test_nan_energy_names_node():
    shape = (16, 16)
    f_edge = ridge(shape, 8.0)
    f_edge[4:8, 4:8] = np.nan
    g = SkeletonGraph([[5.5, 5.5], [12.5, 12.5]], [[0, 1]])
    with pytest.raises(FloatingPointError, match="node 0"):
        acm_refine(g, np.zeros(shape), f_edge, CROSS(shape))


def test_rejects_mismatched_rasters_and_out_of_bounds():
    shape = (16, 16)
    g = SkeletonGraph([[5.5, 5.5], [12.5, 12.5]], [[0, 1]])
    with pytest.raises(ValueError):
        acm_refine(g, np.zeros((8, 8)), ridge(shape, 8), CROSS(shape))
    far = SkeletonGraph([[5.5, 5.5], [40.0, 5.0]], [[0, 1]])
    with pytest.raises(ValueError):
        acm_refine(far, np.zeros(shape), ridge(shape, 8), CROSS(shape))


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(0)
    shape = (20, 20)
    f_edge = ndimage.gaussian_filter(rng.random(shape), 1.5)
    ff = FrameField(ndimage.gaussian_filter(rng.normal(size=shape), 2) + 1j * rng.normal(size=shape) * 0.1,
                    ndimage.gaussian_filter(rng.normal(size=shape), 2) + 0j)
    g = SkeletonGraph(rng.uniform(4, 16, (6, 2)), [[0, 1], [1, 2], [2, 0], [2, 3], [3, 4], [4, 5]])
    energy = AcmEnergy(g, f_edge, ff, AcmParams(lambda_ff=0.3, lambda_internal=0.05))
    _, _, grad = energy.terms(g.nodes)
    h = 1e-6
    for k in range(len(g)):
        for d in range(2):
            X = g.nodes.copy()
            X[k, d] += h
            up = energy.total(X)
            X[k, d] -= 2 * h
            down = energy.total(X)
            assert (up - down) / (2 * h) == pytest.approx(grad[k, d], rel=1e-5, abs=1e-7)


def test_cubic_sampler_matches_map_coordinates():
    rng = np.random.default_rng(1)
    plane = rng.random((12, 15))
    s = CubicSampler(plane)
    x = rng.uniform(0.5, 14.5, 50)
    y = rng.uniform(0.5, 11.5, 50)
    v, _, _ = s(x, y)
    ref = ndimage.map_coordinates(plane, [y - 0.5, x - 0.5], order=3, mode="mirror")
    assert np.allclose(v, ref, atol=1e-12)
