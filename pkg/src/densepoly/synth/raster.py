"""Ground-truth rasters for a footprint list, and a seeded corruption model."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from ..frame_field import FrameField, canonical_angle
from .prng import Xoshiro256, normal_array

# decorrelates the corruption stream from the layout stream of the same seed
_NOISE_STREAM = 0x6A09E667F3BCC909


@dataclass(frozen=True)
class GroundTruth:
    polygons: list
    y_int: np.ndarray
    y_edge: np.ndarray
    tang: np.ndarray
    ff_gt: FrameField
    labels: np.ndarray


def pixel_centers_inside(ring, shape):
    """Boolean mask of pixels whose centre ``(col + .5, row + .5)`` is inside ``ring``.

    Even-odd crossing test restricted to the ring's bounding box.
    """
    h, w = shape
    xy = np.asarray(ring, dtype=float)
    c0 = max(int(np.floor(xy[:, 0].min())), 0)
    c1 = min(int(np.ceil(xy[:, 0].max())), w)
    r0 = max(int(np.floor(xy[:, 1].min())), 0)
    r1 = min(int(np.ceil(xy[:, 1].max())), h)
    out = np.zeros(shape, dtype=bool)
    if c1 <= c0 or r1 <= r0:
        return out
    px, py = np.meshgrid(np.arange(c0, c1) + 0.5, np.arange(r0, r1) + 0.5)
    inside = np.zeros(px.shape, dtype=bool)
    xj, yj = xy[-1]
    for xi, yi in xy:
        crosses = (yi > py) != (yj > py)
        with np.errstate(divide="ignore", invalid="ignore"):
            x_at = (xj - xi) * (py - yi) / (yj - yi) + xi
        inside ^= crosses & (px < x_at)
        xj, yj = xi, yi
    out[r0:r1, c0:c1] = inside
    return out


def contour_distance(polygons, shape, reach):
    """Distance from each pixel centre to the nearest contour segment.

    Only pixels within ``reach`` of some segment are evaluated; the rest
    stay at ``inf``. Also returns the unsigned angle of the nearest segment.
    Ties keep the first segment encountered.
    """
    h, w = shape
    dist = np.full(shape, np.inf)
    angle = np.zeros(shape)
    for ring in polygons:
        n = len(ring)
        for k in range(n):
            (ax, ay), (bx, by) = ring[k], ring[(k + 1) % n]
            c0 = max(int(np.floor(min(ax, bx) - reach)), 0)
            c1 = min(int(np.ceil(max(ax, bx) + reach)) + 1, w)
            r0 = max(int(np.floor(min(ay, by) - reach)), 0)
            r1 = min(int(np.ceil(max(ay, by) + reach)) + 1, h)
            if c1 <= c0 or r1 <= r0:
                continue
            px, py = np.meshgrid(np.arange(c0, c1) + 0.5, np.arange(r0, r1) + 0.5)
            dx, dy = bx - ax, by - ay
            t = np.clip(((px - ax) * dx + (py - ay) * dy) / (dx * dx + dy * dy), 0.0, 1.0)
            d = np.hypot(px - (ax + t * dx), py - (ay + t * dy))
            win = dist[r0:r1, c0:c1]
            closer = d < win
            win[closer] = d[closer]
            angle[r0:r1, c0:c1][closer] = canonical_angle(np.arctan2(dy, dx))
    return dist, angle


def rasterize(polygons, cfg):
    """Interior, edge, tangent-angle and frame-field ground truth for a scene."""
    shape = (cfg.height, cfg.width)
    labels = np.zeros(shape, dtype=np.int32)
    for k, ring in enumerate(polygons, start=1):
        labels[(labels == 0) & pixel_centers_inside(ring, shape)] = k
    half = cfg.edge_width / 2.0
    dist, angle = contour_distance(polygons, shape, half + 1.0)
    y_edge = (dist <= half).astype(float)
    tang = np.where(y_edge > 0, angle, 0.0)
    # frame {t, t + pi/2}: k1 = 0, k0 = -exp(4it)
    k0_edge = -np.exp(4j * tang)
    if y_edge.any():
        _, (ri, ci) = ndimage.distance_transform_edt(y_edge == 0, return_indices=True)
        k0 = k0_edge[ri, ci]
    else:
        k0 = np.full(shape, -1.0 + 0j)
    return GroundTruth(
        polygons=[list(map(tuple, r)) for r in polygons],
        y_int=(labels > 0).astype(float),
        y_edge=y_edge,
        tang=tang,
        ff_gt=FrameField(k0, np.zeros(shape, dtype=complex)),
        labels=labels,
    )


def corrupt(gt, cfg):
    """Blurred, noisy copies of the ground-truth maps and frame field.

    Both probability maps get a Gaussian blur of ``cfg.blur_radius`` then
    additive N(0, noise_sigma**2) noise and are clamped to [0, 1]. The frame
    field's real and imaginary parts each get the same noise level.
    """
    f_int = gt.y_int.astype(float)
    f_edge = gt.y_edge.astype(float)
    k0 = gt.ff_gt.k0.copy()
    k1 = gt.ff_gt.k1.copy()
    if cfg.blur_radius > 0:
        f_int = ndimage.gaussian_filter(f_int, cfg.blur_radius)
        f_edge = ndimage.gaussian_filter(f_edge, cfg.blur_radius)
    if cfg.noise_sigma > 0:
        rng = Xoshiro256(cfg.seed ^ _NOISE_STREAM)
        noise = cfg.noise_sigma * normal_array(rng, (6,) + f_int.shape)
        f_int = np.clip(f_int + noise[0], 0.0, 1.0)
        f_edge = np.clip(f_edge + noise[1], 0.0, 1.0)
        k0 = k0 + noise[2] + 1j * noise[3]
        k1 = k1 + noise[4] + 1j * noise[5]
    return f_int, f_edge, FrameField(k0, k1)
