"""Seeded layouts of dense building footprints.

The canvas is cut into a jittered grid of regions. Each region gets its own
small rotation and is filled, in its rotated frame, with rows of rectangles
and L-shapes. Neighbours in a row either leave a gap or fuse an exact common
wall. Rotated vertices are rounded to the integer pixel-corner lattice, so
every footprint is exactly representable at raster resolution.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import shapely
from shapely.geometry import Polygon, box

from .prng import Xoshiro256


DENSITY_SLACK = 0.1


class DensityError(RuntimeError):
    pass


@dataclass(frozen=True)
class SceneConfig:
    seed: int = 0
    width: int = 256
    height: int = 256
    target_density: float = 0.45
    min_size: int = 6
    max_size: int = 30
    rotation: float = math.pi / 12
    shared_wall_prob: float = 0.3
    l_shape_prob: float = 0.2
    edge_width: float = 2.0
    min_gap: int = 5
    margin: int = 3
    noise_sigma: float = 0.0
    blur_radius: float = 0.0
    max_attempts: int = 20

    def __post_init__(self):
        if not 0.0 < self.target_density < 1.0:
            raise ValueError(f"target_density must lie in (0, 1), got {self.target_density}")
        if not 0 < self.min_size <= self.max_size:
            raise ValueError(f"need 0 < min_size <= max_size, got {self.min_size}, {self.max_size}")
        if self.edge_width < 1:
            raise ValueError(f"edge_width must be >= 1, got {self.edge_width}")
        if self.width < 2 * self.margin + self.min_size or self.height < 2 * self.margin + self.min_size:
            raise ValueError("canvas too small for a single building")
        if self.noise_sigma < 0 or self.blur_radius < 0:
            raise ValueError("noise_sigma and blur_radius must be non-negative")
        if not 0.0 <= self.shared_wall_prob <= 1.0 or not 0.0 <= self.l_shape_prob <= 1.0:
            raise ValueError("probabilities must lie in [0, 1]")


def ring_area(ring):
    """Signed shoelace area; positive for counter-clockwise rings."""
    xy = np.asarray(ring, dtype=float)
    x, y = xy[:, 0], xy[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _cuts(rng, lo, hi, n):
    """Split [lo, hi] into n jittered pieces."""
    step = (hi - lo) / n
    inner = [lo + step * k + rng.uniform(-0.2, 0.2) * step for k in range(1, n)]
    return [lo] + inner + [hi]


def _building(rng, cfg, u0, top, w, h):
    """Local-frame outline of a rectangle or an L-shape notched at the bottom."""
    lo_limit = cfg.min_size
    if w >= 2 * lo_limit and h >= 2 * lo_limit and rng.random() < cfg.l_shape_prob:
        cw = rng.randint(lo_limit // 2 + 2, w - lo_limit)
        ch = rng.randint(lo_limit // 2 + 2, h - lo_limit)
        u1, b = u0 + w, top + h
        if rng.random() < 0.5:  # notch at bottom-right
            ring = [(u0, top), (u1, top), (u1, b - ch), (u1 - cw, b - ch), (u1 - cw, b), (u0, b)]
            return ring
        ring = [(u0, top), (u1, top), (u1, b), (u0 + cw, b), (u0 + cw, b - ch), (u0, b - ch)]
        return ring
    return [(u0, top), (u0 + w, top), (u0 + w, top + h), (u0, top + h)]


def _node_rings(rings):
    """Insert every vertex that lies inside another ring's edge into that edge.

    Works in exact (integer, axis-aligned) local coordinates, so abutting
    footprints end up with identical vertex sequences along common walls.
    """
    out = []
    for a, ring in enumerate(rings):
        extra = {k: [] for k in range(len(ring))}
        xs = [p[0] for p in ring]
        ys = [p[1] for p in ring]
        lo_x, hi_x, lo_y, hi_y = min(xs), max(xs), min(ys), max(ys)
        for b, other in enumerate(rings):
            if a == b:
                continue
            for q in other:
                if not (lo_x <= q[0] <= hi_x and lo_y <= q[1] <= hi_y):
                    continue
                for k in range(len(ring)):
                    p0, p1 = ring[k], ring[(k + 1) % len(ring)]
                    if p0[0] == p1[0] == q[0] and min(p0[1], p1[1]) < q[1] < max(p0[1], p1[1]):
                        extra[k].append(q)
                    elif p0[1] == p1[1] == q[1] and min(p0[0], p1[0]) < q[0] < max(p0[0], p1[0]):
                        extra[k].append(q)
        new = []
        for k, p0 in enumerate(ring):
            new.append(p0)
            p1 = ring[(k + 1) % len(ring)]
            pts = sorted(set(extra[k]), key=lambda q: abs(q[0] - p0[0]) + abs(q[1] - p0[1]))
            new.extend(pts)
        out.append(new)
    return out


def _chord(corners, v):
    """Horizontal extent ``(left, right)`` of a convex polygon at height ``v``."""
    us = []
    n = len(corners)
    for k in range(n):
        (u0, v0), (u1, v1) = corners[k], corners[(k + 1) % n]
        if v0 == v1:
            if v == v0:
                us.extend([u0, u1])
            continue
        if min(v0, v1) <= v <= max(v0, v1):
            us.append(u0 + (v - v0) * (u1 - u0) / (v1 - v0))
    return (min(us), max(us)) if us else (0.0, 0.0)


def _strip_extent(corners, top, bottom):
    """u-interval in which the whole strip [top, bottom] lies inside the polygon."""
    vs = [top, bottom] + [v for _, v in corners if top < v < bottom]
    chords = [_chord(corners, v) for v in vs]
    return max(c[0] for c in chords), min(c[1] for c in chords)


def _fill_region(rng, cfg, region):
    """Rows of buildings in the rotated frame of one region (canvas coords)."""
    x0, y0, x1, y1 = region
    cx, cy = (x0 + x1) // 2, (y0 + y1) // 2
    theta = rng.uniform(-cfg.rotation, cfg.rotation)
    c, s = math.cos(theta), math.sin(theta)
    # region shrunk by half a gap plus a pixel of snapping slack, in local coordinates
    inset = cfg.min_gap / 2.0 + 0.75
    box_pts = [(x0 + inset, y0 + inset), (x1 - inset, y0 + inset), (x1 - inset, y1 - inset), (x0 + inset, y1 - inset)]
    corners = [(c * (x - cx) + s * (y - cy), -s * (x - cx) + c * (y - cy)) for x, y in box_pts]
    vs = sorted(v for _, v in corners)
    # rows start where the region's first full-width chord begins, minus a short row
    v_lo = max(math.ceil(vs[0]), math.floor(vs[1]) - cfg.min_size)
    v_hi = math.floor(vs[3])

    rings = []
    top = v_lo
    while True:
        row_h = rng.randint(cfg.min_size, cfg.max_size)
        if top + row_h > v_hi:
            row_h = v_hi - top
        if row_h < cfg.min_size:
            break
        abut_next = rng.random() < cfg.shared_wall_prob
        left, right = _strip_extent(corners, top, top + row_h)
        u = math.ceil(left) + rng.randint(0, 1)
        u_end = math.floor(right)
        while True:
            w = rng.randint(cfg.min_size, cfg.max_size)
            if u + w > u_end:
                w = u_end - u
            if w < cfg.min_size:
                break
            h = row_h if abut_next else rng.randint(max(cfg.min_size, row_h - 2), row_h)
            ring = _building(rng, cfg, u, top, w, h)
            rings.append(ring)
            u += w
            if rng.random() >= cfg.shared_wall_prob:
                u += rng.randint(cfg.min_gap, cfg.min_gap + 1)
        top += row_h
        if not abut_next:
            top += rng.randint(cfg.min_gap, cfg.min_gap + 1)

    def to_canvas(pt):
        u, v = pt
        return (round(cx + c * u - s * v), round(cy + s * u + c * v))

    inner = box(x0 + cfg.min_gap / 2.0, y0 + cfg.min_gap / 2.0, x1 - cfg.min_gap / 2.0, y1 - cfg.min_gap / 2.0)
    out = []
    for ring in _node_rings(rings):
        ring = [to_canvas(p) for p in ring]
        ring = [p for k, p in enumerate(ring) if p != ring[k - 1]]
        if len(ring) < 3:
            continue
        poly = Polygon(ring)
        if not poly.is_valid or poly.area <= 0 or not inner.contains(poly):
            continue
        out.append(ring)
    return out


def _layout(rng, cfg):
    m = cfg.margin
    nx = max(1, round((cfg.width - 2 * m) / rng.uniform(100, 140)))
    ny = max(1, round((cfg.height - 2 * m) / rng.uniform(100, 140)))
    xs = [round(x) for x in _cuts(rng, m, cfg.width - m, nx)]
    ys = [round(y) for y in _cuts(rng, m, cfg.height - m, ny)]
    rings = []
    for j in range(ny):
        for i in range(nx):
            rings.extend(_fill_region(rng, cfg, (xs[i], ys[j], xs[i + 1], ys[j + 1])))
    return _resolve_conflicts(rings, cfg)


def _resolve_conflicts(rings, cfg):
    """Drop footprints that overlap or crowd an earlier one without sharing a wall."""
    polys = [Polygon(r) for r in rings]
    tree = shapely.STRtree(polys)
    keep = [True] * len(rings)
    for a in range(len(polys)):
        if not keep[a]:
            continue
        for b in tree.query(polys[a].buffer(cfg.min_gap)):
            b = int(b)
            if b <= a or not keep[b]:
                continue
            if polys[a].intersection(polys[b]).area > 1e-9:
                keep[b] = False
                continue
            if _shares_wall(rings[a], rings[b]):
                continue
            if polys[a].distance(polys[b]) < cfg.min_gap - 2:
                keep[b] = False
    return [r for r, k in zip(rings, keep) if k]


def _segments(ring):
    return {frozenset((ring[k], ring[(k + 1) % len(ring)])) for k in range(len(ring))}


def _shares_wall(r1, r2):
    return bool(_segments(r1) & _segments(r2))


def _trim(rng, rings, cfg):
    total = cfg.width * cfg.height
    areas = [ring_area(r) for r in rings]
    covered = sum(areas)
    order = rng.shuffle(list(range(len(rings))))
    drop = set()
    for k in order:
        if (covered - areas[k]) / total >= cfg.target_density:
            covered -= areas[k]
            drop.add(k)
    return [r for k, r in enumerate(rings) if k not in drop], covered / total


def generate_scene(cfg):
    """Building footprints as lists of integer ``(x, y)`` vertices, CCW.

    Layouts are drawn until one covers at least ``target_density`` and is then
    thinned down to it. If none of ``cfg.max_attempts`` layouts gets there,
    the densest is used as long as it is within ``DENSITY_SLACK`` of the
    target; otherwise :class:`DensityError` is raised.
    """
    rng = Xoshiro256(cfg.seed)
    best, best_cov = None, -1.0
    for _ in range(cfg.max_attempts):
        rings = _layout(rng, cfg)
        covered = sum(ring_area(r) for r in rings) / (cfg.width * cfg.height)
        if rings and covered >= cfg.target_density:
            best = _trim(rng, rings, cfg)[0]
            break
        if rings and covered > best_cov:
            best, best_cov = rings, covered
    else:
        if best is None or best_cov < cfg.target_density - DENSITY_SLACK:
            raise DensityError(
                f"could not reach density {cfg.target_density} (best {max(best_cov, 0):.3f}) "
                f"in {cfg.max_attempts} attempts")
    return [[(float(x), float(y)) for x, y in r] for r in best]
