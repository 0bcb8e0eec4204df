"""Face extraction from a planar contour graph, scoring and filtering."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import shapely
from shapely.geometry import Polygon

from ..synth.raster import pixel_centers_inside
from ..synth.scene import ring_area


class PlanarityError(ValueError):
    """Two graph segments cross away from a shared endpoint."""

    def __init__(self, seg_a, seg_b):
        self.segments = (seg_a, seg_b)
        super().__init__(f"segments {seg_a} and {seg_b} cross")


@dataclass(frozen=True)
class ScoredPolygon:
    ring: tuple
    score: float

    def __post_init__(self):
        ring = tuple((float(x), float(y)) for x, y in self.ring)
        if len(set(ring)) < 3:
            raise ValueError("ring needs at least 3 distinct vertices")
        if ring_area(ring) <= 0:
            raise ValueError("ring must be counter-clockwise with positive area")
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score must lie in [0, 1], got {self.score}")
        object.__setattr__(self, "ring", ring)

    @property
    def area(self):
        return ring_area(self.ring)


def find_crossings(nodes, edges):
    """Pairs ``(a, b)``, ``a < b``, of edge indices that meet other than at one shared endpoint."""
    nodes = np.asarray(nodes, dtype=float)
    edges = np.asarray(edges, dtype=int).reshape(-1, 2)
    if len(edges) < 2:
        return np.zeros((0, 2), dtype=int)
    lines = shapely.linestrings(nodes[edges])
    tree = shapely.STRtree(lines)
    a, b = tree.query(lines, predicate="intersects")
    keep = a < b
    a, b = a[keep], b[keep]
    ea, eb = edges[a], edges[b]
    # shared endpoint: allowed unless the two segments run on top of each other
    s00 = ea[:, 0] == eb[:, 0]
    s01 = ea[:, 0] == eb[:, 1]
    s10 = ea[:, 1] == eb[:, 0]
    s11 = ea[:, 1] == eb[:, 1]
    n_shared = s00.astype(int) + s01 + s10 + s11
    pivot = np.where(s00 | s01, ea[:, 0], ea[:, 1])
    other_a = np.where(s00 | s01, ea[:, 1], ea[:, 0])
    other_b = np.where(s00 | s10, eb[:, 1], eb[:, 0])
    da = nodes[other_a] - nodes[pivot]
    db = nodes[other_b] - nodes[pivot]
    cross = da[:, 0] * db[:, 1] - da[:, 1] * db[:, 0]
    dot = np.einsum("ij,ij->i", da, db)
    scale = np.hypot(*da.T) * np.hypot(*db.T)
    overlap = (np.abs(cross) <= 1e-12 * scale) & (dot > 0)
    bad = (n_shared == 0) | ((n_shared == 1) & overlap) | (n_shared == 2)
    out = np.stack([a[bad], b[bad]], axis=1)
    return out[np.lexsort((out[:, 1], out[:, 0]))] if len(out) else out


def check_planar(nodes, edges):
    """Raise :class:`PlanarityError` for the first pair of edges that cross."""
    edges = np.asarray(edges, dtype=int).reshape(-1, 2)
    bad = find_crossings(nodes, edges)
    if len(bad):
        a, b = bad[0]
        raise PlanarityError(tuple(int(v) for v in edges[a]), tuple(int(v) for v in edges[b]))


def face_cycles(nodes, edges):
    """Node cycles of every face of a plane graph, by leftmost-turn walks.

    Bounded faces come out with positive shoelace area; each component's
    outer face comes out negative.
    """
    nodes = np.asarray(nodes, dtype=float)
    adj = [[] for _ in range(len(nodes))]
    for i, j in np.asarray(edges, dtype=int).reshape(-1, 2):
        adj[i].append(int(j))
        adj[j].append(int(i))
    # neighbours sorted by angle, so "next clockwise" is a step back in the list
    order = []
    pos = []
    for v, nb in enumerate(adj):
        ang = [math.atan2(nodes[u, 1] - nodes[v, 1], nodes[u, 0] - nodes[v, 0]) for u in nb]
        srt = [u for _, u in sorted(zip(ang, nb))]
        order.append(srt)
        pos.append({u: k for k, u in enumerate(srt)})
    seen = set()
    faces = []
    for u in range(len(nodes)):
        for v in order[u]:
            if (u, v) in seen:
                continue
            cyc = []
            a, b = u, v
            while (a, b) not in seen:
                seen.add((a, b))
                cyc.append(a)
                nb = order[b]
                c = nb[(pos[b][a] - 1) % len(nb)]
                a, b = b, c
            faces.append(cyc)
    return faces


def _score(ring, f_int):
    mask = pixel_centers_inside(ring, f_int.shape)
    if mask.any():
        return float(np.clip(f_int[mask].mean(), 0.0, 1.0))
    # no pixel centre inside: fall back to the pixel under the centroid
    c = Polygon(ring).centroid
    r = min(max(int(c.y), 0), f_int.shape[0] - 1)
    col = min(max(int(c.x), 0), f_int.shape[1] - 1)
    return float(np.clip(f_int[r, col], 0.0, 1.0))


def extract_polygons(g, f_int):
    """Scored bounded faces of the plane graph ``g``.

    The outer face of each component is discarded, as is any face whose
    mean interior probability is 0. Rings are counter-clockwise.
    """
    if len(g.edges) == 0:
        return []
    check_planar(g.nodes, g.edges)
    f_int = np.asarray(f_int, dtype=float)
    out = []
    for cyc in face_cycles(g.nodes, g.edges):
        ring = [tuple(g.nodes[k]) for k in cyc]
        if len(set(ring)) < 3 or ring_area(ring) <= 0:
            continue
        if not Polygon(ring).is_valid:
            continue
        score = _score(ring, f_int)
        if score > 0:
            out.append(ScoredPolygon(ring, score))
    return out


def filter_polygons(polys, min_prob=0.5, min_area=4.0):
    """Polygons with ``score >= min_prob`` and ``area >= min_area``, order kept."""
    if not 0.0 <= min_prob <= 1.0:
        raise ValueError(f"min_prob must lie in [0, 1], got {min_prob}")
    if min_area < 0:
        raise ValueError(f"min_area must be >= 0, got {min_area}")
    return [p for p in polys if p.score >= min_prob and p.area >= min_area]
