"""Edge map to scored polygons: skeleton, ACM, corners, simplification, faces."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .acm import AcmParams, acm_refine
from .corners import detect_corners, split_and_simplify
from .faces import PlanarityError, check_planar, extract_polygons, filter_polygons, find_crossings
from .skeleton import SkeletonGraph, skeletonize


@dataclass(frozen=True)
class PolygonizeParams:
    edge_thresh: float = 0.5
    min_prob: float = 0.5
    min_area: float = 4.0
    tol: float = 1.0
    angle_thresh: float = math.pi / 8
    corner_window: int = 1
    data_sigma: float = 0.5

    def __post_init__(self):
        if not 0.0 <= self.edge_thresh <= 1.0:
            raise ValueError(f"edge_thresh must lie in [0, 1], got {self.edge_thresh}")
        if not 0.0 <= self.min_prob <= 1.0:
            raise ValueError(f"min_prob must lie in [0, 1], got {self.min_prob}")
        if self.min_area < 0 or self.tol < 0 or self.data_sigma < 0:
            raise ValueError("min_area, tol and data_sigma must be >= 0")
        if not 0.0 < self.angle_thresh < math.pi / 2:
            raise ValueError(f"angle_thresh must lie in (0, pi/2), got {self.angle_thresh}")
        if self.corner_window < 1:
            raise ValueError(f"corner_window must be >= 1, got {self.corner_window}")


@dataclass(frozen=True)
class PipelineParams:
    acm: AcmParams = field(default_factory=AcmParams)
    polygonize: PolygonizeParams = field(default_factory=PolygonizeParams)


def bridges(n, edges):
    """Boolean mask of the bridge edges of an undirected graph (iterative Tarjan)."""
    edges = np.asarray(edges, dtype=int).reshape(-1, 2)
    adj = [[] for _ in range(n)]
    for k, (i, j) in enumerate(edges):
        adj[i].append((j, k))
        adj[j].append((i, k))
    disc = [-1] * n
    low = [0] * n
    out = np.zeros(len(edges), dtype=bool)
    t = 0
    for root in range(n):
        if disc[root] >= 0:
            continue
        disc[root] = low[root] = t
        t += 1
        stack = [(root, -1, iter(adj[root]))]
        while stack:
            v, via, it = stack[-1]
            for u, k in it:
                if k == via:
                    continue
                if disc[u] < 0:
                    disc[u] = low[u] = t
                    t += 1
                    stack.append((u, k, iter(adj[u])))
                    break
                low[v] = min(low[v], disc[u])
            else:
                stack.pop()
                if stack:
                    parent = stack[-1][0]
                    low[parent] = min(low[parent], low[v])
                    if low[v] > disc[parent]:
                        out[via] = True
    return out


def prune(g):
    """Drop every node and edge that cannot bound a face.

    Bridges are cut, then dangling chains are peeled off until each
    remaining edge lies on a cycle.
    """
    n = len(g.nodes)
    e = g.edges[~bridges(n, g.edges)] if len(g.edges) else g.edges
    while len(e):
        deg = np.bincount(e.ravel(), minlength=n)
        leaf = deg == 1
        if not leaf.any():
            break
        e = e[~(leaf[e[:, 0]] | leaf[e[:, 1]])]
    keep = np.zeros(n, dtype=bool)
    keep[e.ravel()] = True
    remap = np.cumsum(keep) - 1
    return SkeletonGraph(g.nodes[keep], remap[e])


def chains(g):
    """Split a graph into node paths between junctions, plus junction-free cycles.

    Returns ``(paths, loops)``; a path starts and ends at nodes of degree
    other than 2, a loop lists its nodes once, without repeating the first.
    """
    adj = g.neighbors()
    deg = np.array([len(a) for a in adj])
    used = set()
    paths = []
    for s in np.flatnonzero(deg != 2):
        for nb in adj[s]:
            if (s, nb) in used:
                continue
            path = [int(s)]
            a, b = int(s), nb
            while True:
                used.add((a, b))
                used.add((b, a))
                path.append(b)
                if deg[b] != 2:
                    break
                c = adj[b][0] if adj[b][0] != a else adj[b][1]
                a, b = b, c
            paths.append(path)
    loops = []
    on_path = np.zeros(len(adj), dtype=bool)
    for p in paths:
        on_path[p] = True
    for s in np.flatnonzero(~on_path & (deg == 2)):
        if on_path[s]:
            continue
        loop = [int(s)]
        on_path[s] = True
        a, b = int(s), adj[s][0]
        while b != s:
            loop.append(b)
            on_path[b] = True
            c = adj[b][0] if adj[b][0] != a else adj[b][1]
            a, b = b, c
        loops.append(loop)
    return paths, loops


def _simplify_chain(X, chain, ff, pp, closed, tol):
    pts = X[chain]
    if len(pts) < 3:
        return [pts]
    corners = detect_corners(pts, ff, pp.angle_thresh, closed=closed, window=pp.corner_window)
    return split_and_simplify(pts, corners, tol, closed=closed)


def _assemble(pieces):
    """Plane graph from polylines, merging vertices with identical coordinates."""
    index = {}
    nodes = []
    edges = set()
    for piece in pieces:
        ids = []
        for x, y in piece:
            key = (float(x), float(y))
            if key not in index:
                index[key] = len(nodes)
                nodes.append(key)
            ids.append(index[key])
        for i, j in zip(ids[:-1], ids[1:]):
            if i != j:
                edges.add((min(i, j), max(i, j)))
    return SkeletonGraph(np.array(nodes, dtype=float).reshape(-1, 2), np.array(sorted(edges), dtype=int).reshape(-1, 2))


def simplify_graph(g, ff, pp):
    """Corner-split, RDP-simplified plane graph of ``g``.

    Each chain is simplified once, so a wall shared by two faces keeps the
    same vertices in both. Chains whose simplification breaks planarity are
    put back unsimplified.
    """
    paths, loops = chains(g)
    groups = [(p, False) for p in paths] + [(lp, True) for lp in loops]
    simplified = [_simplify_chain(g.nodes, c, ff, pp, closed, pp.tol) for c, closed in groups]
    for _ in range(len(groups) + 1):
        out = _assemble([piece for pieces in simplified for piece in pieces])
        try:
            check_planar(out.nodes, out.edges)
            return out
        except PlanarityError as err:
            bad = {tuple(map(tuple, out.nodes[list(seg)])) for seg in err.segments}
            hit = False
            for k, pieces in enumerate(simplified):
                segs = {(tuple(p[i]), tuple(p[i + 1])) for p in pieces for i in range(len(p) - 1)}
                segs |= {(b, a) for a, b in segs}
                if segs & bad:
                    raw = g.nodes[groups[k][0]]
                    simplified[k] = [np.concatenate([raw, raw[:1]])] if groups[k][1] else [raw]
                    hit = True
            if not hit:
                raise
    raise RuntimeError("simplification did not converge to a plane graph")


def merge_nodes(g, pairs):
    """Merge each ``(i, j)`` node pair to its midpoint, then drop loops and duplicates.

    Pairs must be disjoint.
    """
    nodes = g.nodes.copy()
    target = np.arange(len(nodes))
    for i, j in pairs:
        nodes[i] = (nodes[i] + nodes[j]) / 2.0
        target[j] = i
    e = target[g.edges]
    e = e[e[:, 0] != e[:, 1]]
    keep = target == np.arange(len(nodes))
    remap = np.cumsum(keep) - 1
    return SkeletonGraph(nodes[keep], remap[e])


def untangle(g, max_rounds=100):
    """Merge crossing segments until the graph is a plane graph.

    ACM can pull two nearby chains onto each other. For each crossing the
    closest pair of endpoints is merged, which turns it into a junction.
    """
    for _ in range(max_rounds):
        bad = find_crossings(g.nodes, g.edges)
        if len(bad) == 0:
            return g
        touched = set()
        pairs = []
        for a, b in bad:
            (i0, i1), (j0, j1) = g.edges[a], g.edges[b]
            if {i0, i1, j0, j1} & touched:
                continue
            cand = [(p, q) for p in (i0, i1) for q in (j0, j1) if p != q]
            if not cand:
                continue
            p, q = min(cand, key=lambda c: (float(np.hypot(*(g.nodes[c[0]] - g.nodes[c[1]]))), c))
            pairs.append((min(p, q), max(p, q)))
            touched |= {i0, i1, j0, j1}
        g = prune(merge_nodes(g, pairs))
    check_planar(g.nodes, g.edges)
    return g


def polygonize(f_int, f_edge, ff, params=None):
    """Scored building polygons from interior, edge and frame-field rasters.

    Deterministic: the output depends only on the inputs and ``params``.
    Polygons are ordered by their lowest-then-leftmost vertex.
    """
    params = PipelineParams() if params is None else params
    pp = params.polygonize
    f_int = np.asarray(f_int, dtype=float)
    f_edge = np.asarray(f_edge, dtype=float)
    if f_int.shape != f_edge.shape or ff.shape != f_int.shape:
        raise ValueError("f_int, f_edge and the frame field must share dimensions")
    g = prune(skeletonize(f_edge >= pp.edge_thresh))
    if len(g.edges) == 0:
        return []
    data = ndimage.gaussian_filter(f_edge, pp.data_sigma) if pp.data_sigma > 0 else f_edge
    g = untangle(acm_refine(g, f_int, data, ff, params.acm))
    plane = simplify_graph(g, ff, pp)
    polys = filter_polygons(extract_polygons(plane, f_int), pp.min_prob, pp.min_area)
    return sorted(polys, key=lambda p: min((y, x) for x, y in p.ring))
