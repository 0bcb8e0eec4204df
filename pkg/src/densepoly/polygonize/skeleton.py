"""Zhang-Suen thinning and conversion of the thinned mask to a graph."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage


@dataclass
class SkeletonGraph:
    """Sub-pixel node positions ``(x, y)`` and undirected edges ``(i, j)``, ``i < j``."""

    nodes: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))
    edges: np.ndarray = field(default_factory=lambda: np.zeros((0, 2), dtype=int))

    def __post_init__(self):
        self.nodes = np.asarray(self.nodes, dtype=float).reshape(-1, 2)
        e = np.asarray(self.edges, dtype=int).reshape(-1, 2)
        if len(e) and np.any(e[:, 0] == e[:, 1]):
            raise ValueError("graph contains a self-loop")
        e = np.sort(e, axis=1)
        self.edges = np.unique(e, axis=0) if len(e) else e

    def __len__(self):
        return len(self.nodes)

    def degree(self):
        return np.bincount(self.edges.ravel(), minlength=len(self.nodes))

    def neighbors(self):
        adj = [[] for _ in range(len(self.nodes))]
        for i, j in self.edges:
            adj[i].append(int(j))
            adj[j].append(int(i))
        return adj

    def copy(self):
        return SkeletonGraph(self.nodes.copy(), self.edges.copy())

    def subgraph(self, keep_nodes):
        """Graph restricted to ``keep_nodes`` (bool mask), reindexed."""
        keep_nodes = np.asarray(keep_nodes, dtype=bool)
        remap = -np.ones(len(self.nodes), dtype=int)
        remap[keep_nodes] = np.arange(keep_nodes.sum())
        e = remap[self.edges] if len(self.edges) else self.edges
        e = e[(e >= 0).all(axis=1)] if len(e) else e
        return SkeletonGraph(self.nodes[keep_nodes], e)


def _neighbours(img):
    """P2..P9 (N, NE, E, SE, S, SW, W, NW) of every pixel of a zero-padded image."""
    p = np.pad(img, 1)
    h, w = img.shape
    s = lambda dr, dc: p[1 + dr:1 + dr + h, 1 + dc:1 + dc + w]
    return [s(-1, 0), s(-1, 1), s(0, 1), s(1, 1), s(1, 0), s(1, -1), s(0, -1), s(-1, -1)]


def zhang_suen(mask):
    """Thin a binary mask to one-pixel-wide curves (Zhang & Suen, 1984)."""
    img = np.asarray(mask, dtype=bool).astype(np.uint8)
    while True:
        changed = False
        for step in (0, 1):
            n = _neighbours(img)
            p2, p3, p4, p5, p6, p7, p8, p9 = n
            b = sum(n)
            seq = n + [p2]
            a = sum(((seq[k] == 0) & (seq[k + 1] == 1)).astype(np.uint8) for k in range(8))
            if step == 0:
                c1 = p2 * p4 * p6
                c2 = p4 * p6 * p8
            else:
                c1 = p2 * p4 * p8
                c2 = p2 * p6 * p8
            kill = (img == 1) & (b >= 2) & (b <= 6) & (a == 1) & (c1 == 0) & (c2 == 0)
            if kill.any():
                img[kill] = 0
                changed = True
        if not changed:
            return img.astype(bool)


_OFFSETS4 = ((0, 1), (1, 0))
_OFFSETS_DIAG = ((1, 1), (1, -1))


def pixel_graph(skel):
    """Edges between skeleton pixels (indices into ``np.argwhere(skel)``).

    4-neighbours are always linked. Diagonal neighbours are linked only when
    neither pixel of the shared 4-neighbourhood is set, so staircase corners
    do not form triangles.
    """
    skel = np.asarray(skel, dtype=bool)
    h, w = skel.shape
    index = -np.ones(skel.shape, dtype=np.int64)
    coords = np.argwhere(skel)
    index[coords[:, 0], coords[:, 1]] = np.arange(len(coords))
    pad = np.pad(skel, 1)
    ipad = np.pad(index, 1, constant_values=-1)
    edges = []
    for dr, dc in _OFFSETS4 + _OFFSETS_DIAG:
        nb = ipad[1 + dr:1 + dr + h, 1 + dc:1 + dc + w]
        ok = skel & (nb >= 0)
        if dr and dc:
            side_a = pad[1 + dr:1 + dr + h, 1:1 + w]
            side_b = pad[1:1 + h, 1 + dc:1 + dc + w]
            ok &= ~side_a & ~side_b
        src = index[ok]
        dst = nb[ok]
        edges.append(np.stack([src, dst], axis=1))
    edges = np.concatenate(edges) if edges else np.zeros((0, 2), dtype=int)
    return coords, edges


def skeletonize(edge_binary):
    """Thin ``edge_binary`` and build its skeleton graph.

    Node positions are pixel centres ``(col + .5, row + .5)``. Connected runs of
    junction pixels (degree >= 3) are merged into one node at their centroid.
    """
    skel = zhang_suen(edge_binary)
    coords, edges = pixel_graph(skel)
    if len(coords) == 0:
        return SkeletonGraph()
    deg = np.bincount(edges.ravel(), minlength=len(coords))
    junction = deg >= 3
    # label junction clusters through the same pixel adjacency
    jmask = np.zeros(skel.shape, dtype=bool)
    jmask[coords[junction, 0], coords[junction, 1]] = True
    node_of = np.arange(len(coords))
    if junction.any():
        je = edges[junction[edges[:, 0]] & junction[edges[:, 1]]]
        parent = np.arange(len(coords))

        def find(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        for a, b in je:
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[max(ra, rb)] = min(ra, rb)
        node_of = np.array([find(a) for a in range(len(coords))])
    roots, node_of = np.unique(node_of, return_inverse=True)
    xy = np.stack([coords[:, 1] + 0.5, coords[:, 0] + 0.5], axis=1)
    nodes = np.zeros((len(roots), 2))
    np.add.at(nodes, node_of, xy)
    nodes /= np.bincount(node_of, minlength=len(roots))[:, None]
    e = node_of[edges]
    e = e[e[:, 0] != e[:, 1]]
    return SkeletonGraph(nodes, e)
