"""Frame-field corner detection and corner-preserving polyline simplification."""
from __future__ import annotations

import math

import numpy as np

from ..frame_field import frame_directions, sample_bilinear


def _unsigned_diff(a, b):
    d = np.mod(a - b, math.pi)
    return np.minimum(d, math.pi - d)


def detect_corners(path, ff, angle_thresh=math.pi / 8, closed=False, window=1):
    """Indices of ``path`` nodes where the contour switches frame direction.

    Each node with two incident segments compares the unsigned angle of the
    incoming and outgoing tangent. Both are snapped to the nearest direction of
    the frame sampled at the node; differing snaps mark a corner. At a
    degenerate frame the test falls back to ``angle_thresh`` on the raw turn.

    ``window`` > 1 measures the tangents over that many segments instead of
    one, which steadies the snap on pixel-scale wiggle. End nodes of an open
    path are never corners.
    """
    P = np.asarray(path, dtype=float).reshape(-1, 2)
    n = len(P)
    if n < 3:
        raise ValueError(f"path needs at least 3 nodes, got {n}")
    w = max(1, int(window))
    idx = np.arange(n) if closed else np.arange(1, n - 1)
    if closed:
        prev = P[(idx - w) % n]
        nxt = P[(idx + w) % n]
    else:
        prev = P[np.maximum(idx - w, 0)]
        nxt = P[np.minimum(idx + w, n - 1)]
    here = P[idx]
    t_in = np.mod(np.arctan2(here[:, 1] - prev[:, 1], here[:, 0] - prev[:, 0]), math.pi)
    t_out = np.mod(np.arctan2(nxt[:, 1] - here[:, 1], nxt[:, 0] - here[:, 0]), math.pi)
    k0 = sample_bilinear(ff.k0, here[:, 0], here[:, 1])[0]
    k1 = sample_bilinear(ff.k1, here[:, 0], here[:, 1])[0]
    a, b, degenerate = frame_directions(k0, k1)
    snap_in = _unsigned_diff(t_in, a) > _unsigned_diff(t_in, b)
    snap_out = _unsigned_diff(t_out, a) > _unsigned_diff(t_out, b)
    turn = _unsigned_diff(t_in, t_out) > angle_thresh
    hit = np.where(degenerate, turn, snap_in != snap_out)
    return {int(i) for i in idx[hit]}


def rdp(points, tol):
    """Ramer-Douglas-Peucker on an open polyline; both ends are kept."""
    P = np.asarray(points, dtype=float).reshape(-1, 2)
    if tol <= 0 or len(P) < 3:
        return P.copy()
    keep = np.zeros(len(P), dtype=bool)
    keep[[0, -1]] = True
    stack = [(0, len(P) - 1)]
    while stack:
        i, j = stack.pop()
        if j - i < 2:
            continue
        a, b = P[i], P[j]
        seg = b - a
        q = P[i + 1:j] - a
        L2 = float(seg @ seg)
        if L2 > 0:
            t = np.clip(q @ seg / L2, 0.0, 1.0)
            d = np.hypot(*(q - t[:, None] * seg).T)
        else:
            d = np.hypot(q[:, 0], q[:, 1])
        k = int(np.argmax(d))
        if d[k] > tol:
            m = i + 1 + k
            keep[m] = True
            stack.append((i, m))
            stack.append((m, j))
    return P[keep]


def split_and_simplify(path, corners, tol, closed=False):
    """Cut ``path`` at ``corners`` and RDP-simplify each piece.

    Pieces share their end vertices, so corner coordinates survive verbatim.
    A closed path without corners is cut at node 0 and at the node farthest
    from it, giving two pieces.
    """
    P = np.asarray(path, dtype=float).reshape(-1, 2)
    n = len(P)
    cuts = sorted(int(c) for c in corners)
    if any(c < 0 or c >= n for c in cuts):
        raise ValueError("corner index outside the path")
    if not closed:
        cuts = sorted(set(cuts) | {0, n - 1})
        return [rdp(P[a:b + 1], tol) for a, b in zip(cuts[:-1], cuts[1:])]
    if not cuts:
        far = int(np.argmax(np.hypot(*(P - P[0]).T)))
        cuts = [0, far] if far > 0 else [0]
    pieces = []
    for k, a in enumerate(cuts):
        b = cuts[(k + 1) % len(cuts)]
        if b <= a:
            b += n
        idx = np.arange(a, b + 1) % n
        pieces.append(rdp(P[idx], tol))
    return pieces
