"""Instance-level polygon evaluation: IoU, greedy matching, F1, AP and AR."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import shapely
from shapely.geometry import Polygon

THRESHOLDS = tuple(round(0.5 + 0.05 * k, 2) for k in range(10))
RECALL_LEVELS = np.linspace(0.0, 1.0, 101)


def _as_polygon(p):
    ring = p.ring if hasattr(p, "ring") else p
    poly = Polygon(ring)
    if not poly.is_valid or poly.area <= 0:
        raise ValueError("degenerate or self-intersecting polygon")
    return poly


def _score(p):
    return float(getattr(p, "score", 1.0))


def polygon_iou(a, b):
    """Intersection over union of two simple polygons, by exact clipping."""
    pa, pb = _as_polygon(a), _as_polygon(b)
    inter = pa.intersection(pb).area
    if inter == 0.0:
        return 0.0
    return float(inter / (pa.area + pb.area - inter))


def iou_matrix(preds, gts):
    """``(len(preds), len(gts))`` IoU table; only bbox-overlapping pairs are clipped."""
    P = [_as_polygon(p) for p in preds]
    G = [_as_polygon(g) for g in gts]
    out = np.zeros((len(P), len(G)))
    if not P or not G:
        return out
    tree = shapely.STRtree(G)
    pi, gi = tree.query(P, predicate="intersects")
    for i, j in zip(pi, gi):
        inter = P[i].intersection(G[j]).area
        if inter > 0:
            out[i, j] = inter / (P[i].area + G[j].area - inter)
    return out


@dataclass(frozen=True)
class MatchSet:
    threshold: float
    pairs: tuple
    unmatched_preds: tuple
    unmatched_gts: tuple

    def __post_init__(self):
        if not 0.0 < self.threshold <= 1.0:
            raise ValueError(f"threshold must lie in (0, 1], got {self.threshold}")
        preds = [p for p, _, _ in self.pairs]
        gts = [g for _, g, _ in self.pairs]
        if len(set(preds)) != len(preds) or len(set(gts)) != len(gts):
            raise ValueError("an instance appears in more than one pair")
        if any(iou < self.threshold for _, _, iou in self.pairs):
            raise ValueError("pair IoU below the threshold")

    @property
    def tp(self):
        return len(self.pairs)


def _order(preds):
    # descending score, ties broken by input index
    return sorted(range(len(preds)), key=lambda k: (-_score(preds[k]), k))


def _greedy(ious, order, tau):
    n_gt = ious.shape[1]
    taken = np.zeros(n_gt, dtype=bool)
    hits = []
    for i in order:
        row = np.where(taken, -1.0, ious[i]) if n_gt else ious[i]
        j = int(np.argmax(row)) if n_gt else -1
        if j >= 0 and row[j] >= tau:
            taken[j] = True
            hits.append((i, j, float(ious[i, j])))
        else:
            hits.append((i, -1, 0.0))
    return hits


def match_instances(preds, gts, tau, ious=None):
    """Greedy matching in descending score order at IoU threshold ``tau``."""
    if not 0.0 < tau <= 1.0:
        raise ValueError(f"tau must lie in (0, 1], got {tau}")
    ious = iou_matrix(preds, gts) if ious is None else ious
    hits = _greedy(ious, _order(preds), tau)
    pairs = tuple((i, j, iou) for i, j, iou in hits if j >= 0)
    matched_g = {j for _, j, _ in pairs}
    return MatchSet(
        threshold=tau,
        pairs=pairs,
        unmatched_preds=tuple(sorted(i for i, j, _ in hits if j < 0)),
        unmatched_gts=tuple(j for j in range(len(gts)) if j not in matched_g),
    )


def pr_f1_at(ms, n_preds, n_gts):
    """Precision, recall and F1 of a match set.

    No predictions gives precision 0; no ground truth gives recall 0, except
    that both empty counts as a perfect (vacuous) result.
    """
    tp = ms.tp
    if tp > min(n_preds, n_gts):
        raise ValueError(f"{tp} matches but only {n_preds} predictions and {n_gts} ground truths")
    if n_preds == 0 and n_gts == 0:
        return 1.0, 1.0, 1.0
    precision = tp / n_preds if n_preds else 0.0
    recall = tp / n_gts if n_gts else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return precision, recall, f1


def _ap_from_hits(hits, n_gts):
    if n_gts == 0:
        return 1.0 if not hits else 0.0
    if not hits:
        return 0.0
    tp = np.cumsum([j >= 0 for _, j, _ in hits])
    precision = tp / np.arange(1, len(hits) + 1)
    recall = tp / n_gts
    # precision envelope: best precision at any recall >= r
    env = np.maximum.accumulate(precision[::-1])[::-1]
    k = np.searchsorted(recall, RECALL_LEVELS, side="left")
    vals = np.where(k < len(env), env[np.minimum(k, len(env) - 1)], 0.0)
    return float(vals.mean())


def ap_at(preds, gts, tau, ious=None):
    """101-point interpolated average precision at IoU threshold ``tau``."""
    if not 0.0 < tau <= 1.0:
        raise ValueError(f"tau must lie in (0, 1], got {tau}")
    ious = iou_matrix(preds, gts) if ious is None else ious
    return _ap_from_hits(_greedy(ious, _order(preds), tau), len(gts))


@dataclass(frozen=True)
class MetricsReport:
    f1_50: float
    f1_75: float
    ap_50: float
    ap_75: float
    ar_50: float
    ar_75: float
    map: float
    mar: float
    per_threshold: tuple = field(default_factory=tuple)

    def as_dict(self, ndigits=3):
        r = lambda v: round(float(v), ndigits)
        return {
            "f1_50": r(self.f1_50), "f1_75": r(self.f1_75),
            "ap_50": r(self.ap_50), "ap_75": r(self.ap_75),
            "ar_50": r(self.ar_50), "ar_75": r(self.ar_75),
            "map": r(self.map), "mar": r(self.mar),
            "per_threshold": [
                {"iou": t["iou"], "ap": r(t["ap"]), "ar": r(t["ar"]), "f1": r(t["f1"]),
                 "precision": r(t["precision"])}
                for t in self.per_threshold
            ],
        }


def evaluate(preds, gts):
    """AP, AR and F1 at every threshold 0.50, 0.55, ..., 0.95, plus their means."""
    ious = iou_matrix(preds, gts)
    order = _order(preds)
    rows = []
    for tau in THRESHOLDS:
        hits = _greedy(ious, order, tau)
        ms = match_instances(preds, gts, tau, ious)
        precision, recall, f1 = pr_f1_at(ms, len(preds), len(gts))
        rows.append({"iou": tau, "ap": _ap_from_hits(hits, len(gts)), "ar": recall, "f1": f1,
                     "precision": precision})
    at = {t["iou"]: t for t in rows}
    return MetricsReport(
        f1_50=at[0.5]["f1"], f1_75=at[0.75]["f1"],
        ap_50=at[0.5]["ap"], ap_75=at[0.75]["ap"],
        ar_50=at[0.5]["ar"], ar_75=at[0.75]["ar"],
        map=float(np.mean([t["ap"] for t in rows])),
        mar=float(np.mean([t["ar"] for t in rows])),
        per_threshold=tuple(rows),
    )
