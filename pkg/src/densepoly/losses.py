"""Multitask training losses for segmentation + frame-field outputs.

Every loss is a plain function of numpy rasters returning a float. The
differentiable ones also have a ``*_grad`` companion returning analytic
gradients; those exist only so the implementations can be checked against
finite differences (see :func:`finite_diff_grad_check`). Complex frame-field
planes carry their gradient as ``dL/dRe + 1j * dL/dIm``.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields
from typing import Callable, NamedTuple

import numpy as np
from scipy import ndimage

from .frame_field import FrameField, alignment_energy_field, canonical_angle, gradient_operator, spatial_gradient

CLAMP_EPS = 1e-7
SMOOTH_EPS = 1.0
SEG_C = 0.25
GRAD_EPS = 1e-6


@dataclass(frozen=True)
class SegPair:
    pred: np.ndarray
    gt: np.ndarray
    weight: np.ndarray | None = None

    def __post_init__(self):
        pred = np.asarray(self.pred, dtype=float)
        gt = np.asarray(self.gt, dtype=float)
        if pred.shape != gt.shape:
            raise ValueError(f"prediction shape {pred.shape} does not match ground truth {gt.shape}")
        if self.weight is not None:
            weight = np.asarray(self.weight, dtype=float)
            if weight.shape != pred.shape:
                raise ValueError(f"weight shape {weight.shape} does not match prediction {pred.shape}")
            if np.any(weight <= 0):
                raise ValueError("BCE weights must be strictly positive")
            object.__setattr__(self, "weight", weight)
        object.__setattr__(self, "pred", pred)
        object.__setattr__(self, "gt", gt)


@dataclass(frozen=True)
class LossComponents:
    L_int: float = 0.0
    L_edge: float = 0.0
    L_align: float = 0.0
    L_align90: float = 0.0
    L_smooth: float = 0.0
    L_int_align: float = 0.0
    L_edge_align: float = 0.0
    L_int_edge: float = 0.0

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not (math.isfinite(v) and v >= 0):
                raise ValueError(f"{f.name} must be finite and non-negative, got {v!r}")

    @property
    def regularizers(self):
        return self.L_smooth + self.L_int_align + self.L_edge_align + self.L_int_edge

    @property
    def classification(self):
        return self.L_int + self.L_align + self.L_align90

    def as_dict(self):
        return asdict(self)


def _check_same(*arrays):
    shapes = {np.shape(a) for a in arrays}
    if len(shapes) != 1:
        raise ValueError(f"raster dimension mismatch: {sorted(shapes)}")


# ---------------------------------------------------------------- segmentation


def bce_loss(p, clamp_eps=CLAMP_EPS):
    if not 0.0 < clamp_eps < 0.5:
        raise ValueError(f"clamp_eps must lie in (0, 0.5), got {clamp_eps}")
    q = np.clip(p.pred, clamp_eps, 1.0 - clamp_eps)
    per_pixel = -(p.gt * np.log(q) + (1.0 - p.gt) * np.log1p(-q))
    if p.weight is None:
        return float(np.mean(per_pixel))
    return float(np.sum(p.weight * per_pixel) / np.sum(p.weight))


def bce_grad(p, clamp_eps=CLAMP_EPS):
    q = np.clip(p.pred, clamp_eps, 1.0 - clamp_eps)
    w = np.ones_like(q) if p.weight is None else p.weight
    g = w * (-p.gt / q + (1.0 - p.gt) / (1.0 - q)) / np.sum(w)
    free = (p.pred > clamp_eps) & (p.pred < 1.0 - clamp_eps)
    return np.where(free, g, 0.0)


def dice_loss(p, smooth_eps=SMOOTH_EPS):
    inter = np.sum(p.pred * p.gt)
    total = np.sum(p.pred) + np.sum(p.gt)
    return float(1.0 - (2.0 * inter + smooth_eps) / (total + smooth_eps))


def dice_grad(p, smooth_eps=SMOOTH_EPS):
    inter = np.sum(p.pred * p.gt)
    den = np.sum(p.pred) + np.sum(p.gt) + smooth_eps
    return -(2.0 * p.gt * den - (2.0 * inter + smooth_eps)) / den**2


def combined_seg_loss(p, c=SEG_C, clamp_eps=CLAMP_EPS, smooth_eps=SMOOTH_EPS):
    """``c * BCE + (1 - c) * Dice``; serves both the interior and edge heads."""
    if not 0.0 <= c <= 1.0:
        raise ValueError(f"c must lie in [0, 1], got {c}")
    if c == 1.0:
        return bce_loss(p, clamp_eps)
    return c * bce_loss(p, clamp_eps) + (1.0 - c) * dice_loss(p, smooth_eps)


def combined_seg_grad(p, c=SEG_C, clamp_eps=CLAMP_EPS, smooth_eps=SMOOTH_EPS):
    return c * bce_grad(p, clamp_eps) + (1.0 - c) * dice_grad(p, smooth_eps)


def distance_weights(labels, w0=10.0, sigma_w=5.0):
    """Border-emphasis weight map from an instance label raster (0 = background).

    ``w = 1 + w0 * exp(-(d1 + d2)**2 / (2 sigma_w**2))`` where d1, d2 are the
    distances to the nearest and second-nearest instance. Rasters with fewer
    than two instances get unit weights.
    """
    ids = [k for k in np.unique(labels) if k != 0]
    if len(ids) < 2:
        return np.ones(labels.shape)
    d1 = np.full(labels.shape, np.inf)
    d2 = np.full(labels.shape, np.inf)
    for k in ids:
        d = ndimage.distance_transform_edt(labels != k)
        d2 = np.where(d < d1, d1, np.minimum(d2, d))
        d1 = np.minimum(d1, d)
    return 1.0 + w0 * np.exp(-((d1 + d2) ** 2) / (2.0 * sigma_w**2))


# ---------------------------------------------------------------- frame field


def _frame_residual(theta, k0, k1):
    z2 = np.exp(2j * theta)
    return z2 * z2 + k1 * z2 + k0, z2


def align_loss(ff, tang, y_edge):
    """Mean over the raster of ``y_edge * |f(exp(i*theta); k0, k1)|**2``."""
    _check_same(ff.k0, tang, y_edge)
    energy = alignment_energy_field(np.where(y_edge > 0, tang, 0.0), ff.k0, ff.k1)
    return float(np.sum(y_edge * energy) / y_edge.size)


def align90_loss(ff, tang, y_edge):
    return align_loss(ff, canonical_angle(np.asarray(tang) - np.pi / 2), y_edge)


def align_grad(ff, tang, y_edge):
    g, z2 = _frame_residual(np.where(y_edge > 0, tang, 0.0), ff.k0, ff.k1)
    scale = 2.0 * y_edge / y_edge.size
    return {"k0": scale * g, "k1": scale * g * np.conj(z2)}


def align90_grad(ff, tang, y_edge):
    return align_grad(ff, canonical_angle(np.asarray(tang) - np.pi / 2), y_edge)


def smooth_loss(ff):
    """Mean squared spatial gradient of both coefficient planes."""
    total = 0.0
    for plane in (ff.k0, ff.k1):
        for part in (plane.real, plane.imag):
            total += np.sum(spatial_gradient(part) ** 2)
    return float(total / ff.k0.size)


def smooth_grad(ff):
    dx, dy = gradient_operator(ff.shape)
    n = ff.k0.size
    out = {}
    for name, plane in (("k0", ff.k0), ("k1", ff.k1)):
        v = plane.ravel()
        g = 2.0 * (dx.T @ (dx @ v) + dy.T @ (dy @ v)) / n
        out[name] = g.reshape(ff.shape)
    return out


def mask_align_loss(ff, mask, grad_eps=GRAD_EPS):
    """Gradient-magnitude weighted alignment of a mask's gradient to the field.

    Pixels whose gradient norm is at most ``grad_eps`` contribute nothing.
    """
    _check_same(ff.k0, mask)
    gx, gy = spatial_gradient(mask)
    mag = np.hypot(gx, gy)
    active = mag > grad_eps
    theta = canonical_angle(np.arctan2(gy, gx))
    energy = alignment_energy_field(theta, ff.k0, ff.k1)
    return float(np.sum(np.where(active, mag * energy, 0.0)) / mask.size)


def mask_align_grad(ff, mask, grad_eps=GRAD_EPS):
    gx, gy = spatial_gradient(mask)
    mag = np.hypot(gx, gy)
    active = mag > grad_eps
    safe = np.where(active, mag, 1.0)
    g, z2 = _frame_residual(np.arctan2(gy, gx), ff.k0, ff.k1)
    energy = g.real**2 + g.imag**2
    d_energy = 2.0 * np.real(np.conj(g) * (4j * z2 * z2 + 2j * ff.k1 * z2))
    # d(mag * A(phi))/d(gx, gy) = A * (gx, gy)/mag + A'(phi) * (-gy, gx)/mag
    tgx = np.where(active, (energy * gx - d_energy * gy) / safe, 0.0)
    tgy = np.where(active, (energy * gy + d_energy * gx) / safe, 0.0)
    dx, dy = gradient_operator(mask.shape)
    n = mask.size
    d_mask = (dx.T @ tgx.ravel() + dy.T @ tgy.ravel()).reshape(mask.shape) / n
    w = np.where(active, 2.0 * mag / n, 0.0)
    return {"mask": d_mask, "k0": w * g, "k1": w * g * np.conj(z2)}


def int_edge_loss(f_int, f_edge):
    """Coupling between the interior map's gradient magnitude and the edge map."""
    _check_same(f_int, f_edge)
    gx, gy = spatial_gradient(f_int)
    mag = np.hypot(gx, gy)
    gate = np.maximum(1.0 - f_int, mag)
    return float(np.sum(gate * np.abs(mag - f_edge)) / f_int.size)


def int_edge_grad(f_int, f_edge):
    gx, gy = spatial_gradient(f_int)
    mag = np.hypot(gx, gy)
    gate = np.maximum(1.0 - f_int, mag)
    resid = mag - f_edge
    sgn = np.sign(resid)
    mag_branch = mag > 1.0 - f_int
    n = f_int.size
    d_direct = np.where(mag_branch, 0.0, -np.abs(resid))
    d_mag = np.where(mag_branch, np.abs(resid), 0.0) + gate * sgn
    safe = np.where(mag > 0, mag, 1.0)
    dx, dy = gradient_operator(f_int.shape)
    d_int = d_direct.ravel() + dx.T @ (d_mag * gx / safe).ravel() + dy.T @ (d_mag * gy / safe).ravel()
    return {"f_int": d_int.reshape(f_int.shape) / n, "f_edge": -gate * sgn / n}


# ---------------------------------------------------------------- weighting


def total_loss(lc, sigma):
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    return (
        lc.regularizers / (2.0 * sigma**2)
        + lc.L_edge / sigma
        + lc.classification / sigma**2
        + math.log(sigma)
    )


def optimal_sigma(lc):
    """Unique positive stationary point of :func:`total_loss` in sigma.

    Setting the derivative to zero gives ``sigma**2 - B*sigma - (A + 2C) = 0``
    with A the regularizer sum, B the edge loss and C the classification sum.
    """
    a, b, c = lc.regularizers, lc.L_edge, lc.classification
    if a == 0 and b == 0 and c == 0:
        raise ValueError("all loss components are zero: total loss has no finite minimiser")
    return (b + math.sqrt(b * b + 4.0 * (a + 2.0 * c))) / 2.0


def compute_components(f_int, f_edge, ff, y_int, y_edge, tang, weight=None, c=SEG_C,
                       clamp_eps=CLAMP_EPS, smooth_eps=SMOOTH_EPS, grad_eps=GRAD_EPS):
    """Evaluate every loss term for one prediction triple against ground truth."""
    _check_same(f_int, f_edge, ff.k0, y_int, y_edge, tang)
    return LossComponents(
        L_int=combined_seg_loss(SegPair(f_int, y_int, weight), c, clamp_eps, smooth_eps),
        L_edge=combined_seg_loss(SegPair(f_edge, y_edge, weight), c, clamp_eps, smooth_eps),
        L_align=align_loss(ff, tang, y_edge),
        L_align90=align90_loss(ff, tang, y_edge),
        L_smooth=smooth_loss(ff),
        L_int_align=mask_align_loss(ff, f_int, grad_eps),
        L_edge_align=mask_align_loss(ff, f_edge, grad_eps),
        L_int_edge=int_edge_loss(f_int, f_edge),
    )


# ---------------------------------------------------------------- gradient check


class DifferentiableLoss(NamedTuple):
    """A loss over a dict of named rasters plus its analytic gradient.

    ``wrt`` lists the inputs to probe. ``kink`` optionally flags probes that
    sit on a known non-differentiable point (e.g. the BCE clamp).
    """

    name: str
    value: Callable[[dict], float]
    grad: Callable[[dict], dict]
    wrt: tuple
    kink: Callable[[dict, str, tuple, float], bool] | None = None


class GradCheckResult(NamedTuple):
    max_rel_error: float
    n_checked: int
    skipped: list


def _ff(inputs):
    return FrameField(inputs["k0"], inputs["k1"])


def standard_losses(y_int=None, y_edge=None, tang=None, weight=None, c=SEG_C,
                    clamp_eps=CLAMP_EPS, smooth_eps=SMOOTH_EPS, grad_eps=GRAD_EPS):
    """Handles for every differentiable loss, with ground truth held fixed."""

    def near_clamp(inputs, key, idx, step):
        v = inputs[key][idx]
        return abs(v - clamp_eps) <= step or abs(v - (1.0 - clamp_eps)) <= step

    def seg(name, gt):
        return [
            DifferentiableLoss(
                f"bce_{name}",
                lambda x: bce_loss(SegPair(x["pred"], gt, weight), clamp_eps),
                lambda x: {"pred": bce_grad(SegPair(x["pred"], gt, weight), clamp_eps)},
                ("pred",), near_clamp),
            DifferentiableLoss(
                f"dice_{name}",
                lambda x: dice_loss(SegPair(x["pred"], gt), smooth_eps),
                lambda x: {"pred": dice_grad(SegPair(x["pred"], gt), smooth_eps)},
                ("pred",)),
            DifferentiableLoss(
                f"seg_{name}",
                lambda x: combined_seg_loss(SegPair(x["pred"], gt, weight), c, clamp_eps, smooth_eps),
                lambda x: {"pred": combined_seg_grad(SegPair(x["pred"], gt, weight), c, clamp_eps, smooth_eps)},
                ("pred",), near_clamp),
        ]

    out = []
    if y_int is not None:
        out += seg("int", y_int)
    if y_edge is not None:
        out += seg("edge", y_edge)
    if y_edge is not None and tang is not None:
        out.append(DifferentiableLoss(
            "align", lambda x: align_loss(_ff(x), tang, y_edge),
            lambda x: align_grad(_ff(x), tang, y_edge), ("k0", "k1")))
        out.append(DifferentiableLoss(
            "align90", lambda x: align90_loss(_ff(x), tang, y_edge),
            lambda x: align90_grad(_ff(x), tang, y_edge), ("k0", "k1")))
    out.append(DifferentiableLoss("smooth", lambda x: smooth_loss(_ff(x)), lambda x: smooth_grad(_ff(x)), ("k0", "k1")))
    out.append(DifferentiableLoss(
        "mask_align", lambda x: mask_align_loss(_ff(x), x["mask"], grad_eps),
        lambda x: mask_align_grad(_ff(x), x["mask"], grad_eps), ("mask", "k0", "k1")))
    out.append(DifferentiableLoss(
        "int_edge", lambda x: int_edge_loss(x["f_int"], x["f_edge"]),
        lambda x: int_edge_grad(x["f_int"], x["f_edge"]), ("f_int", "f_edge")))
    return out


def finite_diff_grad_check(loss, inputs, step=1e-4, n_probes=64, seed=0, kink_tol=0.05):
    """Compare ``loss.grad`` to central differences at random coordinates.

    Each probe picks one real coordinate (complex planes contribute their real
    and imaginary parts separately). A probe is skipped as a kink when the
    loss flags it or when the forward and backward differences disagree by
    more than ``kink_tol`` relative, i.e. the one-sided slopes differ.
    Relative error is ``|a - n| / max(|a|, |n|, 1e-8)``.
    """
    if not 0.0 < step <= 1e-2:
        raise ValueError(f"step must lie in (0, 1e-2], got {step}")
    inputs = {k: np.array(v, copy=True) for k, v in inputs.items()}
    analytic = loss.grad(inputs)
    rng = np.random.default_rng(seed)
    coords = []
    for key in loss.wrt:
        parts = ("re", "im") if np.iscomplexobj(inputs[key]) else ("re",)
        for part in parts:
            for flat in range(inputs[key].size):
                coords.append((key, part, flat))
    picks = rng.choice(len(coords), size=min(n_probes, len(coords)), replace=False)
    base = loss.value(inputs)
    if not math.isfinite(base):
        raise ValueError(f"{loss.name}: non-finite loss at the base point")
    worst = 0.0
    skipped = []
    checked = 0
    for pick in sorted(picks):
        key, part, flat = coords[pick]
        arr = inputs[key]
        idx = np.unravel_index(flat, arr.shape)
        unit = 1.0 if part == "re" else 1j
        if loss.kink is not None and part == "re" and loss.kink(inputs, key, idx, step):
            skipped.append((key, part, idx))
            continue
        orig = arr[idx]
        arr[idx] = orig + step * unit
        f_plus = loss.value(inputs)
        arr[idx] = orig - step * unit
        f_minus = loss.value(inputs)
        arr[idx] = orig
        if not (math.isfinite(f_plus) and math.isfinite(f_minus)):
            raise ValueError(f"{loss.name}: non-finite loss when probing {key}{idx}")
        fwd = (f_plus - base) / step
        bwd = (base - f_minus) / step
        if abs(fwd - bwd) > kink_tol * max(abs(fwd), abs(bwd), 1e-8):
            skipped.append((key, part, idx))
            continue
        numeric = (f_plus - f_minus) / (2.0 * step)
        g = analytic[key][idx]
        a = float(g.real if part == "re" else g.imag) if np.iscomplexobj(g) else float(g)
        worst = max(worst, abs(a - numeric) / max(abs(a), abs(numeric), 1e-8))
        checked += 1
    return GradCheckResult(worst, checked, skipped)
