"""Four-direction frame fields encoded as the quartic ``z**4 + k1*z**2 + k0``.

A frame is an unordered pair of unsigned directions ``{+-u, +-v}``. Writing
``u = exp(i*a)`` and ``v = exp(i*b)``, the quartic ``(z**2 - u**2)(z**2 - v**2)``
vanishes exactly on the four frame vectors, so the coefficient pair
``(k0, k1) = (u**2 v**2, -(u**2 + v**2))`` describes the frame without having
to order or sign its directions.

Angles are canonicalised to ``[0, pi)`` at every API boundary.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

EPS_DEGENERATE = 1e-6
UNIT_TOL = 1e-9


@dataclass(frozen=True)
class FrameCoeffs:
    k0: complex
    k1: complex

    def __post_init__(self):
        if not (np.isfinite(self.k0) and np.isfinite(self.k1)):
            raise ValueError("frame coefficients must be finite")


@dataclass(frozen=True)
class FrameField:
    """Per-pixel coefficient planes, both complex arrays of shape (H, W)."""

    k0: np.ndarray
    k1: np.ndarray

    def __post_init__(self):
        k0 = np.asarray(self.k0, dtype=complex)
        k1 = np.asarray(self.k1, dtype=complex)
        if k0.ndim != 2 or k0.shape != k1.shape:
            raise ValueError(f"frame field planes must share a 2-D shape, got {k0.shape} and {k1.shape}")
        if not (np.all(np.isfinite(k0)) and np.all(np.isfinite(k1))):
            raise ValueError("frame field contains non-finite entries")
        object.__setattr__(self, "k0", k0)
        object.__setattr__(self, "k1", k1)

    @property
    def shape(self):
        return self.k0.shape

    def at(self, row, col):
        return FrameCoeffs(complex(self.k0[row, col]), complex(self.k1[row, col]))

    def transpose(self):
        """Field of the transposed raster (x and y swapped).

        Swapping axes maps a direction angle ``t`` to ``pi/2 - t``, which sends
        ``k0 -> conj(k0)`` and ``k1 -> -conj(k1)``.
        """
        return FrameField(np.conj(self.k0).T, -np.conj(self.k1).T)


def canonical_angle(theta):
    """Reduce angles to the unsigned range [0, pi)."""
    t = np.mod(theta, np.pi)
    # mod rounds up to exactly pi for tiny negative inputs
    t = np.where(t >= np.pi, 0.0, t)
    return float(t) if t.ndim == 0 else t


def eval_field_poly(z, c):
    """Evaluate ``z**4 + k1*z**2 + k0`` at a unit complex ``z``."""
    z = complex(z)
    if abs(abs(z) - 1.0) > UNIT_TOL:
        raise ValueError(f"eval_field_poly expects |z| = 1, got |z| = {abs(z)!r}")
    z2 = z * z
    return z2 * z2 + c.k1 * z2 + c.k0


def coeffs_from_directions(theta_i, theta_j):
    u2 = np.exp(2j * theta_i)
    v2 = np.exp(2j * theta_j)
    return FrameCoeffs(complex(u2 * v2), complex(-(u2 + v2)))


def directions_from_coeffs(c, eps_degenerate=EPS_DEGENERATE):
    """Recover the two unsigned frame directions from ``(k0, k1)``.

    Returns ``((theta_a, theta_b), degenerate)``. The pair is unordered; it is
    returned sorted. ``degenerate`` is set when the discriminant
    ``k1**2 - 4*k0`` is below ``eps_degenerate`` in magnitude, i.e. the frame
    has collapsed toward a line field.
    """
    a, b, degenerate = frame_directions(c.k0, c.k1, eps_degenerate)
    return (float(a), float(b)), bool(degenerate)


def frame_directions(k0, k1, eps_degenerate=EPS_DEGENERATE):
    """Array form of :func:`directions_from_coeffs`: ``(theta_a, theta_b, degenerate)``."""
    k0 = np.asarray(k0, dtype=complex)
    k1 = np.asarray(k1, dtype=complex)
    disc = k1 * k1 - 4.0 * k0
    sq = np.sqrt(disc)
    a = canonical_angle(np.angle((-k1 + sq) / 2.0) / 2.0)
    b = canonical_angle(np.angle((-k1 - sq) / 2.0) / 2.0)
    return np.minimum(a, b), np.maximum(a, b), np.abs(disc) < eps_degenerate


def alignment_energy(theta, c):
    """``|f(exp(i*theta))|**2``; vectorises over ``theta`` and coefficient arrays."""
    z2 = np.exp(2j * np.asarray(theta, dtype=float))
    g = z2 * z2 + c.k1 * z2 + c.k0
    out = g.real**2 + g.imag**2
    return float(out) if np.ndim(out) == 0 else out


def alignment_energy_field(theta, k0, k1):
    """Pixelwise ``|f(exp(i*theta); k0, k1)|**2`` over raster arrays."""
    z2 = np.exp(2j * theta)
    g = z2 * z2 + k1 * z2 + k0
    return g.real**2 + g.imag**2


def spatial_gradient(r):
    """Gradient of a 2-D raster as an array of shape (2, H, W): (d/dx, d/dy).

    x runs along columns and y along rows. Central differences inside,
    one-sided differences on the border.
    """
    r = np.asarray(r, dtype=float)
    if r.ndim != 2 or r.shape[0] < 2 or r.shape[1] < 2:
        raise ValueError(f"spatial_gradient needs a raster of at least 2x2, got shape {r.shape}")
    gy, gx = np.gradient(r)
    return np.stack([gx, gy])


def gradient_operator(shape):
    """Sparse matrices (Dx, Dy) with ``Dx @ r.ravel() == spatial_gradient(r)[0].ravel()``."""
    from scipy import sparse

    h, w = shape
    if h < 2 or w < 2:
        raise ValueError(f"gradient operator needs at least 2x2, got {shape}")

    def diff1d(n):
        lower = np.full(n - 1, -0.5)
        upper = np.full(n - 1, 0.5)
        main = np.zeros(n)
        upper[0], main[0] = 1.0, -1.0
        lower[-1], main[-1] = -1.0, 1.0
        return sparse.diags([lower, main, upper], [-1, 0, 1], format="csr")

    dx = sparse.kron(sparse.identity(h), diff1d(w), format="csr")
    dy = sparse.kron(diff1d(h), sparse.identity(w), format="csr")
    return dx, dy


def field_from_directions(theta_i, theta_j):
    """Vectorised :func:`coeffs_from_directions` returning a FrameField."""
    u2 = np.exp(2j * np.asarray(theta_i, dtype=float))
    v2 = np.exp(2j * np.asarray(theta_j, dtype=float))
    return FrameField(u2 * v2, -(u2 + v2))


def sample_bilinear(plane, x, y):
    """Bilinear sample of ``plane`` at continuous pixel coordinates.

    Pixel ``(row, col)`` has its centre at ``(col + 0.5, row + 0.5)``; samples
    outside the centre grid are clamped to the border. Returns the values and
    their partial derivatives ``(value, d/dx, d/dy)``.
    """
    h, w = plane.shape
    u = np.clip(np.asarray(x, dtype=float) - 0.5, 0.0, w - 1.0)
    v = np.clip(np.asarray(y, dtype=float) - 0.5, 0.0, h - 1.0)
    c0 = np.minimum(np.floor(u).astype(int), w - 2) if w > 1 else np.zeros_like(u, dtype=int)
    r0 = np.minimum(np.floor(v).astype(int), h - 2) if h > 1 else np.zeros_like(v, dtype=int)
    fu = u - c0
    fv = v - r0
    c1 = np.minimum(c0 + 1, w - 1)
    r1 = np.minimum(r0 + 1, h - 1)
    p00 = plane[r0, c0]
    p01 = plane[r0, c1]
    p10 = plane[r1, c0]
    p11 = plane[r1, c1]
    top = p00 + (p01 - p00) * fu
    bot = p10 + (p11 - p10) * fu
    val = top + (bot - top) * fv
    inside_x = (np.asarray(x) - 0.5 > 0.0) & (np.asarray(x) - 0.5 < w - 1.0)
    inside_y = (np.asarray(y) - 0.5 > 0.0) & (np.asarray(y) - 0.5 < h - 1.0)
    ddx = ((p01 - p00) * (1 - fv) + (p11 - p10) * fv) * inside_x
    ddy = (bot - top) * inside_y
    return val, ddx, ddy
