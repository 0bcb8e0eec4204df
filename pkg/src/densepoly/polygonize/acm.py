"""Active skeleton model: snake-style refinement of skeleton node positions.

The energy of a graph with node positions ``X`` is

    E = lambda_data * sum_v (1 - edge(X_v))
      + lambda_ff * sum_(i,j) A(tangent_ij, field(mid_ij)) * |X_j - X_i|
      + lambda_internal * sum_(i,j) |X_j - X_i|**2

with ``A`` the frame-field alignment energy. Each connected component is
descended independently with its own backtracking step, all components
advancing in lockstep so the work stays vectorised.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage
from scipy.sparse.csgraph import connected_components
from scipy.sparse import coo_matrix

from .skeleton import SkeletonGraph


@dataclass(frozen=True)
class AcmParams:
    lambda_data: float = 1.0
    lambda_ff: float = 0.1
    lambda_internal: float = 0.01
    step0: float = 0.5
    max_iters: int = 300
    tol: float = 1e-3
    max_halvings: int = 20

    def __post_init__(self):
        weights = (self.lambda_data, self.lambda_ff, self.lambda_internal)
        if min(weights) < 0 or max(weights) == 0:
            raise ValueError(f"ACM weights must be non-negative and not all zero, got {weights}")
        if self.step0 <= 0 or self.tol <= 0:
            raise ValueError("step0 and tol must be positive")
        if self.max_iters < 0 or self.max_halvings < 0:
            raise ValueError("max_iters and max_halvings must be non-negative")


class CubicSampler:
    """Cubic B-spline interpolation of a raster, with analytic derivatives.

    Same pixel-centre convention as :func:`~densepoly.frame_field.sample_bilinear`.
    """

    def __init__(self, plane):
        plane = np.asarray(plane, dtype=float)
        self.shape = plane.shape
        coeffs = ndimage.spline_filter(plane, order=3, mode="mirror")
        # two samples of mirror padding cover the 4x4 support at the clamped border
        self.coeffs = np.pad(coeffs, 2, mode="reflect")

    @staticmethod
    def _basis(t):
        t2 = t * t
        t3 = t2 * t
        s = 1.0 - t
        w = np.stack([s * s * s, 3 * t3 - 6 * t2 + 4, -3 * t3 + 3 * t2 + 3 * t + 1, t3]) / 6.0
        d = np.stack([-s * s, 3 * t2 - 4 * t, -3 * t2 + 2 * t + 1, t2]) / 2.0
        return w, d

    def __call__(self, x, y):
        h, w = self.shape
        u = np.clip(np.asarray(x, dtype=float) - 0.5, 0.0, w - 1.0)
        v = np.clip(np.asarray(y, dtype=float) - 0.5, 0.0, h - 1.0)
        iu = np.minimum(np.floor(u).astype(int), max(w - 2, 0))
        iv = np.minimum(np.floor(v).astype(int), max(h - 2, 0))
        wu, du = self._basis(u - iu)
        wv, dv = self._basis(v - iv)
        off = np.arange(4)[:, None]
        rows = (iv + 1 + off)[:, None, :]
        cols = (iu + 1 + off)[None, :, :]
        c = self.coeffs[rows, cols]
        cu = np.einsum("bn,abn->an", wu, c)
        val = np.einsum("an,an->n", wv, cu)
        gy = np.einsum("an,an->n", dv, cu)
        gx = np.einsum("an,bn,abn->n", wv, du, c)
        return val, gx, gy


class _FieldSampler:
    """Bilinear sampling of both frame-field planes at once."""

    def __init__(self, ff):
        self.planes = np.stack([ff.k0, ff.k1])
        self.shape = ff.shape

    def __call__(self, x, y):
        h, w = self.shape
        xs = np.asarray(x, dtype=float) - 0.5
        ys = np.asarray(y, dtype=float) - 0.5
        u = np.clip(xs, 0.0, w - 1.0)
        v = np.clip(ys, 0.0, h - 1.0)
        c0 = np.minimum(np.floor(u).astype(int), w - 2)
        r0 = np.minimum(np.floor(v).astype(int), h - 2)
        fu = u - c0
        fv = v - r0
        p = self.planes
        p00 = p[:, r0, c0]
        p01 = p[:, r0, c0 + 1]
        p10 = p[:, r0 + 1, c0]
        p11 = p[:, r0 + 1, c0 + 1]
        top = p00 + (p01 - p00) * fu
        bot = p10 + (p11 - p10) * fu
        val = top + (bot - top) * fv
        ddx = ((p01 - p00) * (1 - fv) + (p11 - p10) * fv) * ((xs > 0) & (xs < w - 1))
        ddy = (bot - top) * ((ys > 0) & (ys < h - 1))
        return val, ddx, ddy


class AcmEnergy:
    """Per-component energy and gradient of a fixed-topology graph."""

    def __init__(self, graph, f_edge, ff, params, comp=None):
        self.edges = graph.edges
        self.params = params
        self.sampler = CubicSampler(f_edge)
        self.field = _FieldSampler(ff)
        self.n = len(graph.nodes)
        self.comp = np.zeros(self.n, dtype=int) if comp is None else comp
        self.n_comp = int(self.comp.max()) + 1 if self.n else 0
        self.edge_comp = self.comp[self.edges[:, 0]] if len(self.edges) else np.zeros(0, dtype=int)

    def terms(self, X, nodes=None, edges=None):
        """Data energy of ``nodes``, segment energy of ``edges``, and the gradient.

        ``nodes``/``edges`` are index arrays (default: all). The returned
        gradient has one row per entry of ``nodes``; it is only complete if
        ``edges`` holds every edge incident to those nodes.
        """
        p = self.params
        nodes = np.arange(self.n) if nodes is None else nodes
        E = self.edges if edges is None else self.edges[edges]
        Xn = X[nodes]
        val, gx, gy = self.sampler(Xn[:, 0], Xn[:, 1])
        node_e = p.lambda_data * (1.0 - val)
        full_gx = np.zeros(self.n)
        full_gy = np.zeros(self.n)
        edge_e = np.zeros(len(E))
        if len(E):
            i, j = E[:, 0], E[:, 1]
            d = X[j] - X[i]
            length = np.hypot(d[:, 0], d[:, 1])
            ok = length > 1e-12
            safe = np.where(ok, length, 1.0)
            ux, uy = d[:, 0] / safe, d[:, 1] / safe
            z2 = (ux + 1j * uy) ** 2
            (k0, k1), (k0x, k1x), (k0y, k1y) = self.field((X[i, 0] + X[j, 0]) / 2.0, (X[i, 1] + X[j, 1]) / 2.0)
            g = z2 * z2 + k1 * z2 + k0
            cg = np.conj(g)
            a = g.real**2 + g.imag**2
            da = 2.0 * np.real(cg * (4j * z2 * z2 + 2j * k1 * z2))
            am_x = np.real(cg * (k0x + z2 * k1x)) * length
            am_y = np.real(cg * (k0y + z2 * k1y)) * length
            # d(A * L)/dd = A * u + A'(phi) * n, with n the left normal
            dd_x = np.where(ok, a * ux - da * uy, 0.0)
            dd_y = np.where(ok, a * uy + da * ux, 0.0)
            edge_e = p.lambda_ff * a * length + p.lambda_internal * length**2
            lf, li = p.lambda_ff, 2.0 * p.lambda_internal
            # am_* already carries the factor 1/2 of the midpoint derivative
            gjx = lf * (dd_x + am_x) + li * d[:, 0]
            gjy = lf * (dd_y + am_y) + li * d[:, 1]
            gix = lf * (-dd_x + am_x) - li * d[:, 0]
            giy = lf * (-dd_y + am_y) - li * d[:, 1]
            full_gx += np.bincount(j, weights=gjx, minlength=self.n) + np.bincount(i, weights=gix, minlength=self.n)
            full_gy += np.bincount(j, weights=gjy, minlength=self.n) + np.bincount(i, weights=giy, minlength=self.n)
        grad = np.stack([full_gx[nodes] - p.lambda_data * gx, full_gy[nodes] - p.lambda_data * gy], axis=1)
        return node_e, edge_e, grad

    def per_component(self, node_e, edge_e, nodes=None, edges=None):
        nc = self.comp if nodes is None else self.comp[nodes]
        ec = self.edge_comp if edges is None else self.edge_comp[edges]
        e = np.bincount(nc, weights=node_e, minlength=self.n_comp)
        if len(ec):
            e += np.bincount(ec, weights=edge_e, minlength=self.n_comp)
        return e

    def total(self, X):
        node_e, edge_e, _ = self.terms(X)
        return float(np.sum(node_e) + np.sum(edge_e))


def components(graph):
    n = len(graph.nodes)
    if n == 0:
        return 0, np.zeros(0, dtype=int)
    e = graph.edges
    m = coo_matrix((np.ones(len(e)), (e[:, 0], e[:, 1])), shape=(n, n)) if len(e) else coo_matrix((n, n))
    return connected_components(m, directed=False)


def _check_finite(X, node_e, edge_e, edges, nodes=None):
    """Raise naming the first node whose energy, or an incident segment's, is not finite."""
    if np.all(np.isfinite(node_e)) and np.all(np.isfinite(edge_e)):
        return
    bad = np.flatnonzero(~np.isfinite(node_e))
    if len(bad):
        k = int(bad[0]) if nodes is None else int(nodes[bad[0]])
    else:
        k = int(edges[np.flatnonzero(~np.isfinite(edge_e))[0], 0])
    raise FloatingPointError(f"non-finite ACM energy at node {k} (x={X[k, 0]!r}, y={X[k, 1]!r})")


def acm_refine(g, f_int, f_edge, ff, p=AcmParams(), trace=None):
    """Move skeleton nodes toward the edge ridge and the frame field directions.

    ``f_int`` is accepted for interface symmetry; the energy uses ``f_edge``
    (sampled with a cubic B-spline) and the frame field (bilinear). If
    ``trace`` is a list, the total energy after every lockstep round is
    appended to it, starting with the initial energy.
    """
    shape = np.shape(f_edge)
    if np.shape(f_int) != shape or ff.shape != shape:
        raise ValueError("f_int, f_edge and the frame field must share dimensions")
    h, w = shape
    X = g.nodes.copy()
    if len(X) == 0 or p.max_iters == 0:
        if trace is not None and len(X):
            trace.append(AcmEnergy(g, f_edge, ff, p).total(X))
        return SkeletonGraph(X, g.edges.copy())
    if np.any(X < 0) or np.any(X[:, 0] > w) or np.any(X[:, 1] > h):
        raise ValueError("graph nodes lie outside the raster")
    n_comp, comp = components(g)
    energy = AcmEnergy(g, f_edge, ff, p, comp)
    node_e, edge_e, grad = energy.terms(X)
    _check_finite(X, node_e, edge_e, g.edges)
    E = energy.per_component(node_e, edge_e)
    if trace is not None:
        trace.append(float(E.sum()))
    # alpha multiplies the gradient; the first trial moves the steepest node step0 px
    gmax = _comp_max(np.hypot(grad[:, 0], grad[:, 1]), comp, n_comp)
    alpha = p.step0 / np.where(gmax > 0, gmax, 1.0)
    iters = np.zeros(n_comp, dtype=int)
    halvings = np.zeros(n_comp, dtype=int)
    active = gmax > 0
    lo = np.zeros(2)
    hi = np.array([w, h], dtype=float)
    while active.any():
        nodes = np.flatnonzero(active[comp])
        edges = np.flatnonzero(active[energy.edge_comp])
        # never move any node further than step0 in one trial
        cap = p.step0 / np.where(gmax > 0, gmax, 1.0)
        a = np.minimum(alpha, cap)
        trial = X.copy()
        trial[nodes] = np.clip(X[nodes] - a[comp[nodes]][:, None] * grad[nodes], lo, hi)
        t_node, t_edge, t_grad = energy.terms(trial, nodes, edges)
        _check_finite(trial, t_node, t_edge, g.edges[edges], nodes)
        E_trial = energy.per_component(t_node, t_edge, nodes, edges)
        accept = active & (E_trial < E)
        reject = active & ~accept
        if accept.any():
            moved = accept[comp[nodes]]
            idx = nodes[moved]
            ci = comp[idx]
            s = trial[idx] - X[idx]
            y = t_grad[moved] - grad[idx]
            disp = _comp_max(np.hypot(s[:, 0], s[:, 1]), ci, n_comp)
            ss = np.bincount(ci, weights=np.einsum("ij,ij->i", s, s), minlength=n_comp)
            sy = np.bincount(ci, weights=np.einsum("ij,ij->i", s, y), minlength=n_comp)
            X[idx] = trial[idx]
            # components are independent, so accepted nodes take the trial gradient
            grad[idx] = t_grad[moved]
            gmax[accept] = _comp_max(np.hypot(grad[idx, 0], grad[idx, 1]), ci, n_comp)[accept]
            E[accept] = E_trial[accept]
            iters[accept] += 1
            halvings[accept] = 0
            # Barzilai-Borwein step for the next trial, doubling where curvature is not positive
            bb = np.where(sy > 0, ss / np.where(sy > 0, sy, 1.0), 2.0 * a)
            alpha[accept] = bb[accept]
            active &= ~(accept & ((disp < p.tol) | (iters >= p.max_iters) | (gmax == 0)))
        alpha[reject] = a[reject] / 2.0
        halvings[reject] += 1
        active &= ~(reject & (halvings > p.max_halvings))
        if trace is not None:
            trace.append(float(E.sum()))
    return SkeletonGraph(X, g.edges.copy())


def _comp_max(values, comp, n_comp):
    out = np.zeros(n_comp)
    np.maximum.at(out, comp, values)
    return out
