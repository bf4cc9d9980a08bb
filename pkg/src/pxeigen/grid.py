"""Uniform grids over intervals, rectangles and masked planar regions.

Nodes are classified as interior, boundary or exterior.  Nodal fields live on
the full node array (exterior values are zero).  Gradients that enter the
energy integrals are taken per element: segments in 1-D and the two right
triangles of every grid cell in 2-D, so a nodal field is a continuous
piecewise-linear function.
"""

from __future__ import annotations

from functools import cached_property

import numpy as np
import scipy.sparse as sp
from scipy import ndimage

from .errors import DegenerateDomainError

EXTERIOR, BOUNDARY, INTERIOR = 0, 1, 2

_ALIGN_RTOL = 1e-9


class GriddedDomain:
    """A uniform node grid with spacing ``h`` and node labels.

    Prefer the :meth:`interval`, :meth:`rectangle` and :meth:`from_mask`
    constructors.  ``labels`` holds one of ``EXTERIOR``, ``BOUNDARY``,
    ``INTERIOR`` per node; arrays are indexed ``[i]`` or ``[i, j]`` with
    axis 0 along ``x``.
    """

    def __init__(self, kind, bounds, h, labels):
        self.kind = kind
        self.bounds = np.asarray(bounds, dtype=float).reshape(-1, 2)
        self.dim = self.bounds.shape[0]
        self.h = float(h)
        if not self.h > 0:
            raise ValueError("grid spacing must be positive")
        self.labels = np.asarray(labels, dtype=np.int8)
        self.labels.setflags(write=False)
        self.shape = self.labels.shape
        if len(self.shape) != self.dim:
            raise ValueError("label array rank does not match the bounds")

    @classmethod
    def interval(cls, a=0.0, b=1.0, n=256):
        """``(a, b)`` split into ``n`` cells; the two end nodes are boundary."""
        if n < 2:
            raise ValueError("an interval needs at least 2 cells")
        labels = np.full(n + 1, INTERIOR, dtype=np.int8)
        labels[[0, -1]] = BOUNDARY
        return cls("interval", [(a, b)], (b - a) / n, labels)

    @classmethod
    def rectangle(cls, bounds=((0.0, 1.0), (0.0, 1.0)), n=64):
        """Rectangle with ``n`` cells along x; the y side must be a multiple of h."""
        b = np.asarray(bounds, dtype=float)
        h = (b[0, 1] - b[0, 0]) / n
        ny = (b[1, 1] - b[1, 0]) / h
        if abs(ny - round(ny)) > _ALIGN_RTOL * max(1.0, ny) or round(ny) < 2:
            raise ValueError("rectangle sides must be commensurate with the grid spacing")
        labels = np.full((n + 1, int(round(ny)) + 1), INTERIOR, dtype=np.int8)
        labels[[0, -1], :] = BOUNDARY
        labels[:, [0, -1]] = BOUNDARY
        return cls("rectangle", b, h, labels)

    @classmethod
    def from_mask(cls, mask, bounds):
        """Region given by a boolean raster; ``mask[i, j]`` sits at ``(x_i, y_j)``.

        Mask nodes with a 4-neighbour outside the mask (or on the raster edge)
        become boundary nodes.
        """
        m = np.asarray(mask, dtype=bool)
        if m.ndim != 2:
            raise ValueError("mask must be a 2-D raster")
        b = np.asarray(bounds, dtype=float)
        hx = (b[0, 1] - b[0, 0]) / (m.shape[0] - 1)
        hy = (b[1, 1] - b[1, 0]) / (m.shape[1] - 1)
        if abs(hx - hy) > _ALIGN_RTOL * hx:
            raise ValueError("mask spacing must be equal along x and y")
        padded = np.pad(m, 1, constant_values=False)
        full = (padded[:-2, 1:-1] & padded[2:, 1:-1] & padded[1:-1, :-2] & padded[1:-1, 2:])
        labels = np.where(m, np.where(full, INTERIOR, BOUNDARY), EXTERIOR).astype(np.int8)
        return cls("mask", b, hx, labels)

    # -- node sets ------------------------------------------------------------

    @property
    def interior(self):
        return self.labels == INTERIOR

    @property
    def boundary(self):
        return self.labels == BOUNDARY

    @property
    def closure(self):
        """Interior and boundary nodes together."""
        return self.labels != EXTERIOR

    @property
    def n_interior(self):
        return int(np.count_nonzero(self.interior))

    @cached_property
    def coordinates(self):
        return [np.linspace(b0, b1, n) for (b0, b1), n in zip(self.bounds, self.shape)]

    @cached_property
    def points(self):
        """Node coordinates, shape ``self.shape + (dim,)``."""
        grids = np.meshgrid(*self.coordinates, indexing="ij")
        return np.stack(grids, axis=-1)

    @cached_property
    def weights(self):
        """Quadrature weight per node (trapezoid rule on boxes, zero outside)."""
        h = self.h
        if self.kind in ("interval", "rectangle"):
            w1 = []
            for n in self.shape:
                w = np.full(n, h)
                w[[0, -1]] = h / 2
                w1.append(w)
            w = w1[0] if self.dim == 1 else np.outer(w1[0], w1[1])
        else:
            w = np.where(self.interior, h**self.dim, np.where(self.boundary, h**self.dim / 2, 0.0))
        w.setflags(write=False)
        return w

    def node_index(self, x):
        """Index tuple of the node nearest to point ``x``."""
        pt = np.atleast_1d(np.asarray(x, dtype=float))
        idx = np.rint((pt - self.bounds[:, 0]) / self.h).astype(int)
        idx = np.clip(idx, 0, np.array(self.shape) - 1)
        return tuple(int(i) for i in idx)

    def same_as(self, other):
        return other is self or (
            isinstance(other, GriddedDomain)
            and self.shape == other.shape
            and self.h == other.h
            and np.array_equal(self.bounds, other.bounds)
            and np.array_equal(self.labels, other.labels)
        )

    # -- elements -------------------------------------------------------------

    @cached_property
    def elements(self):
        """Element data: gradient operators, measures and centroids."""
        return _build_elements(self)

    def field(self, values):
        return ScalarField(self, values)

    def zeros(self):
        return ScalarField(self, np.zeros(self.shape))

    def __repr__(self):
        return (f"GriddedDomain(kind={self.kind!r}, shape={self.shape}, h={self.h:g}, "
                f"interior={self.n_interior})")


class _Elements:
    def __init__(self, grad_ops, measure, centroids):
        self.grad_ops = grad_ops          # list of sparse (n_elem, n_nodes), one per axis
        self.measure = measure            # (n_elem,)
        self.centroids = centroids        # (n_elem, dim)

    def gradient(self, values):
        """Element gradients of a flattened nodal vector, shape ``(n_elem, dim)``."""
        return np.stack([g @ values for g in self.grad_ops], axis=-1)

    def divergence(self, vec):
        """Transpose action: ``sum_e measure_e * <vec_e, grad phi_i>`` per node."""
        out = self.grad_ops[0].T @ (self.measure * vec[:, 0])
        for ax in range(1, len(self.grad_ops)):
            out = out + self.grad_ops[ax].T @ (self.measure * vec[:, ax])
        return out


def _build_elements(dom):
    h = dom.h
    if dom.dim == 1:
        n = dom.shape[0]
        rows = np.arange(n - 1)
        data = np.concatenate([-np.ones(n - 1), np.ones(n - 1)]) / h
        g = sp.csr_matrix((data, (np.concatenate([rows, rows]), np.concatenate([rows, rows + 1]))),
                          shape=(n - 1, n))
        centroids = (dom.coordinates[0][:-1] + h / 2)[:, None]
        return _Elements([g], np.full(n - 1, h), centroids)

    nx, ny = dom.shape
    flat = np.arange(nx * ny).reshape(nx, ny)
    ok = dom.closure
    i, j = np.meshgrid(np.arange(nx - 1), np.arange(ny - 1), indexing="ij")
    i, j = i.ravel(), j.ravel()
    v00, v10, v01, v11 = flat[i, j], flat[i + 1, j], flat[i, j + 1], flat[i + 1, j + 1]
    lower = ok[i, j] & ok[i + 1, j] & ok[i, j + 1]
    upper = ok[i + 1, j + 1] & ok[i, j + 1] & ok[i + 1, j]
    x0 = dom.coordinates[0][i]
    y0 = dom.coordinates[1][j]

    # lower triangle (v00, v10, v01): gx = (v10 - v00)/h, gy = (v01 - v00)/h
    # upper triangle (v11, v01, v10): gx = (v11 - v01)/h, gy = (v11 - v10)/h
    lo = np.flatnonzero(lower)
    up = np.flatnonzero(upper)
    n_lo, n_up = lo.size, up.size
    n_el = n_lo + n_up
    e_lo = np.arange(n_lo)
    e_up = n_lo + np.arange(n_up)

    def op(minus_lo, plus_lo, minus_up, plus_up):
        r = np.concatenate([e_lo, e_lo, e_up, e_up])
        c = np.concatenate([minus_lo, plus_lo, minus_up, plus_up])
        d = np.concatenate([-np.ones(n_lo), np.ones(n_lo), -np.ones(n_up), np.ones(n_up)]) / h
        return sp.csr_matrix((d, (r, c)), shape=(n_el, nx * ny))

    gx = op(v00[lo], v10[lo], v01[up], v11[up])
    gy = op(v00[lo], v01[lo], v10[up], v11[up])
    centroids = np.concatenate([
        np.stack([x0[lo] + h / 3, y0[lo] + h / 3], axis=-1),
        np.stack([x0[up] + 2 * h / 3, y0[up] + 2 * h / 3], axis=-1),
    ])
    return _Elements([gx, gy], np.full(n_el, h * h / 2), centroids)


class ScalarField:
    """Nodal values of a function on a :class:`GriddedDomain`.

    Values are copied on construction and exterior nodes are forced to 0.
    """

    __array_priority__ = 100

    def __init__(self, domain, values):
        v = np.array(values, dtype=float)
        if v.shape != domain.shape:
            v = v.reshape(domain.shape)
        v[~domain.closure] = 0.0
        self.domain = domain
        self.values = v

    def copy(self):
        return ScalarField(self.domain, self.values)

    def _check(self, other):
        if not self.domain.same_as(other.domain):
            raise ValueError("fields live on different domains")

    def __mul__(self, c):
        return ScalarField(self.domain, self.values * float(c))

    __rmul__ = __mul__

    def __truediv__(self, c):
        return ScalarField(self.domain, self.values / float(c))

    def __add__(self, other):
        self._check(other)
        return ScalarField(self.domain, self.values + other.values)

    def __sub__(self, other):
        self._check(other)
        return ScalarField(self.domain, self.values - other.values)

    def __neg__(self):
        return ScalarField(self.domain, -self.values)

    def __abs__(self):
        return ScalarField(self.domain, np.abs(self.values))

    def vanishes_on_boundary(self):
        return bool(np.all(self.values[self.domain.boundary] == 0.0))

    def __repr__(self):
        return f"ScalarField(shape={self.values.shape}, max={np.max(np.abs(self.values)):.6g})"


# -- operations ----------------------------------------------------------------

def _edt(dom):
    if dom.n_interior == 0:
        raise DegenerateDomainError("domain has no interior nodes")
    if not np.any(dom.boundary):
        raise DegenerateDomainError("domain has no boundary nodes")
    dist, idx = ndimage.distance_transform_edt(~dom.boundary, sampling=dom.h, return_indices=True)
    dist[~dom.closure] = 0.0
    return dist, idx


def distance_function(dom):
    """Exact Euclidean distance from every node to the nearest boundary node."""
    dist, _ = _edt(dom)
    return ScalarField(dom, dist)


def inradius_and_lambda_infinity(dom):
    """Return ``(R, 1/R)`` with ``R`` the largest nodal distance to the boundary."""
    r = float(distance_function(dom).values.max())
    if r <= 0:
        raise DegenerateDomainError("inradius is zero")
    return r, 1.0 / r


def ridge_mask(dom):
    """Nodes near the ridge (medial axis) of the distance function.

    A closed node is on the ridge when a neighbouring node's nearest boundary
    node lies more than ``2h`` away from its own nearest boundary node.
    """
    _, idx = _edt(dom)
    feat = np.moveaxis(idx, 0, -1).astype(float) * dom.h
    ridge = np.zeros(dom.shape, dtype=bool)
    offsets = [(-1,), (1,)] if dom.dim == 1 else [
        (a, b) for a in (-1, 0, 1) for b in (-1, 0, 1) if (a, b) != (0, 0)]
    core = tuple(slice(1, n - 1) for n in dom.shape)
    for off in offsets:
        sl = tuple(slice(1 + o, n - 1 + o) for o, n in zip(off, dom.shape))
        sep = np.linalg.norm(feat[core] - feat[sl], axis=-1)
        ridge[core] |= (sep > 2.0 * dom.h + 1e-12) & dom.closure[sl]
    return ridge & dom.interior


def distance_to_ridge(dom):
    ridge = ridge_mask(dom)
    if not ridge.any():
        return np.full(dom.shape, np.inf)
    return ndimage.distance_transform_edt(~ridge, sampling=dom.h)


def gradient(f):
    """Nodal gradient, shape ``shape + (dim,)``.

    Central differences where both neighbours along an axis are closed nodes,
    one-sided differences where only one is, zero otherwise.
    """
    dom = f.domain
    v = f.values
    ok = dom.closure
    out = np.zeros(dom.shape + (dom.dim,))
    for ax in range(dom.dim):
        fwd = np.zeros(dom.shape)
        bwd = np.zeros(dom.shape)
        has_f = np.zeros(dom.shape, dtype=bool)
        has_b = np.zeros(dom.shape, dtype=bool)
        lo = [slice(None)] * dom.dim
        hi = [slice(None)] * dom.dim
        lo[ax] = slice(0, -1)
        hi[ax] = slice(1, None)
        lo, hi = tuple(lo), tuple(hi)
        diff = (v[hi] - v[lo]) / dom.h
        fwd[lo] = diff
        has_f[lo] = ok[hi]
        bwd[hi] = diff
        has_b[hi] = ok[lo]
        both = has_f & has_b
        out[..., ax] = np.where(both, 0.5 * (fwd + bwd),
                                np.where(has_f, fwd, np.where(has_b, bwd, 0.0)))
    out[~ok] = 0.0
    return out


def integrate(f, weight=None):
    """Quadrature of ``f * weight`` with the domain's nodal weights."""
    dom = f.domain
    vals = f.values
    if weight is not None:
        if not dom.same_as(weight.domain):
            raise ValueError("integrand and weight live on different domains")
        vals = vals * weight.values
    return float(np.sum(vals * dom.weights))
