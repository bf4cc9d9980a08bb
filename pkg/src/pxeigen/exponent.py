"""Variable exponents p(x) on a bounding box.

Three kinds are supported: a constant, an affine function
``p(x) = a0 + a1*x1 + ... + ad*xd`` and nodal samples on a uniform grid that
are interpolated multilinearly.  Every exponent carries an integer scale
factor ``j`` so that ``jp(x)`` shares its logarithmic gradient with ``p(x)``
bit for bit.
"""

from __future__ import annotations

import numpy as np

from .errors import DomainError

KINDS = ("constant", "affine", "sampled")

_BOX_RTOL = 1e-12


def _as_bounds(bounds):
    b = np.asarray(bounds, dtype=float)
    if b.ndim == 1:
        b = b.reshape(1, 2)
    if b.ndim != 2 or b.shape[1] != 2 or b.shape[0] not in (1, 2):
        raise ValueError("bounds must be (a, b) or [(a1, b1), (a2, b2)]")
    if np.any(b[:, 1] <= b[:, 0]):
        raise ValueError("bounds must satisfy a < b on every axis")
    return b


class VariableExponent:
    """Exponent field ``p(x)`` with cached bounds and Lipschitz constant.

    Use the :meth:`constant`, :meth:`affine` and :meth:`sampled`
    constructors.  Instances are immutable.

    Attributes:
        kind: one of ``"constant"``, ``"affine"``, ``"sampled"``.
        bounds: ``(d, 2)`` array with the bounding box of the domain.
        scale: integer multiplier ``j`` applied to the base field.
        p_minus, p_plus: lower and upper bounds of ``p`` over the box.
        lipschitz_bound: upper bound for ``|grad p|`` over the box.
    """

    def __init__(self, kind, bounds, *, value=None, coeffs=None, samples=None, scale=1):
        if kind not in KINDS:
            raise ValueError(f"unknown exponent kind {kind!r}")
        if int(scale) != scale or scale < 1:
            raise ValueError("scale must be a positive integer")
        self.kind = kind
        self.bounds = _as_bounds(bounds)
        self.bounds.setflags(write=False)
        self.dim = self.bounds.shape[0]
        self.scale = int(scale)
        self.value = None
        self.coeffs = None
        self.samples = None

        if kind == "constant":
            if value is None or not np.isfinite(value):
                raise ValueError("constant exponent needs a finite value")
            self.value = float(value)
            lo = hi = self.value
            lip = 0.0
        elif kind == "affine":
            c = np.asarray(coeffs, dtype=float).ravel()
            if c.size != self.dim + 1 or not np.all(np.isfinite(c)):
                raise ValueError(f"affine exponent needs {self.dim + 1} finite coefficients")
            self.coeffs = c
            self.coeffs.setflags(write=False)
            corners = np.array(np.meshgrid(*self.bounds, indexing="ij")).reshape(self.dim, -1).T
            vals = c[0] + corners @ c[1:]
            lo, hi = float(vals.min()), float(vals.max())
            lip = float(np.linalg.norm(c[1:]))
        else:
            s = np.array(samples, dtype=float)
            if s.ndim != self.dim or min(s.shape) < 2:
                raise ValueError(f"sampled exponent needs a {self.dim}-D grid with >= 2 nodes per axis")
            if not np.all(np.isfinite(s)):
                raise ValueError("sampled exponent contains non-finite values")
            self.samples = s
            self.samples.setflags(write=False)
            self._steps = np.array([(b1 - b0) / (n - 1) for (b0, b1), n in zip(self.bounds, s.shape)])
            lo, hi = float(s.min()), float(s.max())
            lip = self._sampled_lipschitz()

        self.p_minus = self.scale * lo
        self.p_plus = self.scale * hi
        self.lipschitz_bound = self.scale * lip
        if not (self.p_minus > 1.0):
            raise ValueError(f"exponent bounds violated: p- = {self.p_minus:g} must exceed 1")
        if not np.isfinite(self.p_plus):
            raise ValueError("exponent bounds violated: p+ must be finite")

    # -- constructors -------------------------------------------------------

    @classmethod
    def constant(cls, value, bounds=(0.0, 1.0)):
        return cls("constant", bounds, value=value)

    @classmethod
    def affine(cls, coeffs, bounds=(0.0, 1.0)):
        return cls("affine", bounds, coeffs=coeffs)

    @classmethod
    def sampled(cls, samples, bounds=(0.0, 1.0)):
        return cls("sampled", bounds, samples=samples)

    def scaled(self, j):
        """Return ``j * p`` as a new exponent; ``j`` must be a positive integer."""
        if int(j) != j or j < 1:
            raise ValueError(f"scale factor must be a positive integer, got {j!r}")
        return VariableExponent(
            self.kind,
            self.bounds,
            value=self.value,
            coeffs=self.coeffs,
            samples=self.samples,
            scale=self.scale * int(j),
        )

    @property
    def is_constant(self):
        return self.kind == "constant"

    # -- evaluation ---------------------------------------------------------

    def _points(self, x):
        pts = np.asarray(x, dtype=float)
        if self.dim == 1:
            if pts.ndim >= 2 and pts.shape[-1] == 1:
                pts = pts[..., 0]
            pts = pts[..., None]
        elif pts.shape[-1] != self.dim:
            raise ValueError(f"points must have trailing dimension {self.dim}")
        span = self.bounds[:, 1] - self.bounds[:, 0]
        tol = _BOX_RTOL * span
        if np.any(pts < self.bounds[:, 0] - tol) or np.any(pts > self.bounds[:, 1] + tol):
            raise DomainError("point outside the exponent's bounding box")
        return pts

    def _cell_coords(self, pts):
        """Cell index and local coordinate in [0, 1] along every axis."""
        t = (pts - self.bounds[:, 0]) / self._steps
        n = np.array(self.samples.shape) - 1
        idx = np.clip(np.floor(t).astype(int), 0, n - 1)
        return idx, np.clip(t - idx, 0.0, 1.0)

    def _base_value(self, pts):
        if self.kind == "constant":
            return np.full(pts.shape[:-1], self.value)
        if self.kind == "affine":
            return self.coeffs[0] + pts @ self.coeffs[1:]
        idx, f = self._cell_coords(pts)
        s = self.samples
        if self.dim == 1:
            i = idx[..., 0]
            return (1 - f[..., 0]) * s[i] + f[..., 0] * s[i + 1]
        i, j = idx[..., 0], idx[..., 1]
        fx, fy = f[..., 0], f[..., 1]
        return ((1 - fx) * (1 - fy) * s[i, j] + fx * (1 - fy) * s[i + 1, j]
                + (1 - fx) * fy * s[i, j + 1] + fx * fy * s[i + 1, j + 1])

    def _base_grad(self, pts):
        if self.kind == "constant":
            return np.zeros(pts.shape)
        if self.kind == "affine":
            return np.broadcast_to(self.coeffs[1:], pts.shape).copy()
        idx, f = self._cell_coords(pts)
        s = self.samples
        hs = self._steps
        if self.dim == 1:
            i = idx[..., 0]
            return ((s[i + 1] - s[i]) / hs[0])[..., None]
        i, j = idx[..., 0], idx[..., 1]
        fx, fy = f[..., 0], f[..., 1]
        gx = ((1 - fy) * (s[i + 1, j] - s[i, j]) + fy * (s[i + 1, j + 1] - s[i, j + 1])) / hs[0]
        gy = ((1 - fx) * (s[i, j + 1] - s[i, j]) + fx * (s[i + 1, j + 1] - s[i + 1, j])) / hs[1]
        return np.stack([gx, gy], axis=-1)

    def _sampled_lipschitz(self):
        s = self.samples
        parts = []
        for ax in range(self.dim):
            d = np.abs(np.diff(s, axis=ax)) / self._steps[ax]
            parts.append(d.max())
        return float(np.sqrt(np.sum(np.square(parts))))

    def __call__(self, x):
        """Evaluate ``p`` at one point or an array of points."""
        return self.scale * self._base_value(self._points(x))

    def grad_ln(self, x):
        """``grad p / p`` at the given points, shape ``(..., d)``.

        Independent of the scale factor by construction.
        """
        pts = self._points(x)
        return self._base_grad(pts) / self._base_value(pts)[..., None]

    def to_dict(self):
        d = {"kind": self.kind}
        if self.kind == "constant":
            d["value"] = self.value
        elif self.kind == "affine":
            d["coeffs"] = [float(c) for c in self.coeffs]
        if self.scale != 1:
            d["scale"] = self.scale
        return d

    def __repr__(self):
        return (f"VariableExponent(kind={self.kind!r}, scale={self.scale}, "
                f"p_minus={self.p_minus:g}, p_plus={self.p_plus:g})")


def eval_p(exp, x):
    """``p(x)``; raises :class:`DomainError` outside the bounding box."""
    return exp(x)


def grad_ln_p(exp, x):
    return exp.grad_ln(x)


def scale_exponent(exp, j):
    return exp.scaled(j)
