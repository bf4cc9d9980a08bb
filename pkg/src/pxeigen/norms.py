"""Modulars, Luxemburg norms and the two Rayleigh quotients.

A modular is a weighted power sum ``sum_i w_i |a_i / gamma|^(p_i)``.  The
Luxemburg norm is the ``gamma`` at which it equals one.  The root is found in
``t = ln(gamma)``, where the log-modular ``phi(t) = logsumexp(c_i - p_i t)``
is convex and strictly decreasing, so Newton's method started at the left
end of a bracket increases monotonically to the root.  Everything stays in
log space, which keeps exponents of order 10^3 free of overflow.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .exponent import VariableExponent

ONE_OVER_P = "one-over-p"
PLAIN = "plain"
WEIGHT_MODES = (ONE_OVER_P, PLAIN)

#: Above this exponent modulars are accumulated by log-sum-exp.
LOG_SPACE_THRESHOLD = 50.0

_MAX_NEWTON = 200


@dataclass(frozen=True)
class ModularSpec:
    """Exponent plus measure: ``dx/p(x)`` (``"one-over-p"``) or ``dx`` (``"plain"``)."""

    exponent: VariableExponent
    weight_mode: str = ONE_OVER_P

    def __post_init__(self):
        if self.weight_mode not in WEIGHT_MODES:
            raise ValueError(f"weight_mode must be one of {WEIGHT_MODES}, got {self.weight_mode!r}")


def _as_spec(spec):
    if isinstance(spec, VariableExponent):
        return ModularSpec(spec)
    return spec


# -- sample-level kernels ---------------------------------------------------------

class PowerSamples:
    """Magnitudes ``a``, exponents ``p`` and quadrature weights ``w`` (zeros dropped).

    ``w`` already contains the ``1/p`` factor when one is wanted.
    """

    def __init__(self, a, p, w):
        a = np.abs(np.asarray(a, dtype=float)).ravel()
        p = np.broadcast_to(np.asarray(p, dtype=float), a.shape).ravel()
        w = np.broadcast_to(np.asarray(w, dtype=float), a.shape).ravel()
        if not np.all(np.isfinite(a)):
            raise DataError("field contains non-finite values")
        keep = (a > 0) & (w > 0)
        self.empty = not keep.any()
        self.a = a[keep]
        self.p = p[keep]
        self.w = w[keep]
        if not self.empty:
            self.log_a = np.log(self.a)
            self.c = self.p * self.log_a + np.log(self.w)

    def modular(self, gamma):
        if gamma <= 0:
            raise ValueError("gamma must be positive")
        if self.empty:
            return 0.0
        if self.p.max() <= LOG_SPACE_THRESHOLD:
            return float(np.sum((self.a / gamma) ** self.p * self.w))
        return float(np.exp(self.log_modular(np.log(gamma))[0]))

    def log_modular(self, t):
        """``(phi(t), phi'(t))`` with ``phi = ln(modular(e^t))``."""
        z = self.c - self.p * t
        m = z.max()
        e = np.exp(z - m)
        s = e.sum()
        return m + np.log(s), -float(np.dot(self.p, e)) / s

    def norm(self):
        """Root ``gamma`` of ``modular(gamma) = 1``; zero for an all-zero field."""
        if self.empty:
            return 0.0
        log_max = self.log_a.max()
        k = int(np.argmax(self.log_a))
        lo = log_max + min(0.0, np.log(self.w[k]) / self.p[k])
        hi = log_max + max(0.0, np.log(self.w.sum()) / self.p.min())
        t = lo
        for _ in range(_MAX_NEWTON):
            phi, dphi = self.log_modular(t)
            if phi == 0.0:
                return float(np.exp(t))
            if phi > 0:
                lo = t
            else:
                hi = t
            step = -phi / dphi
            t_new = t + step
            if not (lo <= t_new <= hi):
                t_new = 0.5 * (lo + hi)
            if abs(t_new - t) <= 1e-15 * max(1.0, abs(t)):
                return float(np.exp(t_new))
            t = t_new
        # Newton stalled: finish by bisection on the bracket
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if self.log_modular(mid)[0] > 0:
                lo = mid
            else:
                hi = mid
            if hi - lo <= 1e-15 * max(1.0, abs(mid)):
                break
        return float(np.exp(0.5 * (lo + hi)))

    def log_plain_integral(self):
        """``ln sum_i w_i a_i^p_i`` (``-inf`` when empty)."""
        if self.empty:
            return -np.inf
        z = self.c
        m = z.max()
        return float(m + np.log(np.exp(z - m).sum()))


def node_samples(f, exponent, weight_mode=ONE_OVER_P):
    dom = f.domain
    pts = dom.points[dom.closure]
    p = exponent(pts)
    w = dom.weights[dom.closure]
    if weight_mode == ONE_OVER_P:
        w = w / p
    return PowerSamples(f.values[dom.closure], p, w)


def gradient_samples(f, exponent, weight_mode=ONE_OVER_P):
    el = f.domain.elements
    g = el.gradient(f.values.ravel())
    p = exponent(el.centroids)
    w = el.measure / p if weight_mode == ONE_OVER_P else el.measure
    return PowerSamples(np.linalg.norm(g, axis=1), p, w)


# -- public operations -------------------------------------------------------------

def modular(f, spec, gamma):
    """``int |f/gamma|^p(x) w(x) dx`` with ``w = 1/p`` or ``1`` per ``spec``."""
    spec = _as_spec(spec)
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    return node_samples(f, spec.exponent, spec.weight_mode).modular(gamma)


def luxemburg_norm(f, spec):
    """Luxemburg norm of a nodal field; ``spec`` may be a bare exponent."""
    spec = _as_spec(spec)
    return node_samples(f, spec.exponent, spec.weight_mode).norm()


def gradient_norm(f, spec):
    """Luxemburg norm of ``|grad f|`` using element gradients."""
    spec = _as_spec(spec)
    return gradient_samples(f, spec.exponent, spec.weight_mode).norm()


def sup_norm(f):
    return float(np.max(np.abs(f.values)))


def norm_limit_table(f, p, j_list):
    """Rows ``(j, ||f||_{jp})`` for ascending ``j``."""
    js = [int(j) for j in j_list]
    if not js:
        raise ValueError("j_list must be nonempty")
    if any(b <= a for a, b in zip(js, js[1:])):
        raise ValueError("j_list must be strictly ascending")
    return [(j, luxemburg_norm(f, p.scaled(j))) for j in js]


def _require_nonzero(u):
    if not np.any(u.values):
        raise ValueError("the quotient is undefined for the zero function")


def rayleigh_quotient(u, p):
    """``||grad u||_p / ||u||_p``, both norms with the ``dx/p`` weight."""
    _require_nonzero(u)
    return gradient_norm(u, p) / luxemburg_norm(u, p)


def modular_rayleigh(u, p):
    """``int |grad u|^p dx / int |u|^p dx`` (plain measure, not homogeneous)."""
    _require_nonzero(u)
    top = gradient_samples(u, p, PLAIN).log_plain_integral()
    bottom = node_samples(u, p, PLAIN).log_plain_integral()
    return float(np.exp(top - bottom))


def hoelder_normalized(p, domain, tol=1e-6):
    """Whether ``int dx/p(x) = 1`` holds on ``domain`` within ``tol``."""
    pts = domain.points[domain.closure]
    total = float(np.sum(domain.weights[domain.closure] / p(pts)))
    return abs(total - 1.0) <= tol
