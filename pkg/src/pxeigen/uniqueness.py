"""Computable pieces of the comparison argument.

The transform ``g(t) = ln(1 + A(e^(a t) - 1)) / a`` with ``1 < A < 2`` is a
perturbation of the identity used to turn a supersolution into a strict
one.  This module evaluates it stably, checks its elementary inequalities,
computes the strict-supersolution margin ``mu`` and the comparison
condition ``3 ||(u2/m2)^2 grad ln p||_inf <= L``, and searches for the
largest box around a node on which that condition holds.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import PreconditionError
from .grid import ScalarField, gradient

SLACK = 1e-10


@dataclass(frozen=True)
class GTransform:
    A: float
    alpha: float = 2.0

    def __post_init__(self):
        if not 1.0 < self.A < 2.0:
            raise ValueError(f"A must lie in (1, 2), got {self.A!r}")
        if not self.alpha >= 1.0:
            raise ValueError(f"alpha must be at least 1, got {self.alpha!r}")


def _parts(gt, t):
    """``g - t``, ``g' - 1`` and ``g'`` without cancellation."""
    A, a = gt.A, gt.alpha
    em = np.exp(-a * t)
    one_minus = -np.expm1(-a * t)
    g_minus_t = np.log1p((A - 1.0) * one_minus) / a
    gp_minus_1 = (A - 1.0) * em / (A - (A - 1.0) * em)
    return g_minus_t, gp_minus_1, 1.0 + gp_minus_1


def g_eval(gt, t):
    """``(g(t), g'(t), g''(t))``; ``t`` may be an array, all entries >= 0."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0) or not np.all(np.isfinite(t)):
        raise ValueError("g is evaluated at finite t >= 0 only")
    g_minus_t, gp_minus_1, gp = _parts(gt, t)
    gpp = -gt.alpha * gp_minus_1 * gp
    if t.ndim == 0:
        return float(t + g_minus_t), float(gp), float(gpp)
    return t + g_minus_t, gp, gpp


# names of the checked relations, in report order
RELATIONS = (
    "0 < g - t",
    "g - t < (A-1)/alpha",
    "(A-1)/A e^(-alpha t) < g' - 1",
    "g' - 1 < (A-1) e^(-alpha t)",
    "g - t < (A/alpha)(e^(alpha t) - 1)(g' - 1)",
    "g'' = -alpha (g' - 1) g'",
    "0 < ln g'",
    "ln g' < g' - 1",
    "ln g' = ln A - alpha (g - t)",
)


@dataclass
class InequalityReport:
    """Per-relation violation counts over the samples."""

    n_samples: int
    violations: dict
    worst: dict = field(repr=False)

    @property
    def passed(self):
        return not any(self.violations.values())

    def violated(self):
        return [name for name in RELATIONS if self.violations[name]]


def _less(lhs, rhs, slack):
    """Indices where ``lhs < rhs`` fails by more than the relative slack."""
    scale = np.maximum(np.abs(lhs), np.abs(rhs))
    excess = lhs - rhs
    return excess > slack * scale, np.where(scale > 0, excess / np.where(scale > 0, scale, 1), excess)


def g_inequalities_check(gt, t_samples, A=None, slack=SLACK):
    """Check every relation at every sample.

    ``A`` optionally gives one value per sample (overriding ``gt.A``), which
    lets a single call cover randomized ``(t, A)`` pairs.
    """
    t = np.asarray(t_samples, dtype=float).ravel()
    if t.size == 0 or np.any(t <= 0):
        raise ValueError("t samples must be positive")
    a = gt.alpha
    Av = np.full(t.shape, gt.A) if A is None else np.broadcast_to(np.asarray(A, dtype=float), t.shape)
    if np.any(Av <= 1) or np.any(Av >= 2):
        raise ValueError("A samples must lie in (1, 2)")

    em = np.exp(-a * t)
    one_minus = -np.expm1(-a * t)
    gmt = np.log1p((Av - 1.0) * one_minus) / a
    gp1 = (Av - 1.0) * em / (Av - (Av - 1.0) * em)
    gp = 1.0 + gp1
    gpp = -a * gp1 * gp
    ln_gp = np.log1p(gp1)
    # (e^(a t) - 1)(g' - 1) rewritten with e^(-a t) factored out
    rhs3 = (Av / a) * one_minus * (Av - 1.0) / (Av - (Av - 1.0) * em)

    zero = np.zeros_like(t)
    checks = {
        RELATIONS[0]: _less(zero, gmt, slack),
        RELATIONS[1]: _less(gmt, (Av - 1.0) / a, slack),
        RELATIONS[2]: _less((Av - 1.0) / Av * em, gp1, slack),
        RELATIONS[3]: _less(gp1, (Av - 1.0) * em, slack),
        RELATIONS[4]: _less(gmt, rhs3, slack),
        RELATIONS[6]: _less(zero, ln_gp, slack),
        RELATIONS[7]: _less(ln_gp, gp1, slack),
    }
    # identities are compared against the size of the terms they combine
    for name, lhs, rhs, terms in (
            (RELATIONS[5], gpp, -a * gp1 * gp, np.abs(gpp)),
            (RELATIONS[8], ln_gp, np.log(Av) - a * gmt, np.log(Av))):
        scale = np.maximum(np.maximum(np.abs(lhs), np.abs(rhs)), terms)
        err = np.abs(lhs - rhs)
        checks[name] = (err > slack * scale, np.where(scale > 0, err / np.where(scale > 0, scale, 1), err))

    violations = {name: int(np.count_nonzero(checks[name][0])) for name in RELATIONS}
    worst = {name: float(np.max(checks[name][1])) for name in RELATIONS}
    return InequalityReport(t.size, violations, worst)


# -- field diagnostics -------------------------------------------------------------

def _region(dom, region):
    if region is None:
        return dom.interior.copy()
    r = np.asarray(region, dtype=bool)
    if r.shape != dom.shape:
        raise ValueError("region mask has the wrong shape")
    return r & dom.closure


def _grad_ln_p_norm(p, dom, mask):
    return np.linalg.norm(p.grad_ln(dom.points[mask]), axis=-1)


def strict_margin_mu(gt, v, p, lambda_, region=None):
    """Margin ``mu`` per node of ``region`` (zero elsewhere).

    ``mu = (A-1)/A |grad w|^3 e^(-2v) (L - ||e^(2v) grad ln p||_inf)`` with
    ``grad w = g'(v) grad v``.  The formula belongs to ``alpha = 2``.
    """
    if gt.alpha != 2.0:
        raise ValueError("the margin formula holds for alpha = 2")
    dom = v.domain
    mask = _region(dom, region)
    if not mask.any():
        raise ValueError("empty evaluation region")
    vals = v.values[mask]
    if np.any(vals <= 0):
        raise PreconditionError("v must be positive on the evaluation region")
    sup = float(np.max(np.exp(2 * vals) * _grad_ln_p_norm(p, dom, mask)))
    if not sup < lambda_:
        raise PreconditionError(
            f"sup of e^(2v)|grad ln p| is {sup:.6g}, not below lambda = {lambda_:.6g}")
    _, gp, _ = g_eval(gt, vals)
    grad_w = gp * np.linalg.norm(gradient(v)[mask], axis=-1)
    mu = np.zeros(dom.shape)
    mu[mask] = (gt.A - 1.0) / gt.A * grad_w**3 * np.exp(-2 * vals) * (lambda_ - sup)
    return ScalarField(dom, mu)


def comparison_lhs(u2, m2, p, region):
    """``3 max (u2/m2)^2 |grad ln p|`` over ``region``."""
    dom = u2.domain
    mask = _region(dom, region)
    if not m2 > 0:
        raise ValueError("m2 must be positive")
    if not mask.any():
        raise ValueError("empty evaluation region")
    vals = u2.values[mask]
    if np.any(vals < m2):
        raise ValueError("u2 drops below m2 on the region")
    return 3.0 * float(np.max((vals / m2) ** 2 * _grad_ln_p_norm(p, dom, mask)))


def comparison_condition(u2, m2, p, lambda_, region=None):
    return comparison_lhs(u2, m2, p, region) <= lambda_


def _box(dom, center, k):
    sl = tuple(slice(c - k, c + k + 1) for c in center)
    if any(c - k < 0 or c + k >= n for c, n in zip(center, dom.shape)):
        return None
    return sl


def local_uniqueness_radius(u, p, lambda_, center):
    """Largest half-width ``k h`` of a node box around ``center`` on which
    the comparison condition holds with ``m2 = min u`` over the box.

    Boxes grow one node at a time while ``u > 0`` on them, and the search
    stops at the first failure, so every smaller box passes too.  Returns 0
    when even the one-node box fails.
    """
    dom = u.domain
    c = (center,) if np.isscalar(center) else tuple(int(i) for i in center)
    if len(c) != dom.dim:
        raise ValueError(f"center must have {dom.dim} components")
    if not u.values[c] > 0:
        raise ValueError("u must be positive at the center")
    grad_ln = np.zeros(dom.shape)
    closed = dom.closure
    grad_ln[closed] = _grad_ln_p_norm(p, dom, closed)

    best = 0
    k = 0
    while True:
        sl = _box(dom, c, k)
        if sl is None:
            break
        box_u = u.values[sl]
        if not (np.all(closed[sl]) and np.all(box_u > 0)):
            break
        m2 = float(box_u.min())
        if 3.0 * float(np.max((box_u / m2) ** 2 * grad_ln[sl])) > lambda_:
            break
        best = k
        k += 1
    return best * dom.h
