"""Closed-form one-dimensional eigenfunctions on (0, 1).

For the modular problem the separated solution is::

    v(x) = int_0^x e^(A/p(t)) dt     on [0, x0]
    v(x) = int_x^1 e^(A/p(t)) dt     on [x0, 1]

with ``x0`` fixed by continuity and ``lambda = v'(x0-)/v(x0)``.  The free
constant ``A`` is tied to the normalization ``C = max v^p``.  For the
Luxemburg problem the slope profile ``e^(-A1/p)`` must reach one, which
forces ``A1 = A2 = 0`` and hence ``u = delta``, ``lambda = 2``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .grid import GriddedDomain, ScalarField, distance_function, gradient

log = logging.getLogger(__name__)

QUAD_TOL = 1e-10
FINE_FACTOR = 10

_MAX_LEVELS = 40
_MAX_EXPANSIONS = 60


def _check_exponent(p):
    if p.dim != 1:
        raise ValueError("the closed forms live on a 1-D interval")
    lo, hi = p.bounds[0]
    if lo > 0.0 or hi < 1.0:
        raise ValueError("exponent must be defined on [0, 1]")


def adaptive_simpson(f, edges, tol=QUAD_TOL):
    """Integral of ``f`` over each cell ``[edges[i], edges[i+1]]``.

    Every cell is refined independently until the Simpson estimate on the
    cell and on its two halves agree to ``15 tol`` relative to the
    magnitude of the total; the Richardson-corrected value is returned.
    ``f`` must accept arrays.
    """
    e = np.asarray(edges, dtype=float)
    a, b = e[:-1], e[1:]
    m = 0.5 * (a + b)
    fa, fm, fb = f(a), f(m), f(b)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    scale = max(float(np.sum(np.abs(whole))), np.finfo(float).tiny)

    out = np.zeros(a.size)
    idx = np.arange(a.size)
    cell_tol = tol * scale * (b - a) / (e[-1] - e[0])
    for _ in range(_MAX_LEVELS):
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = f(lm), f(rm)
        left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
        right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
        diff = left + right - whole
        done = np.abs(diff) <= 15.0 * cell_tol
        np.add.at(out, idx[done], (left + right + diff / 15.0)[done])
        keep = ~done
        if not keep.any():
            return out
        # split the unfinished cells into their two halves
        idx = np.concatenate([idx[keep], idx[keep]])
        a, b = np.concatenate([a[keep], m[keep]]), np.concatenate([m[keep], b[keep]])
        fa, fb = np.concatenate([fa[keep], fm[keep]]), np.concatenate([fm[keep], fb[keep]])
        fm = np.concatenate([flm[keep], frm[keep]])
        m = 0.5 * (a + b)
        whole = np.concatenate([left[keep], right[keep]])
        cell_tol = 0.5 * np.concatenate([cell_tol[keep], cell_tol[keep]])
    raise ArithmeticError("adaptive Simpson did not reach the requested tolerance")


def _integral(f, a, b):
    if b <= a:
        return 0.0
    return float(adaptive_simpson(f, [a, b]).sum())


@dataclass
class OneDSolution:
    A: float
    x0: float
    lambda_: float
    v: ScalarField = field(repr=False)
    condition_holds: bool
    lambda_right: float = 0.0
    continuity_residual: float = 0.0
    fine_x: np.ndarray = field(default=None, repr=False)
    fine_v: np.ndarray = field(default=None, repr=False)

    def to_dict(self):
        return {"A": self.A, "x0": self.x0, "lambda": self.lambda_,
                "condition_holds": self.condition_holds}


def _matching_point(f):
    """Root of ``int_0^x f - int_x^1 f``, which increases strictly in ``x``."""
    lo, hi = 0.0, 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if _integral(f, 0.0, mid) - _integral(f, mid, 1.0) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def analytic_modular_solution(p, A, n=256):
    """Separated solution for the constant ``A`` on ``n`` cells of (0, 1).

    The eigenvalue condition ``|v'|/v >= lambda`` is tested on a grid
    ``FINE_FACTOR`` times finer than the field grid.
    """
    _check_exponent(p)
    A = float(A)
    if not np.isfinite(A):
        raise ValueError("A must be finite")

    def rate(t):
        return np.exp(A / p(t))

    x0 = _matching_point(rate)
    left = _integral(rate, 0.0, x0)
    right = _integral(rate, x0, 1.0)
    slope = float(rate(x0))
    if not (left > 0 and right > 0 and np.isfinite(slope)):
        raise ArithmeticError(f"e^(A/p) under- or overflows for A = {A:g}")
    lam_left = slope / left
    lam_right = slope / right

    fine = np.linspace(0.0, 1.0, FINE_FACTOR * n + 1)
    cells = adaptive_simpson(rate, fine)
    from_left = np.concatenate([[0.0], np.cumsum(cells)])
    from_right = np.concatenate([np.cumsum(cells[::-1])[::-1], [0.0]])
    fine_v = np.where(fine <= x0, from_left, from_right)

    inner = (fine_v > 0) & (fine != x0)
    ratio = rate(fine[inner]) / fine_v[inner]
    holds = bool(np.all(ratio >= lam_left * (1.0 - 1e-9)))

    dom = GriddedDomain.interval(0.0, 1.0, n)
    v = ScalarField(dom, fine_v[::FINE_FACTOR])
    return OneDSolution(A, x0, lam_left, v, holds, lam_right,
                        abs(left - right), fine, fine_v)


def _log_peak(p, A, n):
    sol = analytic_modular_solution(p, A, n)
    x, v = sol.fine_x, sol.fine_v
    pos = v > 0
    return float(np.max(p(x[pos]) * np.log(v[pos]))), sol


@dataclass
class FamilyRow:
    C: float
    A: float
    lambda_: float
    ok: bool
    message: str = ""

    def to_dict(self):
        return {"C": self.C, "A": self.A, "lambda": self.lambda_, "ok": self.ok}


def eigenvalue_family(p, c_list, n=256):
    """Rows ``(C, A, lambda)`` with ``A`` solving ``max v^p = C``.

    ``max v^p`` increases with ``A`` because ``v`` does, so ``A`` is found
    by expanding a bracket geometrically and then Brent's method.  A row
    whose bracket cannot be closed is returned with ``ok = False``.
    """
    _check_exponent(p)
    cs = [float(c) for c in c_list]
    if not cs or any(not c > 0 for c in cs):
        raise ValueError("normalization constants must be positive")
    a_cap = 500.0 * p.p_minus

    rows = []
    for C in cs:
        target = np.log(C)

        def g(A):
            return _log_peak(p, A, n)[0] - target

        lo, hi = -1.0, 1.0
        glo, ghi = g(lo), g(hi)
        for _ in range(_MAX_EXPANSIONS):
            if glo <= 0 <= ghi or 2.0 * max(-lo, hi) > a_cap:
                break
            if glo > 0:
                hi, ghi = lo, glo
                lo *= 2.0
                glo = g(lo)
            else:
                lo, glo = hi, ghi
                hi *= 2.0
                ghi = g(hi)
        if not glo <= 0 <= ghi:
            log.warning("no bracket for A at C=%g", C)
            rows.append(FamilyRow(C, float("nan"), float("nan"), False, "A bracket exhausted"))
            continue
        A = brentq(g, lo, hi, xtol=1e-13, rtol=4 * np.finfo(float).eps)
        sol = analytic_modular_solution(p, A, n)
        rows.append(FamilyRow(C, A, sol.lambda_, True))
    return rows


@dataclass
class RigidityReport:
    """Outcome of the exclusion argument for the Luxemburg problem."""

    positive_constants_excluded: bool
    max_slope_positive: float
    surviving_A: float
    x0: float
    lambda_: float
    matches_distance: bool
    limit_sup_error: float = None

    @property
    def confirmed(self):
        ok = self.positive_constants_excluded and self.matches_distance
        return ok and abs(self.lambda_ - 2.0) < 1e-10

    def to_dict(self):
        return {"confirmed": self.confirmed,
                "positive_constants_excluded": self.positive_constants_excluded,
                "surviving_A": self.surviving_A, "x0": self.x0,
                "lambda": self.lambda_, "limit_sup_error": self.limit_sup_error}


def luxemburg_rigidity_check(p, limit_field=None, n=256, a_samples=None):
    """Check that only ``A1 = A2 = 0`` gives a slope profile reaching one.

    For every positive sample ``A1`` the profile ``e^(-A1/p)`` stays below
    one on a fine grid.  With ``A1 = 0`` the relation ``1/x0 = e^(-A2/p(x0))/x0``
    leaves only ``A2 = 0``, so ``u = delta`` and ``lambda = 1/x0 = 2``.  A
    sweep limit field, if given, is compared with ``delta`` after dividing by
    its largest nodal gradient.
    """
    _check_exponent(p)
    a1 = np.logspace(-8, 3, 111) if a_samples is None else np.asarray(a_samples, dtype=float)
    if np.any(a1 <= 0):
        raise ValueError("A1 samples must be positive")
    x = np.linspace(0.0, 1.0, FINE_FACTOR * n + 1)
    px = p(x)
    max_slope = float(np.max(np.exp(-a1[:, None] / px[None, :])))
    excluded = max_slope < 1.0

    sol = analytic_modular_solution(p, 0.0, n)
    delta = distance_function(sol.v.domain)
    matches = float(np.max(np.abs(sol.v.values - delta.values))) <= 1e-12

    err = None
    if limit_field is not None:
        K = float(np.max(np.linalg.norm(gradient(limit_field), axis=-1)))
        ref = distance_function(limit_field.domain)
        err = float(np.max(np.abs(limit_field.values / K - ref.values)))
    return RigidityReport(excluded, max_slope, 0.0, sol.x0, 1.0 / sol.x0, matches, err)
