"""The j -> infinity sweep and the residual of the limit equation.

``sweep_to_infinity`` solves the Luxemburg eigenproblem for ``j p(x)`` along
an ascending list of ``j`` and compares the last eigenvalue with ``1/R``,
``R`` the inradius.  The limit equation is checked pointwise with central
differences::

    max{ L - |grad u|/u,  D(u/K) } = 0,   K = max |grad u|,

where ``D v = <D^2v grad v, grad v> + |grad v|^2 ln|grad v| <grad v, grad ln p>``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .eigensolver import SolverOptions, minimize_rayleigh
from .errors import StencilError
from .grid import (ScalarField, distance_to_ridge, gradient,
                   inradius_and_lambda_infinity)
from .norms import luxemburg_norm

log = logging.getLogger(__name__)

#: Relative cutoff below which the ``|grad v|^2 ln|grad v|`` term is zero.
EPS_GRAD = 1e-8


@dataclass
class SweepRow:
    j: int
    lambda_: float
    u: ScalarField = field(repr=False)
    S: float
    iterations: int
    converged: bool
    residual: float

    def to_dict(self):
        return {"j": self.j, "lambda": self.lambda_, "S": self.S,
                "iterations": self.iterations, "converged": self.converged,
                "residual": self.residual}


@dataclass
class SweepResult:
    """Rows in ascending ``j`` plus the geometric limit ``1/R``."""

    rows: list
    lambda_infinity_geometric: float
    limit_field: ScalarField = field(repr=False)
    convergence_gap: float

    def lambdas(self):
        return np.array([r.lambda_ for r in self.rows])

    def gaps(self):
        return np.abs(self.lambdas() - self.lambda_infinity_geometric)

    def normalized_limit(self):
        """Last eigenfunction divided by its largest nodal gradient."""
        K = float(np.max(np.linalg.norm(gradient(self.limit_field), axis=-1)))
        return self.limit_field / K

    def all_converged(self):
        return all(r.converged for r in self.rows)


def sweep_to_infinity(dom, p, j_list, opts=None, warm_start=True):
    """Minimize the quotient for every ``j p`` in ``j_list``.

    With ``warm_start`` each solve starts from the previous eigenfunction.
    A row that fails to converge is kept and flagged; the sweep continues.
    """
    opts = opts or SolverOptions()
    js = [int(j) for j in j_list]
    if not js:
        raise ValueError("j_list must be nonempty")
    if any(b <= a for a, b in zip(js, js[1:])):
        raise ValueError("j_list must be strictly ascending")
    _, lam_inf = inradius_and_lambda_infinity(dom)

    rows = []
    prev = None
    for j in js:
        pj = p.scaled(j)
        run_opts = opts
        if warm_start and prev is not None:
            run_opts = replace(opts, initialization="provided", initial_field=prev)
        sol = minimize_rayleigh(dom, pj, run_opts)
        if not sol.converged:
            log.warning("sweep row j=%d did not converge after %d iterations", j, sol.iterations)
        rows.append(SweepRow(j, sol.lambda_, sol.u, sol.S, sol.iterations,
                             sol.converged, sol.weak_residual))
        prev = sol.u
        log.info("j=%d lambda=%.8g S=%.6g", j, sol.lambda_, sol.S)

    last = rows[-1]
    return SweepResult(rows, lam_inf, last.u, abs(last.lambda_ - lam_inf))


def row_norm(row, p):
    """``||u_j||_{j p}``; equals one for every row of a sweep."""
    return luxemburg_norm(row.u, p.scaled(row.j))


# -- finite differences ------------------------------------------------------------

def _derivatives(v, dom):
    """Central gradient and Hessian at every node with a full stencil.

    Returns ``(grad, hess, ok)``; ``hess`` has shape ``shape + (d, d)`` and
    ``ok`` marks nodes whose whole 3-point (1-D) or 3x3 (2-D) stencil is closed.
    """
    h = dom.h
    closed = dom.closure
    shape = dom.shape
    grad = np.zeros(shape + (dom.dim,))
    hess = np.zeros(shape + (dom.dim, dom.dim))
    ok = np.zeros(shape, dtype=bool)
    if dom.dim == 1:
        c = slice(1, -1)
        grad[c, 0] = (v[2:] - v[:-2]) / (2 * h)
        hess[c, 0, 0] = (v[2:] - 2 * v[1:-1] + v[:-2]) / h**2
        ok[c] = closed[2:] & closed[1:-1] & closed[:-2]
    else:
        c = (slice(1, -1), slice(1, -1))
        grad[c + (0,)] = (v[2:, 1:-1] - v[:-2, 1:-1]) / (2 * h)
        grad[c + (1,)] = (v[1:-1, 2:] - v[1:-1, :-2]) / (2 * h)
        hess[c + (0, 0)] = (v[2:, 1:-1] - 2 * v[1:-1, 1:-1] + v[:-2, 1:-1]) / h**2
        hess[c + (1, 1)] = (v[1:-1, 2:] - 2 * v[1:-1, 1:-1] + v[1:-1, :-2]) / h**2
        mixed = (v[2:, 2:] - v[2:, :-2] - v[:-2, 2:] + v[:-2, :-2]) / (4 * h**2)
        hess[c + (0, 1)] = mixed
        hess[c + (1, 0)] = mixed
        ok[c] = True
        for a in (-1, 0, 1):
            for b in (-1, 0, 1):
                ok[c] &= closed[1 + a:shape[0] - 1 + a, 1 + b:shape[1] - 1 + b]
    return grad, hess, ok


def _inf_x_laplacian(v, p, dom):
    grad, hess, ok = _derivatives(v, dom)
    inf_lap = np.einsum("...i,...ij,...j->...", grad, hess, grad)
    s = np.linalg.norm(grad, axis=-1)
    scale = float(np.max(s[ok])) if ok.any() else 0.0
    cutoff = EPS_GRAD * max(scale, 1.0)
    out = inf_lap.copy()
    live = ok & (s >= cutoff)
    if np.any(live) and not p.is_constant:
        pts = dom.points[live]
        glp = p.grad_ln(pts)
        g = grad[live]
        out[live] += s[live] ** 2 * np.log(s[live]) * np.sum(g * glp, axis=-1)
    out[~ok] = np.nan
    return out, ok


def infinity_x_laplacian_field(v, p):
    """Nodal ``D v``; nodes without a full stencil hold NaN."""
    out, _ = _inf_x_laplacian(np.asarray(v.values, dtype=float), p, v.domain)
    return out


def infinity_x_laplacian(v, p, node):
    """``D v`` at one node (an index tuple or integer)."""
    dom = v.domain
    idx = (node,) if np.isscalar(node) else tuple(node)
    if len(idx) != dom.dim:
        raise ValueError(f"node index must have {dom.dim} components")
    if any(not 0 < i < n - 1 for i, n in zip(idx, dom.shape)):
        raise StencilError(f"node {idx} has no full stencil inside the grid")
    out, ok = _inf_x_laplacian(np.asarray(v.values, dtype=float), p, dom)
    if not ok[idx]:
        raise StencilError(f"stencil at node {idx} leaves the closed domain")
    return float(out[idx])


@dataclass
class LimitResidual:
    """Pointwise residual plus its largest magnitude away from the ridge.

    ``evaluated`` marks the interior nodes with a full stencil; ``counted``
    the subset at least ``2h`` from the ridge of the distance function.
    """

    values: ScalarField = field(repr=False)
    evaluated: np.ndarray = field(repr=False)
    counted: np.ndarray = field(repr=False)
    max_abs: float
    K: float


def limit_equation_residual(u, p, lambda_inf):
    dom = u.domain
    vals = np.asarray(u.values, dtype=float)
    if np.any(vals[dom.closure] < 0):
        raise ValueError("limit residual needs a nonnegative field")
    if not np.any(vals):
        raise ValueError("limit residual is undefined for the zero field")

    grad = gradient(u)
    s = np.linalg.norm(grad, axis=-1)
    K = float(np.max(s[dom.closure]))
    v = vals / K if K > 0 else vals

    first = np.empty(dom.shape)
    pos = vals > 0
    first[pos] = lambda_inf - s[pos] / vals[pos]
    # at zeros the first member is multiplied through by u
    first[~pos] = lambda_inf * vals[~pos] - s[~pos]

    second, ok = _inf_x_laplacian(v, p, dom)
    evaluated = ok & dom.interior
    res = np.zeros(dom.shape)
    res[evaluated] = np.maximum(first[evaluated], second[evaluated])

    counted = evaluated & (distance_to_ridge(dom) >= 2 * dom.h - 1e-12)
    max_abs = float(np.max(np.abs(res[counted]))) if counted.any() else 0.0
    return LimitResidual(ScalarField(dom, res), evaluated, counted, max_abs, K)
