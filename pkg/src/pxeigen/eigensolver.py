"""First eigenfunction of the Luxemburg Rayleigh quotient on a grid.

The discrete quotient ``||grad u||_p / ||u||_p`` is minimized over nodal
fields vanishing on the boundary.  The objective is ``ln K - ln k`` with
``K = ||grad u||_p`` and ``k = ||u||_p``.  Differentiating the unit-modular
identities ``int |grad u/K|^p dx/p = 1`` and ``int |u/k|^p dx/p = 1`` along a
test direction ``eta`` gives::

    K'/K = int K^-p |grad u|^(p-2) <grad u, grad eta> dx / int |grad u/K|^p dx
    k'/k = int k^-p |u|^(p-2) u eta dx / int |u/k|^p dx

and the gradient of the objective is their difference, one entry per
interior node (``eta`` = nodal hat function).  Descent is nonlinear
conjugate gradients preconditioned with the grid Laplacian, with projected
Armijo backtracking; every iterate is clamped at zero and rescaled to
``k = 1``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import factorized

from .grid import ScalarField, distance_function
from .norms import PowerSamples

log = logging.getLogger(__name__)

INITIALIZATIONS = ("distance", "random", "provided")

_ARMIJO_C = 1e-4
_MAX_BACKTRACK = 60


@dataclass
class SolverOptions:
    tolerance: float = 1e-12
    residual_tolerance: float = 1e-4
    max_iterations: int = 5000
    restarts: int = 0
    rng_seed: int = 0
    initialization: str = "distance"
    initial_field: Optional[ScalarField] = None

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if not self.residual_tolerance > 0:
            raise ValueError("residual_tolerance must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if self.restarts < 0:
            raise ValueError("restarts must be nonnegative")
        if self.initialization not in INITIALIZATIONS:
            raise ValueError(f"initialization must be one of {INITIALIZATIONS}")
        if self.initialization == "provided" and self.initial_field is None:
            raise ValueError("initialization 'provided' needs initial_field")


@dataclass
class EigenSolution:
    """Minimizer ``u`` (normalized to ``k = 1``) with its constants."""

    u: ScalarField
    lambda_: float
    K: float
    k: float
    S: float
    weak_residual: float
    iterations: int
    converged: bool
    history: list = field(default_factory=list, repr=False)

    def to_dict(self):
        return {
            "lambda": self.lambda_,
            "K": self.K,
            "k": self.k,
            "S": self.S,
            "residual": self.weak_residual,
            "iterations": self.iterations,
            "converged": self.converged,
        }


# -- discrete problem --------------------------------------------------------------

class _Discretization:
    """Exponent samples and operators restricted to the interior unknowns."""

    def __init__(self, dom, p):
        self.dom = dom
        self.p = p
        self.free = np.flatnonzero(dom.interior.ravel())
        if self.free.size == 0:
            from .errors import DegenerateDomainError
            raise DegenerateDomainError("domain has no interior nodes")
        el = dom.elements
        self.grad_ops = [g[:, self.free].tocsr() for g in el.grad_ops]
        self.grad_ops_t = [g.T.tocsr() for g in self.grad_ops]
        self.measure = el.measure
        self.p_el = p(el.centroids)
        pts = dom.points.reshape(-1, dom.dim)[self.free]
        self.p_node = p(pts)
        self.w_node = dom.weights.ravel()[self.free]
        self._solve = None

    def full(self, x):
        v = np.zeros(self.dom.shape).ravel()
        v[self.free] = x
        return ScalarField(self.dom, v.reshape(self.dom.shape))

    def restrict(self, f):
        return np.array(f.values.ravel()[self.free], dtype=float)

    def grad(self, x):
        return np.stack([g @ x for g in self.grad_ops], axis=-1)

    def div(self, vec):
        out = self.grad_ops_t[0] @ (self.measure * vec[:, 0])
        for ax in range(1, len(self.grad_ops_t)):
            out += self.grad_ops_t[ax] @ (self.measure * vec[:, ax])
        return out

    def precondition(self, r):
        if self._solve is None:
            lap = sum(gt @ sp.diags(self.measure) @ g for g, gt in zip(self.grad_ops, self.grad_ops_t))
            self._solve = factorized(sp.csc_matrix(lap))
        return self._solve(r)

    def node_norm(self, x):
        return PowerSamples(x, self.p_node, self.w_node / self.p_node).norm()

    def luxemburg_terms(self, x):
        """K, k, S and the two weak-form row vectors (stiffness part, mass part)."""
        g = self.grad(x)
        a = np.linalg.norm(g, axis=1)
        K = PowerSamples(a, self.p_el, self.measure / self.p_el).norm()
        k = self.node_norm(x)
        s = a / K
        pos = s > 0
        ls = np.zeros_like(s)
        ls[pos] = np.log(s[pos])
        s_pm1 = np.where(pos, np.exp((self.p_el - 1.0) * ls), 0.0)
        unit = np.zeros_like(g)
        unit[pos] = g[pos] / a[pos, None]
        stiff = self.div(s_pm1[:, None] * unit)
        I_K = float(np.sum(self.measure * np.where(pos, np.exp(self.p_el * ls), 0.0)))

        r = np.abs(x) / k
        rpos = r > 0
        lr = np.zeros_like(r)
        lr[rpos] = np.log(r[rpos])
        r_pm1 = np.where(rpos, np.exp((self.p_node - 1.0) * lr), 0.0) * np.sign(x)
        mass = self.w_node * r_pm1
        I_k = float(np.sum(self.w_node * np.where(rpos, np.exp(self.p_node * lr), 0.0)))
        return K, k, I_K / I_k, stiff, mass, I_K, I_k

    def objective(self, x):
        """Objective, gradient and scaled Euler-Lagrange residual."""
        K, k, S, stiff, mass, I_K, I_k = self.luxemburg_terms(x)
        f = np.log(K) - np.log(k)
        grad = stiff / (K * I_K) - mass / (k * I_k)
        lam_s = K / k * S
        res = np.max(np.abs(stiff - lam_s * mass)) / np.max(np.abs(stiff) + np.abs(lam_s * mass))
        return f, grad, float(res)

    def retract(self, y):
        x = np.maximum(y, 0.0)
        k = self.node_norm(x)
        if k == 0.0:
            return None
        return x / k


# -- descent driver ----------------------------------------------------------------

def _descend(disc, evaluate, retract, x0, opts):
    """Projected, preconditioned Polak-Ribiere descent with Armijo backtracking.

    ``evaluate(x)`` returns ``(objective, gradient, residual)``.  A run has
    converged once a step changes the quotient by less than
    ``opts.tolerance`` (relative) and the residual is below
    ``opts.residual_tolerance``.

    Returns ``(x, f, iterations, converged, history)``; ``history`` holds the
    accepted objective values, which are nonincreasing.
    """
    tol = opts.tolerance
    x = retract(x0)
    if x is None:
        raise ValueError("initial field vanishes after projection")
    f, g, res = evaluate(x)
    history = [f]
    z = disc.precondition(g)
    d = -z
    alpha = None
    converged = False
    it = 0
    fresh = True
    while it < opts.max_iterations:
        gd = float(g @ d)
        if not gd < 0:
            d = -z
            gd = float(g @ d)
            fresh = True
        if alpha is None:
            alpha = 0.1 * np.max(np.abs(x)) / max(np.max(np.abs(d)), 1e-300)
        else:
            alpha = 2.0 * alpha
        accepted = False
        for _ in range(_MAX_BACKTRACK):
            xt = retract(x + alpha * d)
            if xt is not None:
                step = np.maximum(x + alpha * d, 0.0) - x
                pred = float(g @ step)
                if pred < 0:
                    ft, gt, rt = evaluate(xt)
                    if ft <= f + _ARMIJO_C * pred:
                        accepted = True
                        break
            alpha *= 0.5
        if not accepted:
            if not fresh:
                d = -z
                fresh = True
                alpha = None
                continue
            converged = res < opts.residual_tolerance
            break
        it += 1
        zt = disc.precondition(gt)
        beta = max(0.0, float((gt - g) @ zt) / float(g @ z)) if float(g @ z) > 0 else 0.0
        rel = abs(np.expm1(f - ft))
        x, f, g, z, res = xt, ft, gt, zt, rt
        history.append(f)
        d = -z + beta * d
        fresh = beta == 0.0
        if rel < tol and res < opts.residual_tolerance:
            converged = True
            break
    return x, f, it, converged, history


# -- public operations -------------------------------------------------------------

def _initial_fields(dom, disc, opts):
    rng = np.random.default_rng(opts.rng_seed)
    if opts.initialization == "distance":
        first = disc.restrict(distance_function(dom))
    elif opts.initialization == "provided":
        if not opts.initial_field.domain.same_as(dom):
            raise ValueError("initial field lives on a different domain")
        first = disc.restrict(opts.initial_field)
    else:
        first = rng.random(disc.free.size)
    starts = [first]
    for _ in range(opts.restarts):
        starts.append(rng.random(disc.free.size))
    return starts


def minimize_rayleigh(dom, p, opts=None):
    """Minimize the Luxemburg Rayleigh quotient over fields vanishing on the boundary.

    Runs one descent per initial field (the configured one plus
    ``opts.restarts`` random fields) and keeps the smallest quotient; ties
    within the tolerance go to the run with fewer iterations.
    """
    opts = opts or SolverOptions()
    disc = _Discretization(dom, p)
    best = None
    for n, x0 in enumerate(_initial_fields(dom, disc, opts)):
        try:
            run = _descend(disc, disc.objective, disc.retract, x0, opts)
        except ValueError:
            log.warning("restart %d has a vanishing initial field; skipped", n)
            continue
        log.debug("run %d: quotient %.12g after %d iterations (converged=%s)",
                  n, np.exp(run[1]), run[2], run[3])
        if best is None:
            best = run
            continue
        if run[1] < best[1] - opts.tolerance:
            best = run
        elif abs(run[1] - best[1]) <= opts.tolerance and run[2] < best[2]:
            best = run
    if best is None:
        raise ValueError("no restart produced an admissible field")
    x, f, iterations, converged, history = best
    if not converged:
        log.warning("descent stopped after %d iterations without converging", iterations)
    K, k, S, *_ = disc.luxemburg_terms(x)
    u = disc.full(x)
    sol = EigenSolution(u=u, lambda_=K / k, K=K, k=k, S=S, weak_residual=np.nan,
                        iterations=iterations, converged=converged,
                        history=[float(np.exp(h)) for h in history])
    sol.weak_residual = el_weak_residual(sol, p)
    return sol


def constants_KkS(u, p):
    """``(K, k, S)`` for a nonzero nodal field."""
    if not np.any(u.values):
        raise ValueError("constants are undefined for the zero function")
    disc = _Discretization(u.domain, p)
    K, k, S, *_ = disc.luxemburg_terms(disc.restrict(u))
    return K, k, S


def el_weak_residual(sol, p, lambda_=None, S=None):
    """Scaled residual of the discrete Euler-Lagrange system.

    For every interior hat function ``eta`` the row residual is
    ``int |grad u/K|^(p-2) <grad u/K, grad eta> - lambda*S int |u/k|^(p-2) (u/k) eta``.
    Returns ``max |row| / max(|stiffness row| + |lambda*S mass row|)``.
    ``lambda_`` and ``S`` default to the candidate's own ``K/k`` and ``S``;
    overriding them is only meant for checking a candidate against an oracle.
    """
    u = sol.u if isinstance(sol, EigenSolution) else sol
    disc = _Discretization(u.domain, p)
    K, k, S_u, stiff, mass, _, _ = disc.luxemburg_terms(disc.restrict(u))
    lam = K / k if lambda_ is None else lambda_
    s_val = S_u if S is None else S
    rows = stiff - lam * s_val * mass
    scale = np.max(np.abs(stiff) + np.abs(lam * s_val * mass))
    return float(np.max(np.abs(rows)) / scale)


@dataclass
class PositivityReport:
    min_interior: float
    argmin: tuple
    has_interior_zero: bool


def strict_positivity_check(sol):
    """Smallest interior value of the eigenfunction and whether it hits zero."""
    u = sol.u if isinstance(sol, EigenSolution) else sol
    interior = u.domain.interior
    vals = np.where(interior, u.values, np.inf)
    idx = np.unravel_index(int(np.argmin(vals)), vals.shape)
    m = float(vals[idx])
    return PositivityReport(min_interior=m, argmin=tuple(int(i) for i in idx),
                            has_interior_zero=not m > 0)


# -- constrained modular problem ---------------------------------------------------

class _ModularProblem:
    def __init__(self, disc, C):
        self.disc = disc
        self.C = C
        self.log_C = np.log(C)

    def log_parts(self, x):
        d = self.disc
        g = d.grad(x)
        a = np.linalg.norm(g, axis=1)
        top = PowerSamples(a, d.p_el, d.measure)
        bottom = PowerSamples(x, d.p_node, d.w_node)
        return g, a, top, bottom

    def objective(self, x):
        d = self.disc
        g, a, top, bottom = self.log_parts(x)
        log_N = top.log_plain_integral()
        log_D = bottom.log_plain_integral()
        pos = a > 0
        coef = np.zeros_like(a)
        coef[pos] = d.p_el[pos] * np.exp((d.p_el[pos] - 1.0) * np.log(a[pos]) - log_N)
        unit = np.zeros_like(g)
        unit[pos] = g[pos] / a[pos, None]
        dN = d.div(coef[:, None] * unit)                 # grad N / N
        xpos = x > 0
        dD = np.zeros_like(x)
        dD[xpos] = d.p_node[xpos] * np.exp((d.p_node[xpos] - 1.0) * np.log(x[xpos]) - log_D)
        # tangential gradient of ln N along the rescaling retraction
        mu = float(dN @ x) / float(dD @ x)
        grad = dN - mu * dD
        res = np.max(np.abs(grad)) / np.max(np.abs(dN) + np.abs(mu * dD))
        return log_N - log_D, grad, float(res)

    def retract(self, y):
        d = self.disc
        x = np.maximum(y, 0.0)
        gamma = PowerSamples(x, d.p_node, d.w_node / self.C).norm()
        if gamma == 0.0:
            return None
        return x / gamma


def minimize_modular_constrained(dom, p, C, opts=None):
    """Minimize ``int |grad v|^p / int |v|^p`` subject to ``int |v|^p dx = C``.

    Returns ``(v, quotient)``.  Feasibility is restored after every step by
    the scalar rescaling ``v -> s v`` that solves ``int |s v|^p dx = C``.
    """
    if not (C > 0 and np.isfinite(C)):
        raise ValueError("constraint level C must be positive and finite")
    if abs(np.log(C)) > 600.0:
        raise ValueError("constraint level C is out of the overflow-safe range")
    opts = opts or SolverOptions()
    disc = _Discretization(dom, p)
    prob = _ModularProblem(disc, C)
    best = None
    for x0 in _initial_fields(dom, disc, opts):
        try:
            run = _descend(disc, prob.objective, prob.retract, x0, opts)
        except ValueError:
            continue
        if best is None or run[1] < best[1] - opts.tolerance:
            best = run
    if best is None:
        raise ValueError("no restart produced an admissible field")
    x, f, iterations, converged, _ = best
    if not converged:
        log.warning("constrained descent stopped after %d iterations without converging", iterations)
    return disc.full(x), float(np.exp(f))


__all__ = [
    "SolverOptions", "EigenSolution", "PositivityReport", "minimize_rayleigh", "constants_KkS",
    "el_weak_residual", "minimize_modular_constrained", "strict_positivity_check",
]
