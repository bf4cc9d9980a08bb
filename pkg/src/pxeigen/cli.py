"""Command line entry point.

    pxeigen <subcommand> --config <path|bundled name> [--out DIR] [--seed N]

Subcommands: validate, norm, normtable, solve, sweep, diagnose, analytic1d,
family, report.  Exit status is 0 on success (a solver that stops without
converging still counts), 2 for a bad configuration and 3 for a runtime
failure.  ``PXEIGEN_LOG_LEVEL`` sets the log verbosity.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import io
from .eigensolver import minimize_rayleigh, strict_positivity_check
from .errors import ConfigError, PxEigenError
from .grid import ScalarField, distance_function, inradius_and_lambda_infinity
from .limit import limit_equation_residual, sweep_to_infinity
from .norms import ModularSpec, luxemburg_norm, norm_limit_table, sup_norm
from .oned import analytic_modular_solution, eigenvalue_family, luxemburg_rigidity_check
from .uniqueness import (GTransform, comparison_condition, g_inequalities_check,
                         local_uniqueness_radius, strict_margin_mu)

log = logging.getLogger("pxeigen")

SUBCOMMANDS = ("validate", "norm", "normtable", "solve", "sweep", "diagnose",
               "analytic1d", "family", "report")

DEFAULT_J = [1, 2, 4, 8, 16, 32, 64]

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3


class Run:
    """Parsed configuration plus output location for one invocation."""

    def __init__(self, cfg, out, seed):
        self.cfg = cfg
        self.out = Path(out)
        self.seed = int(cfg.get("seed", 0) if seed is None else seed)
        self.hash = io.config_hash(cfg)
        self.dom = io.build_domain(cfg)
        self.p = io.build_exponent(cfg, self.dom)
        self.opts = io.build_solver_options(cfg, self.seed)

    def section(self, name):
        return io._section(self.cfg, name, required=False)

    def field(self, sec, path):
        """Input field named in a section: ``distance`` or a field CSV."""
        src = sec.get("field", "distance")
        if src == "distance":
            return distance_function(self.dom)
        try:
            return io.read_field_csv(Path(self.cfg.get("_base", ".")) / src, self.dom)
        except OSError as exc:
            raise ConfigError(f"{path}.field", f"cannot read {src}: {exc.strerror}") from None

    def emit(self, name, payload):
        payload = dict(payload, config_hash=self.hash, seed=self.seed, subcommand=name)
        io.write_json(self.out / f"{name}.json", payload)
        return payload

    def j_list(self, sec, path):
        return io._number_list(sec, path, "j", DEFAULT_J, int)


def cmd_validate(run):
    p = run.p
    return run.emit("validate", {
        "valid": True,
        "domain": {"kind": run.dom.kind, "h": run.dom.h, "shape": list(run.dom.shape),
                   "interior_nodes": run.dom.n_interior},
        "exponent": dict(p.to_dict(), p_minus=p.p_minus, p_plus=p.p_plus,
                         lipschitz_bound=p.lipschitz_bound),
    })


def cmd_norm(run):
    sec = run.section("norm")
    mode = sec.get("weight_mode", "one-over-p")
    try:
        spec = ModularSpec(run.p, mode)
    except ValueError as exc:
        raise ConfigError("norm.weight_mode", str(exc)) from None
    f = run.field(sec, "norm")
    return run.emit("norm", {"norm": luxemburg_norm(f, spec), "sup_norm": sup_norm(f),
                             "weight_mode": mode})


def cmd_normtable(run):
    sec = run.section("normtable")
    f = run.field(sec, "normtable")
    rows = norm_limit_table(f, run.p, run.j_list(sec, "normtable"))
    io.write_table_csv(run.out / "normtable.csv", ["j", "norm"], rows)
    return run.emit("normtable", {"sup_norm": sup_norm(f),
                                  "rows": [{"j": j, "norm": v} for j, v in rows]})


def cmd_solve(run):
    sol = minimize_rayleigh(run.dom, run.p, run.opts)
    pos = strict_positivity_check(sol)
    io.write_field_csv(run.out / "solve_field.csv", sol.u)
    return run.emit("solve", dict(sol.to_dict(), min_interior=pos.min_interior))


def _sweep(run):
    sec = run.section("sweep")
    warm = sec.get("warm_start", True)
    if not isinstance(warm, bool):
        raise ConfigError("sweep.warm_start", "expected true or false")
    return sweep_to_infinity(run.dom, run.p, run.j_list(sec, "sweep"), run.opts, warm), sec


def _sweep_table(res):
    lam_inf = res.lambda_infinity_geometric
    return [(r.j, r.lambda_, r.S, abs(r.lambda_ - lam_inf), r.iterations) for r in res.rows]


def cmd_sweep(run):
    res, sec = _sweep(run)
    io.write_table_csv(run.out / "sweep.csv", ["j", "lambda_j", "S_j", "gap", "iterations"],
                       _sweep_table(res))
    if sec.get("snapshots", False):
        for r in res.rows:
            io.write_field_csv(run.out / f"sweep_u_j{r.j}.csv", r.u)
    io.write_field_csv(run.out / "sweep_limit_field.csv", res.limit_field)
    return run.emit("sweep", {
        "lambda_infinity": res.lambda_infinity_geometric,
        "convergence_gap": res.convergence_gap,
        "rows": [r.to_dict() for r in res.rows],
    })


def _diagnostics(run, res):
    sec = run.section("diagnose")
    try:
        gt = GTransform(io._number(sec, "diagnose", "A", 1.5), io._number(sec, "diagnose", "alpha", 2.0))
    except ValueError as exc:
        raise ConfigError("diagnose", str(exc)) from None
    t = io._number_list(sec, "diagnose", "t_samples", [0.01, 0.1, 1.0, 5.0])
    report = g_inequalities_check(gt, t)

    lam = sec.get("lambda")
    lam = res.lambda_infinity_geometric if lam is None else io._number(sec, "diagnose", "lambda")
    u = res.normalized_limit()
    center = np.unravel_index(int(np.argmax(u.values)), u.values.shape)
    radius = local_uniqueness_radius(u, run.p, lam, center)

    # comparison condition on the core where delta >= fraction * inradius
    frac = io._number(sec, "diagnose", "region_fraction", 0.5)
    delta = distance_function(run.dom)
    R, _ = inradius_and_lambda_infinity(run.dom)
    region = run.dom.interior & (delta.values >= frac * R) & (u.values > 0)
    if not region.any():
        raise ConfigError("diagnose.region_fraction", "selects no nodes")
    m2 = float(u.values[region].min())
    cond = comparison_condition(u, m2, run.p, lam, region)

    # margin for v = ln(u/m2) where v > 0
    pos = u.values > 0
    logs = np.zeros(u.values.shape)
    logs[pos] = np.log(u.values[pos] / m2)
    v = ScalarField(run.dom, logs)
    mu_region = region & (v.values > 0)
    mu_min, mu_note = None, ""
    try:
        mu = strict_margin_mu(gt, v, run.p, lam, mu_region)
        mu_min = float(mu.values[mu_region].min())
    except (PxEigenError, ValueError) as exc:
        mu_note = str(exc)
    return {
        "qproperty_pass": report.passed,
        "qproperty_violations": report.violated(),
        "mu_min": mu_min,
        "mu_note": mu_note,
        "condition_bd": cond,
        "uniqueness_radius": radius,
        "lambda": lam,
    }


def cmd_diagnose(run):
    res, _ = _sweep(run)
    return run.emit("diagnose", _diagnostics(run, res))


def _require_1d(run, name):
    if run.dom.dim != 1 or tuple(run.dom.bounds[0]) != (0.0, 1.0):
        raise ConfigError("domain", f"{name} needs the interval (0, 1)")


def cmd_analytic1d(run):
    _require_1d(run, "analytic1d")
    sec = run.section("analytic1d")
    sol = analytic_modular_solution(run.p, io._number(sec, "analytic1d", "A", 1.0),
                                    run.dom.shape[0] - 1)
    io.write_field_csv(run.out / "analytic1d_field.csv", sol.v)
    return run.emit("analytic1d", sol.to_dict())


def cmd_family(run):
    _require_1d(run, "family")
    sec = run.section("family")
    rows = eigenvalue_family(run.p, io._number_list(sec, "family", "C", [0.1, 1.0, 10.0]),
                             run.dom.shape[0] - 1)
    io.write_table_csv(run.out / "family.csv", ["C", "A", "lambda"],
                       [(r.C, r.A, r.lambda_) for r in rows])
    lams = np.array([r.lambda_ for r in rows if r.ok])
    spread = float((lams.max() - lams.min()) / lams.min()) if lams.size else None
    return run.emit("family", {"rows": [r.to_dict() for r in rows], "lambda_spread": spread})


def cmd_report(run):
    res, _ = _sweep(run)
    lam_inf = res.lambda_infinity_geometric
    u = res.normalized_limit()
    payload = {
        "lambda_infinity": lam_inf,
        "convergence_gap": res.convergence_gap,
        "all_converged": res.all_converged(),
        "lambda_table": [{"j": j, "lambda": lam, "S": S, "gap": gap, "iterations": it}
                         for j, lam, S, gap, it in _sweep_table(res)],
        "limit_residual": limit_equation_residual(u, run.p, lam_inf).max_abs,
        "diagnostics": _diagnostics(run, res),
    }
    if run.dom.dim == 1 and tuple(run.dom.bounds[0]) == (0.0, 1.0):
        payload["oracle_1d"] = luxemburg_rigidity_check(run.p, res.limit_field,
                                                        run.dom.shape[0] - 1).to_dict()
    return run.emit("report", payload)


COMMANDS = {
    "validate": cmd_validate, "norm": cmd_norm, "normtable": cmd_normtable,
    "solve": cmd_solve, "sweep": cmd_sweep, "diagnose": cmd_diagnose,
    "analytic1d": cmd_analytic1d, "family": cmd_family, "report": cmd_report,
}


def build_parser():
    ap = argparse.ArgumentParser(prog="pxeigen", description=__doc__.split("\n\n")[0])
    ap.add_argument("command", choices=SUBCOMMANDS)
    ap.add_argument("--config", required=True, help="config file or bundled config name")
    ap.add_argument("--out", default=".", help="output directory (default: current)")
    ap.add_argument("--seed", type=int, default=None, help="override the config seed")
    return ap


def run(config, command, out=".", seed=None):
    """Run one subcommand; returns the JSON payload that was written."""
    cfg = config if isinstance(config, dict) else io.load_config(config)
    r = Run(cfg, out, seed)
    r.out.mkdir(parents=True, exist_ok=True)
    return COMMANDS[command](r)


def main(argv=None):
    args = build_parser().parse_args(argv)
    level = getattr(logging, os.environ.get("PXEIGEN_LOG_LEVEL", "WARNING").upper(), None)
    logging.basicConfig(level=level if isinstance(level, int) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        run(args.config, args.command, args.out, args.seed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (PxEigenError, ArithmeticError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
