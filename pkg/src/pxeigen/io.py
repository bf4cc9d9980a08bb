"""Run configurations, field files and deterministic JSON output.

A configuration is a JSON object::

    {
      "domain":   {"kind": "interval", "bounds": [0, 1], "n": 512},
      "exponent": {"kind": "affine", "coeffs": [2, 1]},
      "solver":   {"tolerance": 1e-12, "max_iterations": 5000},
      "seed": 0,
      "sweep": {"j": [1, 2, 4, 8]}
    }

Domains are ``interval``, ``rectangle`` or ``mask`` (a 0/1 CSV or a PGM
image).  Mask arrays are indexed ``[ix, iy]``; image rows run top to bottom,
so they are flipped and transposed on load.
"""

from __future__ import annotations

import csv
import hashlib
import json
from importlib import resources
from pathlib import Path

import numpy as np

from .eigensolver import SolverOptions
from .errors import ConfigError, DataError
from .exponent import VariableExponent
from .grid import GriddedDomain, ScalarField

BUNDLED = ("interval-p2", "interval-2+x", "square-p2")

_SOLVER_KEYS = ("tolerance", "residual_tolerance", "max_iterations", "restarts", "initialization")


def bundled_config_path(name):
    return resources.files("pxeigen") / "configs" / f"{name}.json"


def load_config(source):
    """Read a config from a path or the name of a bundled config."""
    path = Path(source)
    if not path.exists() and str(source) in BUNDLED:
        text = bundled_config_path(str(source)).read_text()
        base = Path(".")
    else:
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigError("config", f"cannot read {source}: {exc.strerror}") from None
        base = path.parent
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("config", f"invalid JSON: {exc}") from None
    if not isinstance(cfg, dict):
        raise ConfigError("config", "top level must be an object")
    cfg.setdefault("_base", str(base))
    return cfg


def config_hash(cfg):
    clean = {k: v for k, v in cfg.items() if not k.startswith("_")}
    text = json.dumps(clean, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()


def _section(cfg, key, required=True):
    sec = cfg.get(key)
    if sec is None:
        if required:
            raise ConfigError(key, "missing section")
        return {}
    if not isinstance(sec, dict):
        raise ConfigError(key, "must be an object")
    return sec


def _number(sec, path, key, default=None, kind=float):
    val = sec.get(key, default)
    if val is None:
        raise ConfigError(f"{path}.{key}", "missing value")
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(f"{path}.{key}", f"expected a number, got {val!r}")
    if kind is int and int(val) != val:
        raise ConfigError(f"{path}.{key}", f"expected an integer, got {val!r}")
    return kind(val)


def _number_list(sec, path, key, default=None, kind=float):
    vals = sec.get(key, default)
    if not isinstance(vals, list) or not vals:
        raise ConfigError(f"{path}.{key}", "expected a nonempty list")
    out = []
    for i, v in enumerate(vals):
        if isinstance(v, bool) or not isinstance(v, (int, float)) or (kind is int and int(v) != v):
            raise ConfigError(f"{path}.{key}[{i}]", f"bad entry {v!r}")
        out.append(kind(v))
    return out


def read_mask(path):
    path = Path(path)
    if path.suffix.lower() == ".pgm":
        from PIL import Image
        with Image.open(path) as img:
            pix = np.asarray(img.convert("L"))
        return (pix > 127)[::-1, :].T.copy()
    with open(path, newline="") as fh:
        rows = [[int(float(c)) for c in row] for row in csv.reader(fh) if row]
    return np.array(rows, dtype=int) != 0


def build_domain(cfg):
    sec = _section(cfg, "domain")
    kind = sec.get("kind")
    try:
        if kind == "interval":
            a, b = sec.get("bounds", [0.0, 1.0])
            return GriddedDomain.interval(float(a), float(b), _number(sec, "domain", "n", 256, int))
        if kind == "rectangle":
            bounds = sec.get("bounds", [[0.0, 1.0], [0.0, 1.0]])
            return GriddedDomain.rectangle(bounds, _number(sec, "domain", "n", 64, int))
        if kind == "mask":
            src = sec.get("mask")
            if not isinstance(src, str):
                raise ConfigError("domain.mask", "expected a file name")
            mask_path = Path(cfg.get("_base", ".")) / src
            try:
                mask = read_mask(mask_path)
            except OSError as exc:
                raise ConfigError("domain.mask", f"cannot read {mask_path}: {exc}") from None
            return GriddedDomain.from_mask(mask, sec.get("bounds"))
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError("domain", str(exc)) from None
    raise ConfigError("domain.kind", f"expected interval, rectangle or mask, got {kind!r}")


def build_exponent(cfg, dom):
    sec = _section(cfg, "exponent")
    kind = sec.get("kind")
    bounds = sec.get("bounds", dom.bounds.tolist())
    try:
        if kind == "constant":
            return VariableExponent.constant(_number(sec, "exponent", "value"), bounds)
        if kind == "affine":
            return VariableExponent.affine(_number_list(sec, "exponent", "coeffs"), bounds)
        if kind == "sampled":
            return VariableExponent.sampled(sec.get("samples"), bounds)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError("exponent", str(exc)) from None
    raise ConfigError("exponent.kind", f"expected constant, affine or sampled, got {kind!r}")


def build_solver_options(cfg, seed=None):
    sec = _section(cfg, "solver", required=False)
    unknown = set(sec) - set(_SOLVER_KEYS)
    if unknown:
        raise ConfigError(f"solver.{sorted(unknown)[0]}", "unknown option")
    kwargs = {}
    for key in ("tolerance", "residual_tolerance"):
        if key in sec:
            kwargs[key] = _number(sec, "solver", key)
    for key in ("max_iterations", "restarts"):
        if key in sec:
            kwargs[key] = _number(sec, "solver", key, kind=int)
    if "initialization" in sec:
        kwargs["initialization"] = sec["initialization"]
    kwargs["rng_seed"] = int(cfg.get("seed", 0) if seed is None else seed)
    try:
        return SolverOptions(**kwargs)
    except ValueError as exc:
        raise ConfigError("solver", str(exc)) from None


# -- field files -------------------------------------------------------------------

def _coord_names(dim):
    return ["x"] if dim == 1 else ["x", "y"]


def write_field_csv(path, f):
    """Every node of the grid, coordinates first and the value last."""
    dom = f.domain
    pts = dom.points.reshape(-1, dom.dim)
    vals = f.values.ravel()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(_coord_names(dom.dim) + ["value"])
        for pt, v in zip(pts, vals):
            w.writerow([repr(float(c)) for c in pt] + [repr(float(v))])


def read_field_csv(path, dom):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != _coord_names(dom.dim) + ["value"]:
            raise DataError(f"unexpected field header {header!r}")
        data = np.array([[float(c) for c in row] for row in reader if row])
    if data.shape != (dom.points.size // dom.dim, dom.dim + 1):
        raise DataError("field file does not match the domain size")
    if not np.allclose(data[:, :-1], dom.points.reshape(-1, dom.dim), rtol=0, atol=1e-9 * dom.h):
        raise DataError("field coordinates do not match the domain grid")
    return ScalarField(dom, data[:, -1].reshape(dom.shape))


def write_table_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if np.isfinite(x) else None
    return obj


def write_json(path, payload):
    text = json.dumps(_plain(payload), sort_keys=True, indent=2)
    Path(path).write_text(text + "\n")
