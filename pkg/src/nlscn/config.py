"""Run configuration: JSON schema parsing, potentials and initial data.

A run config is a single JSON document; see ``configs/harmonic.json`` and
``configs/discontinuous.json`` for the two shipped experiment presets.
Top-level keys:

    method        "cn-fem" | "sp2"
    domain        {"bounds": [ax,bx,ay,by], "bc": "dirichlet"|"periodic",
                   "nx": int, "ny": int}
    tau           time step (T_final/tau must be an integer step count)
    t_final       final time
    nonlinearity  {"type": "saturated"|"power"|"cubic"|"none", ...}
    potential     {"type": "harmonic", "nu_x", "nu_y"}
                  | {"type": "harmonic-barrier", "nu_x", "nu_y",
                     "height", "half_width"}
                  | {"type": "expression", "expr": "..."}
                  | {"type": "zero"}
    initial_data  {"type": "ground-state", "potential": {...},
                   "nonlinearity": {...}?, "gs_tol"?, "dt_imag"?, "max_iters"?}
                  | {"type": "file", "path": "..."}
                  | {"type": "expression", "expr": "...", "normalize": bool}
    solver        {"fp_tol": float, "max_iters": int, "predictor": str}
    dump_density  bool (write a final |u|^2 CSV)
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError

CN_FEM = "cn-fem"
SP2 = "sp2"

_EXPR_NAMES = {
    name: getattr(np, name)
    for name in (
        "sin", "cos", "tan", "exp", "log", "log1p", "sqrt", "abs",
        "sinh", "cosh", "tanh", "arctan", "where", "minimum", "maximum",
    )
}
_EXPR_NAMES["pi"] = np.pi


def eval_expression(expr, x, y):
    """Evaluate a config expression of x and y with numpy semantics."""
    try:
        out = eval(expr, {"__builtins__": {}}, {**_EXPR_NAMES, "x": x, "y": y})
    except Exception as exc:
        raise ConfigError(f"could not evaluate expression {expr!r}: {exc}") from exc
    return np.broadcast_to(np.asarray(out), np.broadcast_shapes(np.shape(x), np.shape(y)))


def potential_from_spec(spec):
    """Vectorized V(x, y) callable from a potential spec mapping."""
    if not isinstance(spec, dict) or "type" not in spec:
        raise ConfigError(f"potential spec must be a mapping with a 'type': {spec!r}")
    kind = spec["type"]
    try:
        if kind == "zero":
            return lambda x, y: np.zeros(np.broadcast_shapes(np.shape(x), np.shape(y)))
        if kind == "harmonic":
            nux, nuy = float(spec["nu_x"]), float(spec["nu_y"])
            return lambda x, y: (nux * x) ** 2 + (nuy * y) ** 2
        if kind == "harmonic-barrier":
            nux, nuy = float(spec["nu_x"]), float(spec["nu_y"])
            height = float(spec["height"])
            w = float(spec["half_width"])

            def barrier(x, y):
                base = (nux * x) ** 2 + (nuy * y) ** 2
                return base + height * ((np.abs(x) >= w).astype(float) + (np.abs(y) >= w).astype(float))

            return barrier
        if kind == "expression":
            expr = spec["expr"]
            return lambda x, y: eval_expression(expr, x, y)
    except KeyError as missing:
        raise ConfigError(f"potential {kind!r} is missing parameter {missing}") from None
    raise ConfigError(f"unknown potential type {kind!r}")


@dataclass(frozen=True)
class RunConfig:
    """Validated run description (one evolve call)."""

    method: str
    bounds: tuple
    bc: str
    nx: int
    ny: int
    tau: float
    t_final: float
    nonlinearity: dict
    potential: dict
    initial_data: dict
    fp_tol: float = 1e-14
    max_iters: int = 50
    predictor: str = "previous-step"
    dump_density: bool = False
    base_dir: Path = field(default_factory=Path)

    @property
    def n_steps(self):
        n = self.t_final / self.tau
        return int(round(n))

    def with_overrides(self, **kw):
        from dataclasses import replace

        return replace(self, **kw)


def _require(mapping, key, context):
    if key not in mapping:
        raise ConfigError(f"{context} is missing required key {key!r}")
    return mapping[key]


def run_config_from_dict(doc, base_dir=None):
    """Validate a parsed JSON document into a RunConfig."""
    if not isinstance(doc, dict):
        raise ConfigError("run config must be a JSON object")
    method = doc.get("method", CN_FEM)
    if method not in (CN_FEM, SP2):
        raise ConfigError(f"method must be '{CN_FEM}' or '{SP2}', got {method!r}")
    domain = _require(doc, "domain", "run config")
    bounds = tuple(float(v) for v in _require(domain, "bounds", "domain"))
    if len(bounds) != 4:
        raise ConfigError("domain bounds must be [ax, bx, ay, by]")
    bc = domain.get("bc", "dirichlet")
    nx = int(_require(domain, "nx", "domain"))
    ny = int(_require(domain, "ny", "domain"))
    tau = float(_require(doc, "tau", "run config"))
    t_final = float(_require(doc, "t_final", "run config"))
    if tau <= 0 or t_final < 0:
        raise ConfigError("tau must be positive and t_final nonnegative")
    steps = t_final / tau
    if abs(steps - round(steps)) > 0.5 * np.spacing(max(steps, 1.0)):
        raise ConfigError(f"t_final/tau = {steps!r} is not an integer step count")
    if method == SP2 and bc != "periodic":
        raise ConfigError("the sp2 method needs periodic boundaries")

    solver = doc.get("solver", {})
    initial = _require(doc, "initial_data", "run config")
    if initial.get("type") == "file":
        path = Path(_require(initial, "path", "initial_data"))
        if base_dir is not None and not path.is_absolute():
            path = Path(base_dir) / path
        if not path.exists():
            raise ConfigError(f"initial state file {path} does not exist")
        initial = {**initial, "path": str(path)}

    return RunConfig(
        method=method,
        bounds=bounds,
        bc=bc,
        nx=nx,
        ny=ny,
        tau=tau,
        t_final=t_final,
        nonlinearity=_require(doc, "nonlinearity", "run config"),
        potential=_require(doc, "potential", "run config"),
        initial_data=initial,
        fp_tol=float(solver.get("fp_tol", 1e-14)),
        max_iters=int(solver.get("max_iters", 50)),
        predictor=solver.get("predictor", "previous-step"),
        dump_density=bool(doc.get("dump_density", False)),
        base_dir=Path(base_dir) if base_dir is not None else Path(),
    )


def load_run_config(path):
    path = Path(path)
    with open(path) as fh:
        doc = json.load(fh)
    return run_config_from_dict(doc, base_dir=path.parent)


def load_json(path):
    with open(path) as fh:
        return json.load(fh)


def mesh_size_to_cells(bounds, h):
    """Cells per axis for a target mesh size h (must divide both extents)."""
    ax, bx, ay, by = bounds
    nx = (bx - ax) / h
    ny = (by - ay) / h
    if abs(nx - round(nx)) > 1e-9 * max(nx, 1.0) or abs(ny - round(ny)) > 1e-9 * max(ny, 1.0):
        raise ConfigError(f"mesh size {h} does not divide the domain extents")
    return int(round(nx)), int(round(ny))
