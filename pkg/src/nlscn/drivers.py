"""Experiment drivers: evolve, convergence study, and CN-vs-SP2 comparison.

Each driver consumes a JSON-parsed config, writes CSV/binary artifacts
into an output directory and returns a report object.  Wall-clock time is
attributed to three phases (assembly, factorization, stepping) that must
account for essentially the whole run; the only work outside them is
config parsing and file output.

Identical configs produce byte-identical CSV output: every reduction in
the pipeline has a fixed order and reports keep wall-clock numbers out of
the CSV files.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import nonlinearity
from .assembly import AssemblyPlan, assemble_mass, assemble_potential_mass, assemble_stiffness
from .config import (
    CN_FEM,
    SP2,
    RunConfig,
    mesh_size_to_cells,
    eval_expression,
    potential_from_spec,
    run_config_from_dict,
)
from .diagnostics import (
    error_norms,
    relative_drift,
    write_error_table_csv,
    write_observables_csv,
)
from .errors import ConfigError
from .groundstate import compute_ground_state
from .mesh import build_mesh
from .spectral import (
    build_grid,
    dofs_from_grid_values,
    evolve_sp2,
    grid_points,
    grid_values_from_dofs,
)
from .stateio import load_state, save_state
from .stepper import CNConfig, CNState, build_operators, evolve


class PhaseTimer:
    """Accumulates wall-clock seconds per named phase."""

    def __init__(self):
        self.seconds = {"assembly": 0.0, "factorization": 0.0, "stepping": 0.0}
        self._t0 = time.perf_counter()

    class _Span:
        def __init__(self, timer, phase):
            self.timer, self.phase = timer, phase

        def __enter__(self):
            self.start = time.perf_counter()

        def __exit__(self, *exc):
            self.timer.seconds[self.phase] += time.perf_counter() - self.start

    def phase(self, name):
        return self._Span(self, name)

    def total(self):
        return time.perf_counter() - self._t0

    def summary(self):
        out = dict(self.seconds)
        out["total"] = self.total()
        return out


@dataclass
class RunResult:
    """In-memory outcome of one run (before any files are written)."""

    cfg: RunConfig
    mesh: object
    plan: object
    model: object
    M: object
    A: object
    M_V: object
    U_final: np.ndarray
    records: list
    timings: dict
    groundstate: dict | None = None


@dataclass
class RunReport:
    """Report for one evolve run; JSON-serializable via to_dict()."""

    config: dict
    records: list
    final_state_path: str | None
    observables_csv: str | None
    timings: dict
    groundstate: dict | None = None
    density_csv: str | None = None

    def to_dict(self):
        recs = self.records
        iters = [r.iters for r in recs[1:]]
        return {
            "config": self.config,
            "n_steps": len(recs) - 1,
            "initial": {"mass": recs[0].mass, "energy": recs[0].energy},
            "final": {"mass": recs[-1].mass, "energy": recs[-1].energy, "t": recs[-1].t},
            "mass_drift": relative_drift([r.mass for r in recs]),
            "energy_drift": relative_drift([r.energy for r in recs]),
            "iterations": {
                "min": min(iters) if iters else 0,
                "max": max(iters) if iters else 0,
                "median": float(np.median(iters)) if iters else 0.0,
            },
            "phase_seconds": self.timings,
            "groundstate": self.groundstate,
            "outputs": {
                "observables_csv": self.observables_csv,
                "final_state": self.final_state_path,
                "density_csv": self.density_csv,
            },
        }


def _model_from_cfg(spec):
    model = nonlinearity.from_config(spec)
    if model.name != "none":
        nonlinearity.validate_model(model, r_max=10.0, n_samples=64)
    return model


def _groundstate_key(bounds, nx, ny, bc, pot_spec, nl_spec, gs_tol, dt_imag, max_iters):
    return json.dumps(
        [list(bounds), nx, ny, bc, pot_spec, nl_spec, gs_tol, dt_imag, max_iters], sort_keys=True
    )


def _initial_data(cfg, mesh, plan, M, timer, gs_cache):
    """Resolve the initial-data spec to a complex nodal vector."""
    spec = cfg.initial_data
    kind = spec.get("type")
    if kind == "ground-state":
        pot_spec = spec.get("potential", cfg.potential)
        nl_spec = spec.get("nonlinearity", cfg.nonlinearity)
        gs_tol = float(spec.get("gs_tol", 1e-10))
        dt_imag = float(spec.get("dt_imag", 0.1))
        max_iters = int(spec.get("max_iters", 20000))
        key = _groundstate_key(cfg.bounds, cfg.nx, cfg.ny, cfg.bc, pot_spec, nl_spec, gs_tol, dt_imag, max_iters)
        if gs_cache is not None and key in gs_cache:
            result = gs_cache[key]
        else:
            gs_model = _model_from_cfg(nl_spec)
            with timer.phase("assembly"):
                A = assemble_stiffness(mesh, plan=plan)
                M_V = assemble_potential_mass(mesh, potential_from_spec(pot_spec), plan=plan)
            with timer.phase("stepping"):
                result = compute_ground_state(
                    mesh, M, A, M_V, gs_model, gs_tol=gs_tol, dt_imag=dt_imag, max_iters=max_iters, plan=plan
                )
            if gs_cache is not None:
                gs_cache[key] = result
        info = {
            "lambda0": result.lambda0,
            "energy0": result.energy0,
            "residual": result.residual,
            "iterations": result.iterations,
        }
        return result.u0.copy(), info
    if kind == "file":
        U, _, _, _ = load_state(spec["path"], expected_mesh=mesh)
        return U, None
    if kind == "expression":
        xy = mesh.dof_coords
        vals = np.asarray(eval_expression(spec["expr"], xy[:, 0], xy[:, 1]), dtype=np.complex128)
        if spec.get("normalize", False):
            nrm = np.sqrt(np.vdot(vals, M @ vals).real)
            if nrm == 0:
                raise ConfigError("initial expression vanishes identically; cannot normalize")
            vals = vals / nrm
        return vals, None
    raise ConfigError(f"unknown initial_data type {kind!r}")


def execute_run(cfg, gs_cache=None):
    """Build the problem and run it to t_final; no files are written."""
    timer = PhaseTimer()
    model = _model_from_cfg(cfg.nonlinearity)
    V = potential_from_spec(cfg.potential)
    mesh = build_mesh(cfg.bounds, cfg.nx, cfg.ny, cfg.bc)
    with timer.phase("assembly"):
        plan = AssemblyPlan(mesh)
        M = assemble_mass(mesh, plan=plan)
        A = assemble_stiffness(mesh, plan=plan)
        M_V = assemble_potential_mass(mesh, V, plan=plan)
    U0, gs_info = _initial_data(cfg, mesh, plan, M, timer, gs_cache)

    if cfg.method == SP2:
        if cfg.nx != cfg.ny:
            raise ConfigError("sp2 needs a square grid (nx == ny)")
        grid = build_grid(cfg.bounds, cfg.nx, values=grid_values_from_dofs(mesh, U0))
        X, Y = grid_points(grid)
        V_samples = np.asarray(V(X, Y), dtype=float)
        with timer.phase("stepping"):
            grid, records = evolve_sp2(grid, cfg.n_steps, V_samples, model, cfg.tau)
        U_final = dofs_from_grid_values(mesh, grid.values)
    else:
        with timer.phase("factorization"):
            ops = build_operators(M, A, M_V, cfg.tau)
        cn_cfg = CNConfig(tau=cfg.tau, fp_tol=cfg.fp_tol, max_iters=cfg.max_iters, predictor=cfg.predictor)
        state0 = CNState(U=U0, t=0.0, step=0)
        with timer.phase("stepping"):
            state, records = evolve(state0, cfg.n_steps, ops, mesh, model, cn_cfg, plan=plan)
        U_final = state.U

    return RunResult(
        cfg=cfg,
        mesh=mesh,
        plan=plan,
        model=model,
        M=M,
        A=A,
        M_V=M_V,
        U_final=U_final,
        records=records,
        timings=timer.summary(),
        groundstate=gs_info,
    )


def _write_density_csv(path, mesh, U):
    xy = mesh.dof_coords
    dens = np.abs(np.asarray(U)) ** 2
    with open(path, "w", newline="") as fh:
        fh.write("x,y,density\n")
        for (x, y), d in zip(xy, dens):
            fh.write(f"{x!r},{y!r},{d!r}\n")


def run_evolve(doc, out_dir, gs_cache=None):
    """Execute one run config and write observables, state and report."""
    cfg = doc if isinstance(doc, RunConfig) else run_config_from_dict(doc)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    result = execute_run(cfg, gs_cache=gs_cache)

    csv_path = out / "observables.csv"
    write_observables_csv(csv_path, result.records)
    state_path = out / "final_state.bin"
    save_state(state_path, result.mesh, result.U_final, t=result.records[-1].t, step=result.records[-1].step)
    density_path = None
    if cfg.dump_density:
        density_path = out / "density.csv"
        _write_density_csv(density_path, result.mesh, result.U_final)

    report = RunReport(
        config=_config_echo(cfg),
        records=result.records,
        final_state_path=str(state_path),
        observables_csv=str(csv_path),
        timings=result.timings,
        groundstate=result.groundstate,
        density_csv=str(density_path) if density_path else None,
    )
    with open(out / "report.json", "w") as fh:
        json.dump(report.to_dict(), fh, indent=2)
    return report


def _config_echo(cfg):
    return {
        "method": cfg.method,
        "domain": {"bounds": list(cfg.bounds), "bc": cfg.bc, "nx": cfg.nx, "ny": cfg.ny},
        "tau": cfg.tau,
        "t_final": cfg.t_final,
        "nonlinearity": cfg.nonlinearity,
        "potential": cfg.potential,
        "initial_data": {k: v for k, v in cfg.initial_data.items()},
        "solver": {"fp_tol": cfg.fp_tol, "max_iters": cfg.max_iters, "predictor": cfg.predictor},
    }


def run_groundstate(doc, out_dir):
    """Compute a ground state and persist it as a state file."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    domain = doc["domain"]
    bounds = tuple(float(v) for v in domain["bounds"])
    mesh = build_mesh(bounds, int(domain["nx"]), int(domain["ny"]), domain.get("bc", "dirichlet"))
    model = _model_from_cfg(doc["nonlinearity"])
    V = potential_from_spec(doc["potential"])
    timer = PhaseTimer()
    with timer.phase("assembly"):
        plan = AssemblyPlan(mesh)
        M = assemble_mass(mesh, plan=plan)
        A = assemble_stiffness(mesh, plan=plan)
        M_V = assemble_potential_mass(mesh, V, plan=plan)
    with timer.phase("stepping"):
        result = compute_ground_state(
            mesh,
            M,
            A,
            M_V,
            model,
            gs_tol=float(doc.get("gs_tol", 1e-10)),
            dt_imag=float(doc.get("dt_imag", 0.1)),
            max_iters=int(doc.get("max_iters", 20000)),
            plan=plan,
        )
    state_path = out / "ground_state.bin"
    save_state(state_path, mesh, result.u0)
    report = {
        "lambda0": result.lambda0,
        "energy0": result.energy0,
        "residual": result.residual,
        "iterations": result.iterations,
        "state_file": str(state_path),
        "phase_seconds": timer.summary(),
    }
    with open(out / "report.json", "w") as fh:
        json.dump(report, fh, indent=2)
    return report


# -- convergence study -------------------------------------------------------


def _fit_order(xs, errs):
    """Least-squares slope of log(err) against log(x); None if undefined."""
    xs = np.asarray(xs, dtype=float)
    errs = np.asarray(errs, dtype=float)
    if xs.size < 2 or (errs <= 0).any() or not np.isfinite(errs).all():
        return None
    slope = np.polyfit(np.log(xs), np.log(errs), 1)[0]
    return float(slope)


def run_convergence(doc, out_dir, threads=1):
    """Grid of runs against a nested reference run; writes the rate table.

    Config keys: ``base`` (a full run config), ``sweep`` with ``h`` and
    ``tau`` lists, ``reference`` with ``h`` and ``tau``.  The tau-order is
    fitted along the finest-h row, the h-order along the finest-tau
    column.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    base = doc["base"]
    sweep = doc["sweep"]
    ref_spec = doc["reference"]
    h_list = [float(h) for h in sweep["h"]]
    tau_list = [float(t) for t in sweep["tau"]]
    bounds = tuple(float(v) for v in base["domain"]["bounds"])

    def cfg_for(h, tau):
        nx, ny = mesh_size_to_cells(bounds, h)
        merged = json.loads(json.dumps(base))
        merged["domain"]["nx"] = nx
        merged["domain"]["ny"] = ny
        merged["tau"] = tau
        return run_config_from_dict(merged)

    ref_h = float(ref_spec["h"])
    ref_tau = float(ref_spec["tau"])
    ref_cfg = cfg_for(ref_h, ref_tau)
    for h in h_list:
        nx, _ = mesh_size_to_cells(bounds, h)
        if nx > ref_cfg.nx:
            raise ConfigError("reference must be at least as fine as every sweep entry")
        if ref_cfg.nx % nx:
            raise ConfigError(f"reference mesh h={ref_h} is not nested in sweep mesh h={h}")
    if any(t < ref_tau for t in tau_list):
        raise ConfigError("reference tau must be <= every sweep tau")

    gs_cache = {}
    t_start = time.perf_counter()
    ref_result = execute_run(ref_cfg, gs_cache=gs_cache)
    ref_ctx = (ref_result.M, ref_result.A, ref_result.plan)

    pairs = [(h, tau) for h in h_list for tau in tau_list]

    def one(pair):
        h, tau = pair
        res = execute_run(cfg_for(h, tau), gs_cache=gs_cache)
        l2, h1, l1 = error_norms(res.mesh, res.U_final, ref_result.mesh, ref_result.U_final, ref_ctx=ref_ctx)
        return {"h": h, "tau": tau, "l2": l2, "h1_semi": h1, "l1_density": l1,
                "seconds": res.timings["total"]}

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(one, pairs))
    else:
        rows = [one(p) for p in pairs]

    table = [(r["h"], r["tau"], r["l2"], r["h1_semi"], r["l1_density"]) for r in rows]
    write_error_table_csv(out / "error_table.csv", table)

    h_fine = min(h_list)
    tau_fine = min(tau_list)
    row_fine_h = sorted((r for r in rows if r["h"] == h_fine), key=lambda r: r["tau"])
    col_fine_tau = sorted((r for r in rows if r["tau"] == tau_fine), key=lambda r: r["h"])
    orders = {
        "tau": {
            norm: _fit_order([r["tau"] for r in row_fine_h], [r[norm] for r in row_fine_h])
            for norm in ("l2", "h1_semi", "l1_density")
        },
        "h": {
            norm: _fit_order([r["h"] for r in col_fine_tau], [r[norm] for r in col_fine_tau])
            for norm in ("l2", "h1_semi", "l1_density")
        },
    }
    report = {
        "reference": {"h": ref_h, "tau": ref_tau},
        "rows": rows,
        "orders": orders,
        "error_table_csv": str(out / "error_table.csv"),
        "total_seconds": time.perf_counter() - t_start,
    }
    with open(out / "report.json", "w") as fh:
        json.dump(report, fh, indent=2)
    return report


# -- method comparison ---------------------------------------------------------


def run_compare(doc, out_dir, threads=1):
    """CN-FEM vs SP2 on the shared periodic problem, against a CN reference.

    The spectral grids are chosen so FEM nodes coincide with grid points;
    spectral solutions are compared through their nodal values on the
    matching mesh (this sampling convention is recorded in the report).
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    base = doc["base"]
    if base["domain"].get("bc") != "periodic":
        raise ConfigError("comparison runs use the periodic problem")
    bounds = tuple(float(v) for v in base["domain"]["bounds"])

    def cfg_for(n, tau, method):
        merged = json.loads(json.dumps(base))
        merged["domain"]["nx"] = int(n)
        merged["domain"]["ny"] = int(n)
        merged["tau"] = tau
        merged["method"] = method
        return run_config_from_dict(merged)

    ref_spec = doc["reference"]
    ref_cfg = cfg_for(ref_spec["nx"], float(ref_spec["tau"]), CN_FEM)
    cn_specs = [(int(r["nx"]), float(r["tau"])) for r in doc.get("cn", [])]
    sp2_specs = [(int(r["n"]), float(r["tau"])) for r in doc.get("sp2", [])]
    for n, _ in cn_specs + sp2_specs:
        if ref_cfg.nx % n:
            raise ConfigError(f"resolution {n} is not nested in the reference mesh {ref_cfg.nx}")

    gs_cache = {}
    t_start = time.perf_counter()
    ref_result = execute_run(ref_cfg, gs_cache=gs_cache)
    ref_ctx = (ref_result.M, ref_result.A, ref_result.plan)

    jobs = [(n, tau, CN_FEM) for n, tau in cn_specs] + [(n, tau, SP2) for n, tau in sp2_specs]

    def one(job):
        n, tau, method = job
        t0 = time.perf_counter()
        res = execute_run(cfg_for(n, tau, method), gs_cache=gs_cache)
        wall = time.perf_counter() - t0
        l2, h1, l1 = error_norms(res.mesh, res.U_final, ref_result.mesh, ref_result.U_final, ref_ctx=ref_ctx)
        return {
            "method": method,
            "resolution": n,
            "tau": tau,
            "l1_density": l1,
            "h1_semi": h1,
            "l2": l2,
            "wall_seconds": wall,
            "initial_energy": res.records[0].energy,
            "mass_drift": relative_drift([r.mass for r in res.records]),
        }

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(one, jobs))
    else:
        rows = [one(j) for j in jobs]

    csv_path = out / "comparison.csv"
    with open(csv_path, "w", newline="") as fh:
        fh.write("method,resolution,tau,l1_density,h1_semi,wall_seconds\n")
        for r in rows:
            fh.write(
                f"{r['method']},{r['resolution']},{r['tau']!r},{r['l1_density']!r},{r['h1_semi']!r},{r['wall_seconds']!r}\n"
            )

    report = {
        "reference": {"nx": ref_cfg.nx, "tau": ref_cfg.tau, "initial_energy": ref_result.records[0].energy},
        "sampling": "spectral solutions are compared via their values at the coincident FEM nodes",
        "rows": rows,
        "comparison_csv": str(csv_path),
        "total_seconds": time.perf_counter() - t_start,
    }
    with open(out / "report.json", "w") as fh:
        json.dump(report, fh, indent=2)
    return report
