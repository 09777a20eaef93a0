"""Discrete observables: mass, energy, and error norms between runs.

The discrete energy pairs the exact quadratic forms of A and M_V with the
same 3-point quadrature of Gamma(|u|^2) that the nonlinear mass assembly
uses; only with this pairing is the energy of the Crank-Nicolson iterates
conserved to solver tolerance rather than to quadrature accuracy.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .assembly import AssemblyPlan, assemble_mass, assemble_stiffness
from .errors import ConfigError
from .mesh import prolong_nested


@dataclass(frozen=True)
class ObservableRecord:
    """One per-step row of the run log (also the CSV row schema)."""

    step: int
    t: float
    mass: float
    energy: float
    iters: int
    residual: float


CSV_HEADER = ("step", "t", "mass", "energy", "iters", "residual")


def mass(M, U):
    """conj(U)^T M U; the imaginary part must vanish to rounding."""
    U = np.asarray(U)
    val = np.vdot(U, M @ U)
    scale = max(abs(val), 1e-300)
    assert abs(val.imag) <= 1e-14 * scale, f"mass has imaginary part {val.imag:g}"
    return float(val.real)


def energy(A, M_V, mesh, model, U, plan=None):
    """Discrete energy 1/2 (<grad u, grad u> + <V u, u> + quad(Gamma(|u|^2)))."""
    plan = plan if plan is not None else AssemblyPlan(mesh)
    U = np.asarray(U)
    quad = np.vdot(U, A @ U).real + np.vdot(U, M_V @ U).real
    return 0.5 * (quad + plan.nonlinear_energy_term(model, U))


def density_l1_distance(plan, U, V):
    """Quadrature of | |u|^2 - |v|^2 | on the plan's mesh."""
    diff = np.abs(plan.densities_at_quad(U) - plan.densities_at_quad(V))
    return float(plan.areas @ (diff @ plan.rule.weights))


def error_norms(mesh, U, ref_mesh, U_ref, ref_ctx=None):
    """L2, H1-seminorm and L1-of-density distances to a reference state.

    ``ref_mesh`` must nested-refine ``mesh`` (or equal it).  U is prolonged
    to the reference mesh by P1 interpolation and all three integrals are
    evaluated there, so node-sampling superconvergence cannot flatter the
    rates.  ``ref_ctx`` optionally provides (M_ref, A_ref, plan_ref) to
    avoid reassembly in sweeps.
    """
    if ref_ctx is None:
        plan_ref = AssemblyPlan(ref_mesh)
        M_ref = assemble_mass(ref_mesh, plan=plan_ref)
        A_ref = assemble_stiffness(ref_mesh, plan=plan_ref)
    else:
        M_ref, A_ref, plan_ref = ref_ctx
    U_ref = np.asarray(U_ref)
    if U_ref.shape != (ref_mesh.n_dof,):
        raise ConfigError("reference vector does not match the reference mesh")
    P = prolong_nested(mesh, np.asarray(U), ref_mesh) if mesh is not ref_mesh else np.asarray(U)
    e = P - U_ref
    l2 = float(np.sqrt(max(np.vdot(e, M_ref @ e).real, 0.0)))
    h1 = float(np.sqrt(max(np.vdot(e, A_ref @ e).real, 0.0)))
    l1 = density_l1_distance(plan_ref, P, U_ref)
    return l2, h1, l1


def write_observables_csv(path, records):
    """Write the per-step log; float formatting is shortest-roundtrip, so
    identical runs produce byte-identical files."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for r in records:
            writer.writerow([r.step, repr(r.t), repr(r.mass), repr(r.energy), r.iters, repr(r.residual)])


def write_error_table_csv(path, rows):
    """Error table rows: (h, tau, l2, h1_semi, l1_density)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("h", "tau", "l2", "h1_semi", "l1_density"))
        for h, tau, l2, h1, l1 in rows:
            writer.writerow([repr(float(h)), repr(float(tau)), repr(float(l2)), repr(float(h1)), repr(float(l1))])


def relative_drift(values):
    """max_n |q_n - q_0| / |q_0| over a sequence of observable values."""
    vals = np.asarray(list(values), dtype=float)
    if vals.size == 0:
        return 0.0
    q0 = vals[0]
    scale = max(abs(q0), 1e-300)
    return float(np.max(np.abs(vals - q0)) / scale)
