"""P1 matrix assembly over the reduced degrees of freedom.

Builds the mass matrix M, the stiffness matrix A, the potential-weighted
mass M_V and the state-dependent mass M_Gamma whose coefficient is the
energy-difference quotient of the nonlinearity.  One shared 3-point
edge-midpoint quadrature rule (exact through degree 2) is used for every
coefficient-bearing integral and for the nonlinear part of the discrete
energy; this pairing is what closes the discrete conservation algebra
exactly.  Products of P1 basis functions are themselves of degree 2, so
M is still integrated exactly; stiffness integrands are elementwise
constant and assembled from closed-form gradients.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ModelError
from .nonlinearity import DEFAULT_EPS_DEN, gamma_quotient
from .sparse_linalg import SparseMatrix


@dataclass(frozen=True)
class QuadratureRule:
    """Symmetric quadrature on the reference triangle.

    ``points`` holds barycentric coordinates (one row per node), ``weights``
    are area fractions summing to one, ``degree`` is the highest polynomial
    degree integrated exactly.
    """

    points: np.ndarray
    weights: np.ndarray
    degree: int

    def __post_init__(self):
        if (self.weights <= 0).any():
            raise ValueError("quadrature weights must be positive")
        if abs(self.weights.sum() - 1.0) > 1e-14:
            raise ValueError("quadrature weights must sum to 1")


#: edge-midpoint rule: 3 points, weights 1/3, exact for degree 2
EDGE_MIDPOINT_RULE = QuadratureRule(
    points=np.array([[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]]),
    weights=np.array([1.0, 1.0, 1.0]) / 3.0,
    degree=2,
)

#: exact local P1 mass matrix, as a multiple of the element area
LOCAL_MASS = np.array([[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]]) / 12.0


class AssemblyPlan:
    """Precomputed geometry, sparsity pattern and scatter map for one mesh.

    Building the plan is an O(n log n) one-time cost; with it, assembling a
    coefficient-weighted mass matrix reduces to evaluating the coefficient
    at the quadrature points and one scatter pass (the hot kernel).  With
    ``full=True`` the plan addresses all mesh nodes instead of the reduced
    degrees of freedom (useful for unreduced Dirichlet matrices).
    """

    def __init__(self, mesh, rule=EDGE_MIDPOINT_RULE, full=False):
        self.mesh = mesh
        self.rule = rule
        self.full = bool(full)
        tri_nodes = mesh.elements
        if self.full:
            tri = tri_nodes.astype(np.int64)
            n = mesh.n_nodes
        else:
            tri = mesh.dof_map[tri_nodes]
            n = mesh.n_dof
        self.n_dof = n
        self.tri_dofs = tri
        # geometry always comes from the unwrapped node coordinates
        coords = mesh.nodes[tri_nodes]
        e1 = coords[:, 1] - coords[:, 0]
        e2 = coords[:, 2] - coords[:, 0]
        twice_area = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
        if (twice_area <= 0).any():
            raise ValueError("mesh contains non-positively oriented elements")
        self.areas = 0.5 * twice_area
        # constant P1 gradients: grad λ_k = perp(opposite edge) / (2|T|)
        grads = np.empty((coords.shape[0], 3, 2))
        for k in range(3):
            a = coords[:, (k + 1) % 3]
            b = coords[:, (k + 2) % 3]
            grads[:, k, 0] = a[:, 1] - b[:, 1]
            grads[:, k, 1] = b[:, 0] - a[:, 0]
        grads /= twice_area[:, None, None]
        self.grads = grads
        # physical quadrature points and basis values (P1 = barycentric)
        self.basis = rule.points.copy()
        self.quad_xy = np.einsum("qv,evd->eqd", rule.points, coords)
        self.quad_outer = (
            rule.weights[:, None, None] * rule.points[:, :, None] * rule.points[:, None, :]
        ).reshape(rule.points.shape[0], 9)

        self._build_pattern(tri, n)
        gather = np.where(tri >= 0, tri, n)
        self.gather_idx = gather.astype(np.int64)

    def _build_pattern(self, tri, n):
        rows = np.repeat(tri, 3, axis=1).ravel()
        cols = np.tile(tri, (1, 3)).ravel()
        valid = (rows >= 0) & (cols >= 0)
        keys = rows * np.int64(n) + cols
        unique_keys = np.unique(keys[valid])
        self.nnz = unique_keys.size
        self.indices = (unique_keys % n).astype(np.int32 if n < 2**31 else np.int64)
        row_of = unique_keys // n
        self.indptr = np.searchsorted(row_of, np.arange(n + 1)).astype(self.indices.dtype)
        pos = np.full(rows.shape[0], self.nnz, dtype=np.int64)
        pos[valid] = np.searchsorted(unique_keys, keys[valid])
        self.pos = np.ascontiguousarray(pos.reshape(-1, 9))

    # -- evaluation helpers -------------------------------------------------

    def values_at_quad(self, U):
        """Interpolated values of a nodal vector at the quadrature points."""
        U = np.asarray(U)
        if U.shape != (self.n_dof,):
            raise ValueError(f"expected {self.n_dof} values, got {U.shape}")
        Upad = np.concatenate([U, np.zeros(1, dtype=U.dtype)])
        return Upad[self.gather_idx] @ self.basis.T

    def densities_at_quad(self, U):
        v = self.values_at_quad(U)
        if np.iscomplexobj(v):
            return v.real**2 + v.imag**2
        return v * v

    # -- assembly primitives ------------------------------------------------

    def coefficient_mass(self, coeff, scatter=None):
        """Assemble sum_e |T_e| sum_q w_q c[e,q] φ_i(x_q) φ_j(x_q).

        ``scatter`` overrides the kernel backend (benchmarks and
        backend-equivalence tests); the contraction below is the per-step
        hot path.
        """
        coeff = np.ascontiguousarray(coeff, dtype=np.float64)
        data = np.zeros(self.nnz + 1)
        fn = scatter if scatter is not None else kernels.scatter_coefficient_mass
        fn(data, coeff, self.areas, self.pos, self.quad_outer)
        return SparseMatrix(self.indptr, self.indices, data[: self.nnz], self.n_dof)

    def local_matrix_scatter(self, local):
        """Assemble from per-element 3x3 local matrices (pattern-setup path)."""
        buf = np.bincount(
            self.pos.ravel(),
            weights=np.ascontiguousarray(local, dtype=np.float64).reshape(-1, 9).ravel(),
            minlength=self.nnz + 1,
        )
        return SparseMatrix(self.indptr, self.indices, buf[: self.nnz], self.n_dof)

    def nonlinear_energy_term(self, model, U):
        """Quadrature of Gamma(|u|^2), shared with assemble_nonlinear_mass."""
        dens = self.densities_at_quad(U)
        return float(self.areas @ (np.asarray(model.Gamma(dens)) @ self.rule.weights))


def assemble_mass(mesh, plan=None, full=False):
    """Mass matrix (M)_ij = <v_j, v_i>; symmetric positive definite.

    Assembled through the shared quadrature rule, which integrates the
    degree-2 products exactly, so unit-coefficient assembly and the exact
    local matrix coincide.
    """
    plan = plan if plan is not None else AssemblyPlan(mesh, full=full)
    ones = np.ones((plan.areas.size, 3))
    return plan.coefficient_mass(ones)


def assemble_stiffness(mesh, plan=None, full=False):
    """Stiffness matrix A_ij = <grad v_j, grad v_i>; positive semidefinite."""
    plan = plan if plan is not None else AssemblyPlan(mesh, full=full)
    local = np.einsum("eid,ejd->eij", plan.grads, plan.grads)
    local *= plan.areas[:, None, None]
    return plan.local_matrix_scatter(local)


def assemble_potential_mass(mesh, V, plan=None, full=False):
    """(M_V)_ij = <V v_j, v_i> with V evaluated at the quadrature points.

    Sampling (rather than interpolating) V means discontinuous potentials
    are handled directly.  V must be real and nonnegative.
    """
    plan = plan if plan is not None else AssemblyPlan(mesh, full=full)
    vals = np.asarray(V(plan.quad_xy[..., 0], plan.quad_xy[..., 1]), dtype=float)
    if vals.shape != plan.quad_xy.shape[:2]:
        vals = np.broadcast_to(vals, plan.quad_xy.shape[:2]).copy()
    if vals.min() < 0:
        raise ModelError(f"potential takes negative value {vals.min():g}; it must be nonnegative")
    return plan.coefficient_mass(vals)


def assemble_nonlinear_mass(mesh, model, U_next, U_cur, plan=None, eps_den=DEFAULT_EPS_DEN):
    """State-dependent mass with the energy-difference-quotient coefficient.

    At each quadrature point the coefficient is
    (Gamma(b) - Gamma(a)) / (b - a) with a, b the squared moduli of the
    interpolated current/next states (interpolate first, then square).
    Reassembled every fixed-point iteration; the scatter plan is reused.
    """
    plan = plan if plan is not None else AssemblyPlan(mesh)
    a = plan.densities_at_quad(U_cur)
    b = plan.densities_at_quad(U_next)
    coeff = gamma_quotient(a, b, model, eps_den)
    return plan.coefficient_mass(coeff)
