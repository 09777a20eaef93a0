"""Structured P1 triangulations of a rectangle.

Every cell of the nx-by-ny grid is split along the same lower-left to
upper-right diagonal, so all triangles are congruent up to reflection and
assembly/error tables are reproducible.  Dirichlet boundaries are handled
by eliminating boundary nodes from the degree-of-freedom set; periodic
boundaries by identifying opposite edges (corners four-way).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ConfigError, DomainError

DIRICHLET = "dirichlet"
PERIODIC = "periodic"


@dataclass(frozen=True)
class RectMesh:
    """Immutable structured triangulation of ``[ax,bx] x [ay,by]``.

    ``nodes`` lists all grid nodes (including identified/boundary ones);
    ``elements`` are node-index triples with positive orientation;
    ``dof_map`` sends a node to its reduced degree of freedom (-1 for
    eliminated Dirichlet boundary nodes, the identified target for
    periodic ones).
    """

    bounds: tuple
    nx: int
    ny: int
    bc_kind: str
    nodes: np.ndarray
    elements: np.ndarray
    dof_map: np.ndarray
    n_dof: int
    dx: float
    dy: float
    h: float

    @property
    def n_nodes(self):
        return self.nodes.shape[0]

    @property
    def n_elements(self):
        return self.elements.shape[0]

    @cached_property
    def gather_index(self):
        """Node -> padded-dof index; eliminated nodes point at slot n_dof."""
        return np.where(self.dof_map >= 0, self.dof_map, self.n_dof)

    @cached_property
    def dof_coords(self):
        """Coordinates of the node owning each reduced degree of freedom."""
        coords = np.empty((self.n_dof, 2))
        own = self.dof_map >= 0
        if self.bc_kind == PERIODIC:
            # keep only the primary (unwrapped) copy of identified nodes
            i = np.arange(self.n_nodes) % (self.nx + 1)
            j = np.arange(self.n_nodes) // (self.nx + 1)
            own &= (i < self.nx) & (j < self.ny)
        coords[self.dof_map[own]] = self.nodes[own]
        return coords

    def pad_values(self, U):
        """Append the zero Dirichlet value so gather_index can index it."""
        U = np.asarray(U)
        if U.shape != (self.n_dof,):
            raise ValueError(f"expected {self.n_dof} nodal values, got {U.shape}")
        return np.concatenate([U, np.zeros(1, dtype=U.dtype)])


def build_mesh(bounds, nx, ny, bc_kind=DIRICHLET):
    """Triangulate the rectangle ``bounds = (ax, bx, ay, by)``.

    nx, ny >= 2 cells per axis; dof count is (nx-1)(ny-1) for Dirichlet
    and nx*ny for periodic meshes.
    """
    ax, bx, ay, by = (float(v) for v in bounds)
    if not (bx > ax and by > ay):
        raise ConfigError(f"degenerate rectangle {bounds}")
    if nx < 2 or ny < 2:
        raise ConfigError("need at least 2 cells per axis")
    if bc_kind not in (DIRICHLET, PERIODIC):
        raise ConfigError(f"unknown boundary treatment {bc_kind!r}")
    nx, ny = int(nx), int(ny)
    dx = (bx - ax) / nx
    dy = (by - ay) / ny

    ii, jj = np.meshgrid(np.arange(nx + 1), np.arange(ny + 1), indexing="xy")
    nodes = np.column_stack([(ax + ii * dx).ravel(), (ay + jj * dy).ravel()])

    # cell (i, j): diagonal from lower-left to upper-right
    ci, cj = np.meshgrid(np.arange(nx), np.arange(ny), indexing="xy")
    n00 = (cj * (nx + 1) + ci).ravel()
    n10 = n00 + 1
    n01 = n00 + (nx + 1)
    n11 = n01 + 1
    lower = np.column_stack([n00, n10, n11])
    upper = np.column_stack([n00, n11, n01])
    elements = np.empty((2 * nx * ny, 3), dtype=np.int64)
    elements[0::2] = lower
    elements[1::2] = upper

    i_of = np.arange((nx + 1) * (ny + 1)) % (nx + 1)
    j_of = np.arange((nx + 1) * (ny + 1)) // (nx + 1)
    if bc_kind == DIRICHLET:
        interior = (i_of >= 1) & (i_of <= nx - 1) & (j_of >= 1) & (j_of <= ny - 1)
        dof_map = np.full((nx + 1) * (ny + 1), -1, dtype=np.int64)
        dof_map[interior] = np.arange(interior.sum())
        n_dof = (nx - 1) * (ny - 1)
    else:
        dof_map = ((j_of % ny) * nx + (i_of % nx)).astype(np.int64)
        n_dof = nx * ny

    return RectMesh(
        bounds=(ax, bx, ay, by),
        nx=nx,
        ny=ny,
        bc_kind=bc_kind,
        nodes=nodes,
        elements=elements,
        dof_map=dof_map,
        n_dof=n_dof,
        dx=dx,
        dy=dy,
        h=max(dx, dy),
    )


def _cell_coords(mesh, x, y):
    """Cell indices and local (xi, eta) in [0,1]^2 for points inside bounds."""
    ax, bx, ay, by = mesh.bounds
    fx = (x - ax) / mesh.dx
    fy = (y - ay) / mesh.dy
    i = np.clip(np.floor(fx).astype(np.int64), 0, mesh.nx - 1)
    j = np.clip(np.floor(fy).astype(np.int64), 0, mesh.ny - 1)
    return i, j, fx - i, fy - j


def _interp_in_cells(mesh, Upad, i, j, xi, eta):
    """P1 interpolation given cell indices and local coordinates."""
    n00 = j * (mesh.nx + 1) + i
    gi = mesh.gather_index
    v00 = Upad[gi[n00]]
    v10 = Upad[gi[n00 + 1]]
    v01 = Upad[gi[n00 + mesh.nx + 1]]
    v11 = Upad[gi[n00 + mesh.nx + 2]]
    # lower triangle (eta <= xi): vertices 00, 10, 11; upper: 00, 11, 01
    low = (1.0 - xi) * v00 + (xi - eta) * v10 + eta * v11
    up = (1.0 - eta) * v00 + xi * v11 + (eta - xi) * v01
    return np.where(eta <= xi, low, up)


def eval_p1(mesh, U, points):
    """Evaluate the P1 function with nodal values ``U`` at ``points``.

    ``points`` is a single (x, y) pair or an (n, 2) array.  Periodic
    meshes wrap coordinates into the fundamental box; for Dirichlet
    meshes points outside the rectangle raise DomainError.
    """
    pts = np.asarray(points, dtype=float)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    if pts.shape[1] != 2:
        raise ValueError("points must have shape (2,) or (n, 2)")
    x = pts[:, 0].copy()
    y = pts[:, 1].copy()
    ax, bx, ay, by = mesh.bounds
    if mesh.bc_kind == PERIODIC:
        x = ax + np.mod(x - ax, bx - ax)
        y = ay + np.mod(y - ay, by - ay)
    else:
        tol = 1e-12 * max(bx - ax, by - ay)
        if (x < ax - tol).any() or (x > bx + tol).any() or (y < ay - tol).any() or (y > by + tol).any():
            raise DomainError("evaluation point outside the computational domain")
        x = np.clip(x, ax, bx)
        y = np.clip(y, ay, by)
    Upad = mesh.pad_values(U)
    i, j, xi, eta = _cell_coords(mesh, x, y)
    out = _interp_in_cells(mesh, Upad, i, j, xi, eta)
    if single:
        return complex(out[0]) if np.iscomplexobj(out) else float(out[0])
    return out


def _check_nested(coarse, fine):
    if coarse.bc_kind != fine.bc_kind or coarse.bounds != fine.bounds:
        raise ConfigError("meshes must share bounds and boundary treatment")
    if fine.nx % coarse.nx or fine.ny % coarse.ny:
        raise ConfigError(
            f"{coarse.nx}x{coarse.ny} does not divide {fine.nx}x{fine.ny}: meshes are not nested"
        )
    return fine.nx // coarse.nx, fine.ny // coarse.ny


def restrict_nested(fine_mesh, U_fine, coarse_mesh):
    """Pointwise restriction: coarse nodal values = fine values at shared nodes."""
    rx, ry = _check_nested(coarse_mesh, fine_mesh)
    U_fine = np.asarray(U_fine)
    if U_fine.shape != (fine_mesh.n_dof,):
        raise ValueError("fine vector length does not match the fine mesh")
    # coarse dof node (i, j) coincides with fine node (i*rx, j*ry)
    own = coarse_mesh.dof_map >= 0
    if coarse_mesh.bc_kind == PERIODIC:
        i_of = np.arange(coarse_mesh.n_nodes) % (coarse_mesh.nx + 1)
        j_of = np.arange(coarse_mesh.n_nodes) // (coarse_mesh.nx + 1)
        own &= (i_of < coarse_mesh.nx) & (j_of < coarse_mesh.ny)
    idx = np.nonzero(own)[0]
    ic = idx % (coarse_mesh.nx + 1)
    jc = idx // (coarse_mesh.nx + 1)
    fine_node = (jc * ry) * (fine_mesh.nx + 1) + ic * rx
    fine_dof = fine_mesh.dof_map[fine_node]
    out = np.empty(coarse_mesh.n_dof, dtype=U_fine.dtype)
    out[coarse_mesh.dof_map[idx]] = U_fine[fine_dof]
    return out


def prolong_nested(coarse_mesh, U_coarse, fine_mesh):
    """P1 interpolation of a coarse nodal vector onto a nested fine mesh.

    Uses integer cell arithmetic, so values at shared nodes are exact;
    with equal refinement ratios the result represents the same function
    (coarse P1 spaces are nested in fine ones when the diagonals align).
    """
    rx, ry = _check_nested(coarse_mesh, fine_mesh)
    U_coarse = np.asarray(U_coarse)
    if U_coarse.shape != (coarse_mesh.n_dof,):
        raise ValueError("coarse vector length does not match the coarse mesh")
    own = fine_mesh.dof_map >= 0
    if fine_mesh.bc_kind == PERIODIC:
        i_of = np.arange(fine_mesh.n_nodes) % (fine_mesh.nx + 1)
        j_of = np.arange(fine_mesh.n_nodes) // (fine_mesh.nx + 1)
        own &= (i_of < fine_mesh.nx) & (j_of < fine_mesh.ny)
    idx = np.nonzero(own)[0]
    i_f = idx % (fine_mesh.nx + 1)
    j_f = idx // (fine_mesh.nx + 1)
    i_c = np.minimum(i_f // rx, coarse_mesh.nx - 1)
    j_c = np.minimum(j_f // ry, coarse_mesh.ny - 1)
    xi = (i_f - i_c * rx) / rx
    eta = (j_f - j_c * ry) / ry
    Upad = coarse_mesh.pad_values(U_coarse)
    vals = _interp_in_cells(coarse_mesh, Upad, i_c, j_c, xi, eta)
    out = np.zeros(fine_mesh.n_dof, dtype=vals.dtype)
    out[fine_mesh.dof_map[idx]] = vals
    return out
