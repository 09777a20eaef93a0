"""Shared fixtures and small helpers for the test suite."""

import numpy as np
import pytest

from nlscn import nonlinearity as nl
from nlscn.assembly import AssemblyPlan, assemble_mass, assemble_potential_mass, assemble_stiffness
from nlscn.mesh import build_mesh


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture(scope="session")
def small_dirichlet():
    """4x4-cell Dirichlet mesh on [-1,1]^2 (9 interior dofs)."""
    return build_mesh((-1, 1, -1, 1), 4, 4, "dirichlet")


@pytest.fixture(scope="session")
def small_periodic():
    """4x4-cell periodic mesh on [-1,1]^2 (16 dofs)."""
    return build_mesh((-1, 1, -1, 1), 4, 4, "periodic")


@pytest.fixture(scope="session")
def cubic_model():
    return nl.cubic(1.0)


@pytest.fixture(scope="session")
def saturated_model():
    return nl.saturated(1.0, 1.0)


def build_matrices(mesh, V=None):
    """Convenience: (plan, M, A, M_V) with V defaulting to zero."""
    plan = AssemblyPlan(mesh)
    M = assemble_mass(mesh, plan=plan)
    A = assemble_stiffness(mesh, plan=plan)
    if V is None:
        V = lambda x, y: np.zeros(np.broadcast_shapes(np.shape(x), np.shape(y)))
    M_V = assemble_potential_mass(mesh, V, plan=plan)
    return plan, M, A, M_V


def random_complex(rng, n, scale=1.0):
    return scale * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
