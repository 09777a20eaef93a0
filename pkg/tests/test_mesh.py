"""Mesh construction, point evaluation and nested transfer."""

import numpy as np
import pytest

from nlscn.errors import ConfigError, DomainError
from nlscn.mesh import build_mesh, eval_p1, prolong_nested, restrict_nested


class TestBuildMesh:
    def test_counts_h_and_dofs(self):
        m = build_mesh((-5, 5, -5, 5), 80, 80, "dirichlet")
        assert m.h == pytest.approx(0.125)
        assert m.n_dof == 79**2 == 6241
        assert m.n_elements == 2 * 80**2

    def test_anisotropic_h(self):
        m = build_mesh((0, 2, 0, 1), 4, 4, "dirichlet")
        assert m.h == pytest.approx(0.5)
        assert m.dx == pytest.approx(0.5) and m.dy == pytest.approx(0.25)

    def test_smallest_periodic_torus(self):
        m = build_mesh((-5, 5, -5, 5), 2, 2, "periodic")
        assert m.n_dof == 4

    def test_positive_orientation_and_area_sum(self):
        for bc in ("dirichlet", "periodic"):
            m = build_mesh((-5, 5, -5, 5), 7, 5, bc)
            p = m.nodes[m.elements]
            cross = (p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1]) - (
                p[:, 1, 1] - p[:, 0, 1]
            ) * (p[:, 2, 0] - p[:, 0, 0])
            assert (cross > 0).all()
            assert 0.5 * cross.sum() == pytest.approx(100.0, rel=1e-12)

    def test_periodic_identification(self):
        m = build_mesh((0, 1, 0, 1), 3, 3, "periodic")
        # opposite edges share dofs, corners identified four-way
        nn = m.nx + 1
        assert m.dof_map[0] == m.dof_map[3]            # left-right edge
        assert m.dof_map[0] == m.dof_map[3 * nn]       # bottom-top edge
        assert m.dof_map[0] == m.dof_map[3 * nn + 3]   # corner
        assert m.n_dof == 9

    def test_validation(self):
        with pytest.raises(ConfigError):
            build_mesh((1, 1, 0, 1), 4, 4)
        with pytest.raises(ConfigError):
            build_mesh((0, 1, 0, 1), 1, 4)
        with pytest.raises(ConfigError):
            build_mesh((0, 1, 0, 1), 4, 4, "neumann")


class TestEvalP1:
    def test_affine_reproduction(self, rng):
        m = build_mesh((-5, 5, -5, 5), 9, 7, "dirichlet")
        xy = m.dof_coords
        U = xy[:, 0] + 2.0 * xy[:, 1]
        pts = np.column_stack([rng.uniform(-4, 4, 40), rng.uniform(-4, 4, 40)])
        vals = eval_p1(m, U, pts)
        # P1 reproduces affine functions exactly away from the (zeroed) boundary cells
        inner = (np.abs(pts) < 3.8).all(axis=1)
        np.testing.assert_allclose(vals[inner], (pts[:, 0] + 2 * pts[:, 1])[inner], atol=1e-13)

    def test_zero_everywhere(self, small_dirichlet):
        U = np.zeros(small_dirichlet.n_dof)
        assert eval_p1(small_dirichlet, U, (0.3, -0.2)) == 0.0

    def test_node_roundtrip(self, small_periodic, rng):
        U = rng.standard_normal(small_periodic.n_dof) + 1j * rng.standard_normal(small_periodic.n_dof)
        vals = eval_p1(small_periodic, U, small_periodic.dof_coords)
        np.testing.assert_allclose(vals, U, atol=1e-14)

    def test_interpolation_second_order(self):
        # against the exact function, nodal interpolation error is O(h^2)
        errs = []
        p = (0.37, 1.41)
        exact = np.sin(np.pi * p[0] / 10) * np.cos(np.pi * p[1] / 10)
        for n in (20, 40, 80):
            m = build_mesh((-5, 5, -5, 5), n, n, "periodic")
            xy = m.dof_coords
            U = np.sin(np.pi * xy[:, 0] / 10) * np.cos(np.pi * xy[:, 1] / 10)
            errs.append(abs(eval_p1(m, U, p) - exact))
        assert errs[2] < errs[1] < errs[0]
        assert errs[0] / errs[2] > 8.0  # two halvings of h: ~16x for O(h^2)

    def test_periodic_wrapping(self, small_periodic, rng):
        U = rng.standard_normal(small_periodic.n_dof)
        v1 = eval_p1(small_periodic, U, (0.3, 0.1))
        v2 = eval_p1(small_periodic, U, (0.3 + 2.0, 0.1 - 4.0))  # shift by full periods
        assert v1 == pytest.approx(v2, abs=1e-12)

    def test_outside_domain_rejected(self, small_dirichlet):
        with pytest.raises(DomainError):
            eval_p1(small_dirichlet, np.zeros(small_dirichlet.n_dof), (1.5, 0.0))


class TestNestedTransfer:
    def test_restrict_identity(self, rng):
        m = build_mesh((-5, 5, -5, 5), 8, 8, "dirichlet")
        U = rng.standard_normal(m.n_dof)
        np.testing.assert_array_equal(restrict_nested(m, U, m), U)

    def test_restrict_affine_exact(self):
        fine = build_mesh((-5, 5, -5, 5), 16, 16, "dirichlet")
        coarse = build_mesh((-5, 5, -5, 5), 8, 8, "dirichlet")
        f = lambda xy: 3.0 * xy[:, 0] - xy[:, 1]
        Uf = f(fine.dof_coords)
        np.testing.assert_allclose(restrict_nested(fine, Uf, coarse), f(coarse.dof_coords), atol=1e-13)

    def test_restrict_matches_eval(self, rng):
        for bc in ("dirichlet", "periodic"):
            fine = build_mesh((-5, 5, -5, 5), 12, 12, bc)
            coarse = build_mesh((-5, 5, -5, 5), 4, 4, bc)
            Uf = rng.standard_normal(fine.n_dof) + 1j * rng.standard_normal(fine.n_dof)
            R = restrict_nested(fine, Uf, coarse)
            vals = eval_p1(fine, Uf, coarse.dof_coords)
            np.testing.assert_allclose(R, vals, atol=1e-13)

    def test_restrict_rejects_non_nested(self):
        fine = build_mesh((-5, 5, -5, 5), 12, 12, "dirichlet")
        coarse = build_mesh((-5, 5, -5, 5), 5, 5, "dirichlet")
        with pytest.raises(ConfigError):
            restrict_nested(fine, np.zeros(fine.n_dof), coarse)
        other = build_mesh((-4, 4, -4, 4), 6, 6, "dirichlet")
        with pytest.raises(ConfigError):
            restrict_nested(fine, np.zeros(fine.n_dof), other)

    def test_prolong_then_restrict_roundtrip(self, rng):
        for bc in ("dirichlet", "periodic"):
            coarse = build_mesh((-5, 5, -5, 5), 6, 6, bc)
            fine = build_mesh((-5, 5, -5, 5), 18, 18, bc)
            Uc = rng.standard_normal(coarse.n_dof) + 1j * rng.standard_normal(coarse.n_dof)
            P = prolong_nested(coarse, Uc, fine)
            np.testing.assert_allclose(restrict_nested(fine, P, coarse), Uc, atol=1e-14)

    def test_prolong_matches_eval(self, rng):
        coarse = build_mesh((-5, 5, -5, 5), 5, 5, "periodic")
        fine = build_mesh((-5, 5, -5, 5), 15, 15, "periodic")
        Uc = rng.standard_normal(coarse.n_dof)
        P = prolong_nested(coarse, Uc, fine)
        vals = eval_p1(coarse, Uc, fine.dof_coords)
        np.testing.assert_allclose(P, vals, atol=1e-13)
