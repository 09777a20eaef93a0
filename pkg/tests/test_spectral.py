"""Strang-splitting Fourier integrator on the periodic box."""

import numpy as np
import pytest

from nlscn import nonlinearity as nl
from nlscn.errors import ConfigError
from nlscn.mesh import build_mesh
from nlscn.spectral import (
    build_grid,
    dofs_from_grid_values,
    evolve_sp2,
    fourier_forward,
    fourier_inverse,
    grid_energy,
    grid_mass,
    grid_points,
    grid_values_from_dofs,
    sp2_step,
)

BOUNDS = (-5.0, 5.0, -5.0, 5.0)


def plane_wave(grid, mx, my):
    X, Y = grid_points(grid)
    L = grid.bounds[1] - grid.bounds[0]
    kx = 2 * np.pi * mx / L
    ky = 2 * np.pi * my / L
    return np.exp(1j * (kx * X + ky * Y)), kx, ky


class TestTransforms:
    def test_power_of_two_required(self):
        with pytest.raises(ConfigError):
            build_grid(BOUNDS, 48)

    def test_constant_field_single_mode(self):
        grid = build_grid(BOUNDS, 16, values=np.full((16, 16), 2.0 + 1j))
        modes = fourier_forward(grid)
        assert abs(modes[0, 0] - 16**2 * (2.0 + 1j)) < 1e-10
        modes[0, 0] = 0.0
        assert np.abs(modes).max() < 1e-10

    def test_plane_wave_is_delta_in_mode_space(self):
        grid = build_grid(BOUNDS, 32)
        vals, kx, ky = plane_wave(grid, 3, -5)
        modes = fourier_forward(grid.with_values(vals))
        idx = np.unravel_index(np.argmax(np.abs(modes)), modes.shape)
        assert grid.kx[idx[0]] == pytest.approx(kx)
        assert grid.ky[idx[1]] == pytest.approx(ky)
        modes[idx] = 0.0
        assert np.abs(modes).max() < 1e-9

    def test_roundtrip_and_parseval(self, rng):
        grid = build_grid(BOUNDS, 64)
        vals = rng.standard_normal((64, 64)) + 1j * rng.standard_normal((64, 64))
        grid = grid.with_values(vals)
        modes = fourier_forward(grid)
        back = fourier_inverse(grid, modes)
        np.testing.assert_allclose(back.values, vals, atol=1e-12)
        assert np.sum(np.abs(modes) ** 2) / 64**2 == pytest.approx(np.sum(np.abs(vals) ** 2), rel=1e-12)


class TestSp2Step:
    def test_kinetic_flow_exact_any_tau(self):
        # V = 0, gamma = 0, single plane wave: exact phase for any tau
        grid = build_grid(BOUNDS, 32)
        vals, kx, ky = plane_wave(grid, 2, 1)
        model = nl.linear()
        V = np.zeros((32, 32))
        tau = 0.37
        out = sp2_step(grid.with_values(vals), V, model, tau)
        np.testing.assert_allclose(out.values, np.exp(-1j * (kx**2 + ky**2) * tau) * vals, atol=1e-12)

    def test_constant_potential_commutes(self):
        grid = build_grid(BOUNDS, 32)
        vals, kx, ky = plane_wave(grid, 1, 0)
        model = nl.linear()
        c = 2.5
        tau = 0.11
        out = sp2_step(grid.with_values(vals), np.full((32, 32), c), model, tau)
        np.testing.assert_allclose(out.values, np.exp(-1j * (kx**2 + ky**2 + c) * tau) * vals, atol=1e-12)

    def test_cubic_plane_wave_dispersion(self):
        # uniform density: both subflows act by uniform phases, so the wave
        # follows omega = |k|^2 + gamma(rho^2) essentially exactly; assert the
        # O(tau^2)-accuracy claim with a margin that rounding cannot miss
        grid = build_grid(BOUNDS, 32)
        rho = 0.8
        vals, kx, ky = plane_wave(grid, 2, -1)
        vals = rho * vals
        model = nl.cubic(1.5)
        omega = kx**2 + ky**2 + float(model.gamma(rho**2))
        tau = 0.02
        out = grid.with_values(vals)
        for _ in range(50):
            out = sp2_step(out, np.zeros((32, 32)), model, tau)
        exact = np.exp(-1j * omega * 50 * tau) * vals
        err = np.abs(out.values - exact).max()
        assert err <= 1e-10  # far below the generic C*tau^2 bound

    def test_mass_conserved_to_rounding(self, rng):
        grid = build_grid(BOUNDS, 64)
        vals = rng.standard_normal((64, 64)) + 1j * rng.standard_normal((64, 64))
        grid = grid.with_values(vals)
        X, Y = grid_points(grid)
        V = X**2 + Y**2
        model = nl.saturated(10.0, 1.0)
        m0 = grid_mass(grid)
        out, records = evolve_sp2(grid, 1024, V, model, 0.01)
        drift = max(abs(r.mass - m0) for r in records) / m0
        assert drift <= 1e-11

    def test_second_order_in_tau(self):
        # smooth problem, Richardson-style reference at tau/16
        grid0 = build_grid(BOUNDS, 32)
        X, Y = grid_points(grid0)
        grid0 = grid0.with_values(np.exp(-0.5 * (X**2 + Y**2)).astype(complex))
        V = X**2 + Y**2
        model = nl.saturated(1.0, 1.0)
        T = 0.5
        errs = []
        taus = [T / 8, T / 16, T / 32]
        ref, _ = evolve_sp2(grid0, 8 * 16, V, model, T / (8 * 16))
        for tau in taus:
            out, _ = evolve_sp2(grid0, int(round(T / tau)), V, model, tau)
            errs.append(np.sqrt(np.sum(np.abs(out.values - ref.values) ** 2) * grid0.cell_area))
        r1 = errs[0] / errs[1]
        r2 = errs[1] / errs[2]
        assert 3.0 <= r1 <= 5.0
        assert 3.0 <= r2 <= 5.5

    def test_zero_steps_identity(self, rng):
        grid = build_grid(BOUNDS, 16)
        vals = rng.standard_normal((16, 16)) + 0j
        out, records = evolve_sp2(grid.with_values(vals), 0, np.zeros((16, 16)), nl.linear(), 0.1)
        np.testing.assert_array_equal(out.values, vals)
        assert len(records) == 1

    def test_energy_logged_not_conserved(self):
        # the splitting conserves mass exactly but not the energy functional
        grid = build_grid(BOUNDS, 32)
        X, Y = grid_points(grid)
        grid = grid.with_values(np.exp(-0.5 * (X**2 + Y**2)).astype(complex))
        V = X**2 + 9 * Y**2
        model = nl.saturated(10.0, 1.0)
        _, records = evolve_sp2(grid, 64, V, model, 2.0**-5)
        energies = [r.energy for r in records]
        assert np.std(energies) > 0  # logged and moving


class TestGridMeshBridge:
    def test_roundtrip(self, rng):
        mesh = build_mesh(BOUNDS, 16, 16, "periodic")
        U = rng.standard_normal(mesh.n_dof) + 1j * rng.standard_normal(mesh.n_dof)
        vals = grid_values_from_dofs(mesh, U)
        np.testing.assert_array_equal(dofs_from_grid_values(mesh, vals), U)

    def test_orientation_matches_coordinates(self):
        # dof vector of f(x, y) = x must reshape to values[i, j] = x_i
        mesh = build_mesh(BOUNDS, 8, 8, "periodic")
        xy = mesh.dof_coords
        U = xy[:, 0] + 0j
        vals = grid_values_from_dofs(mesh, U)
        grid = build_grid(BOUNDS, 8)
        X, _ = grid_points(grid)
        np.testing.assert_allclose(vals.real, X, atol=0)

    def test_requires_periodic(self):
        mesh = build_mesh(BOUNDS, 8, 8, "dirichlet")
        with pytest.raises(ConfigError):
            grid_values_from_dofs(mesh, np.zeros(mesh.n_dof))

    def test_grid_energy_matches_fem_energy_smooth(self):
        # same functional, two quadratures: agree to discretization accuracy
        from nlscn.assembly import AssemblyPlan, assemble_potential_mass, assemble_stiffness
        from nlscn.diagnostics import energy

        mesh = build_mesh(BOUNDS, 64, 64, "periodic")
        plan = AssemblyPlan(mesh)
        A = assemble_stiffness(mesh, plan=plan)
        Vfun = lambda x, y: x**2 + y**2
        MV = assemble_potential_mass(mesh, Vfun, plan=plan)
        model = nl.saturated(1.0, 1.0)
        xy = mesh.dof_coords
        U = np.exp(-0.5 * (xy[:, 0] ** 2 + xy[:, 1] ** 2)).astype(complex)
        e_fem = energy(A, MV, mesh, model, U, plan=plan)

        grid = build_grid(BOUNDS, 64, values=grid_values_from_dofs(mesh, U))
        X, Y = grid_points(grid)
        e_grid = grid_energy(grid, Vfun(X, Y), model)
        assert e_grid == pytest.approx(e_fem, rel=2e-2)
