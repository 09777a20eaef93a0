"""Crank-Nicolson stepper: operators, fixed point, conservation, symmetry."""

import numpy as np
import pytest
import scipy.optimize

from nlscn import nonlinearity as nl
from nlscn.assembly import AssemblyPlan, assemble_nonlinear_mass
from nlscn.diagnostics import energy, mass, relative_drift
from nlscn.errors import ConfigError, FixedPointError
from nlscn.mesh import build_mesh
from nlscn.stepper import CNConfig, CNState, build_operators, evolve, fixed_point_step

from conftest import build_matrices


def harmonic_setup(nx=24, bounds=(-5, 5, -5, 5), bc="dirichlet", model=None):
    mesh = build_mesh(bounds, nx, nx, bc)
    plan, M, A, M_V = build_matrices(mesh, V=lambda x, y: x**2 + y**2)
    model = model if model is not None else nl.saturated(1.0, 1.0)
    xy = mesh.dof_coords
    U0 = np.exp(-0.5 * (xy[:, 0] ** 2 + xy[:, 1] ** 2)).astype(complex)
    U0 /= np.sqrt(np.vdot(U0, M @ U0).real)
    return mesh, plan, M, A, M_V, model, U0


class TestBuildOperators:
    def test_definitions(self, small_dirichlet):
        plan, M, A, M_V = build_matrices(small_dirichlet, V=lambda x, y: x**2 + y**2)
        tau = 0.0625
        ops = build_operators(M, A, M_V, tau)
        np.testing.assert_allclose(ops.L1.to_dense() + ops.L2.to_dense(), 2 * M.to_dense(), atol=1e-15)
        np.testing.assert_allclose(
            ops.L1.to_dense() - ops.L2.to_dense(),
            1j * tau * (A.to_dense() + M_V.to_dense()),
            atol=1e-15,
        )

    def test_small_tau_limit(self, small_dirichlet):
        plan, M, A, M_V = build_matrices(small_dirichlet)
        ops = build_operators(M, A, M_V, 1e-14)
        np.testing.assert_allclose(ops.L1.to_dense(), M.to_dense(), atol=1e-12)

    def test_tau_must_be_positive(self, small_dirichlet):
        plan, M, A, M_V = build_matrices(small_dirichlet)
        with pytest.raises(ConfigError):
            build_operators(M, A, M_V, 0.0)


class TestFixedPointStep:
    def test_linear_converges_in_one_iteration(self):
        mesh, plan, M, A, M_V, _, U0 = harmonic_setup(nx=12)
        model = nl.linear()
        ops = build_operators(M, A, M_V, 0.03125)
        cfg = CNConfig(tau=0.03125)
        state, iters, residual = fixed_point_step(CNState(U=U0), ops, mesh, model, cfg, plan=plan)
        assert iters == 1
        assert residual == 0.0
        want = ops.fact.solve(ops.L2 @ U0)
        np.testing.assert_allclose(state.U, want, atol=0)

    def test_one_dof_surrogate_matches_root_finder(self):
        # 2x2-cell Dirichlet mesh: exactly one interior dof, genuine 1x1 system
        mesh = build_mesh((-1, 1, -1, 1), 2, 2, "dirichlet")
        plan, M, A, M_V = build_matrices(mesh, V=lambda x, y: 1.0 + 0.0 * x)
        assert mesh.n_dof == 1
        model = nl.cubic(1.0)
        tau = 0.125
        ops = build_operators(M, A, M_V, tau)
        cfg = CNConfig(tau=tau, fp_tol=1e-15, max_iters=200)
        U0 = np.array([0.9 - 0.2j])
        state, iters, residual = fixed_point_step(CNState(U=U0), ops, mesh, model, cfg, plan=plan)

        # independent scalar oracle: solve L1 z = L2 u0 - i tau g(z, u0)(z+u0)/2
        # with g evaluated by the same quadrature layout but assembled densely
        m11 = complex(M.to_dense()[0, 0])
        l1 = complex(ops.L1.to_dense()[0, 0])
        l2 = complex(ops.L2.to_dense()[0, 0])
        phi = plan.values_at_quad(np.ones(1)).real  # basis value at each quad point

        def g(zc, u0c):
            a = np.abs(u0c * phi) ** 2
            b = np.abs(zc * phi) ** 2
            coeff = nl.gamma_quotient(a, b, model)
            return float(np.sum(plan.areas[:, None] * plan.rule.weights[None, :] * coeff * phi * phi))

        def residual_fn(v):
            z = v[0] + 1j * v[1]
            r = l1 * z - l2 * U0[0] + 1j * tau * g(z, U0[0]) * (z + U0[0]) / 2.0
            return [r.real, r.imag]

        sol = scipy.optimize.fsolve(residual_fn, [state.U[0].real, state.U[0].imag], xtol=1e-14)
        z_oracle = sol[0] + 1j * sol[1]
        assert abs(state.U[0] - z_oracle) <= 1e-12

    def test_nonconvergence_raises_with_residual(self):
        mesh, plan, M, A, M_V, model, U0 = harmonic_setup(nx=12, model=nl.cubic(50.0))
        ops = build_operators(M, A, M_V, 0.5)
        cfg = CNConfig(tau=0.5, fp_tol=1e-14, max_iters=3)
        with pytest.raises(FixedPointError) as err:
            fixed_point_step(CNState(U=20.0 * U0), ops, mesh, model, cfg, plan=plan)
        assert err.value.residual is not None and err.value.residual > 0

    def test_residuals_decrease_monotonically(self):
        mesh, plan, M, A, M_V, model, U0 = harmonic_setup(nx=16)
        tau = 2.0**-6
        ops = build_operators(M, A, M_V, tau)
        cfg = CNConfig(tau=tau, fp_tol=1e-13)
        seen = []
        fixed_point_step(
            CNState(U=U0), ops, mesh, model, cfg, plan=plan, on_iteration=lambda i, r: seen.append(r)
        )
        assert len(seen) >= 2
        assert all(b < a for a, b in zip(seen[1:-1], seen[2:]))  # after the first iteration

    def test_predictor_options_same_fixed_point(self):
        mesh, plan, M, A, M_V, model, U0 = harmonic_setup(nx=16)
        tau = 2.0**-6
        ops = build_operators(M, A, M_V, tau)
        prev = U0 * np.exp(-0.05j)
        s1, _, _ = fixed_point_step(
            CNState(U=U0), ops, mesh, model, CNConfig(tau=tau, fp_tol=1e-14), plan=plan, U_prev=prev
        )
        s2, _, _ = fixed_point_step(
            CNState(U=U0),
            ops,
            mesh,
            model,
            CNConfig(tau=tau, fp_tol=1e-14, predictor="linear-extrapolation"),
            plan=plan,
            U_prev=prev,
        )
        np.testing.assert_allclose(s1.U, s2.U, atol=1e-12)


class TestEvolve:
    def test_zero_steps_identity(self):
        mesh, plan, M, A, M_V, model, U0 = harmonic_setup(nx=12)
        ops = build_operators(M, A, M_V, 0.125)
        state, records = evolve(CNState(U=U0), 0, ops, mesh, model, CNConfig(tau=0.125), plan=plan)
        np.testing.assert_array_equal(state.U, U0)
        assert len(records) == 1 and records[0].step == 0

    def test_mass_and_energy_conserved(self):
        # evolve in a trap that does not match the initial state, so the
        # density actually moves (near-stationary states sit in the
        # difference quotient's cancellation band and stall before 1e-14)
        mesh = build_mesh((-5, 5, -5, 5), 20, 20, "dirichlet")
        plan, M, A, M_V = build_matrices(mesh, V=lambda x, y: (2 * x) ** 2 + (3 * y) ** 2)
        model = nl.saturated(1.0, 1.0)
        xy = mesh.dof_coords
        U0 = np.exp(-0.5 * (xy[:, 0] ** 2 + xy[:, 1] ** 2)).astype(complex)
        U0 /= np.sqrt(np.vdot(U0, M @ U0).real)
        tau = 2.0**-6
        ops = build_operators(M, A, M_V, tau)
        cfg = CNConfig(tau=tau, fp_tol=1e-14)
        _, records = evolve(CNState(U=U0), 32, ops, mesh, model, cfg, plan=plan)
        assert relative_drift([r.mass for r in records]) <= 1e-13
        assert relative_drift([r.energy for r in records]) <= 1e-12

    def test_linear_eigenmode_against_exact_solution(self):
        # V=0, gamma=0: interpolated sin-product mode evolves as exp(-i lambda t);
        # joint (tau, h) halving must show combined second order
        lam = 2.0 * (np.pi / 10.0) ** 2
        model = nl.linear()
        errs = []
        for n, tau in ((16, 0.125), (32, 0.0625), (64, 0.03125)):
            mesh = build_mesh((-5, 5, -5, 5), n, n, "dirichlet")
            plan, M, A, M_V = build_matrices(mesh)
            xy = mesh.dof_coords
            mode = np.sin(np.pi * (xy[:, 0] + 5) / 10) * np.sin(np.pi * (xy[:, 1] + 5) / 10)
            ops = build_operators(M, A, M_V, tau)
            cfg = CNConfig(tau=tau, fp_tol=1e-13)
            n_steps = int(round(1.0 / tau))
            state, _ = evolve(CNState(U=mode.astype(complex)), n_steps, ops, mesh, model, cfg, plan=plan)
            exact = np.exp(-1j * lam * 1.0) * mode
            err = np.sqrt(np.vdot(state.U - exact, M @ (state.U - exact)).real)
            errs.append(err)
        order = np.polyfit(np.log([0.125, 0.0625, 0.03125]), np.log(errs), 1)[0]
        assert order >= 1.7

    def test_time_reversal_roundtrip(self):
        # conjugation realizes the tau -> -tau step for real V and gamma:
        # forward, conjugate, forward, conjugate returns the start state
        mesh, plan, M, A, M_V, model, U0 = harmonic_setup(nx=16)
        tau = 2.0**-5
        ops = build_operators(M, A, M_V, tau)
        cfg = CNConfig(tau=tau, fp_tol=1e-14)
        s1, _, _ = fixed_point_step(CNState(U=U0), ops, mesh, model, cfg, plan=plan)
        s2, _, _ = fixed_point_step(CNState(U=np.conj(s1.U)), ops, mesh, model, cfg, plan=plan)
        back = np.conj(s2.U)
        err = np.sqrt(np.vdot(back - U0, M @ (back - U0)).real)
        assert err <= 10 * cfg.fp_tol * np.sqrt(np.vdot(U0, M @ U0).real)

    def test_global_phase_covariance(self):
        mesh, plan, M, A, M_V, model, U0 = harmonic_setup(nx=16)
        tau = 2.0**-5
        ops = build_operators(M, A, M_V, tau)
        cfg = CNConfig(tau=tau, fp_tol=1e-14)
        theta = 0.7368
        sa, _ = evolve(CNState(U=U0), 4, ops, mesh, model, cfg, plan=plan)
        sb, _ = evolve(CNState(U=np.exp(1j * theta) * U0), 4, ops, mesh, model, cfg, plan=plan)
        np.testing.assert_allclose(sb.U, np.exp(1j * theta) * sa.U, atol=1e-12)

    def test_partial_log_on_failure(self):
        mesh, plan, M, A, M_V, model, U0 = harmonic_setup(nx=12, model=nl.cubic(50.0))
        ops = build_operators(M, A, M_V, 0.5)
        cfg = CNConfig(tau=0.5, fp_tol=1e-14, max_iters=2)
        with pytest.raises(FixedPointError) as err:
            evolve(CNState(U=20.0 * U0), 5, ops, mesh, model, cfg, plan=plan)
        assert hasattr(err.value, "records") and len(err.value.records) >= 1


class TestCNConfig:
    def test_validation(self):
        with pytest.raises(ConfigError):
            CNConfig(tau=-1.0)
        with pytest.raises(ConfigError):
            CNConfig(tau=0.1, fp_tol=1e-16)
        with pytest.raises(ConfigError):
            CNConfig(tau=0.1, max_iters=0)
        with pytest.raises(ConfigError):
            CNConfig(tau=0.1, predictor="secant")
