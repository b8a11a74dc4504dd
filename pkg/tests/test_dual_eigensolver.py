import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import COS_E0_ORACLE, TRIG_REFERENCE
from gm_torus import (
    BudgetError,
    DimError,
    GridSpec,
    PositivityError,
    PotentialSpec,
    ScalarField,
    SchrodingerParams,
    principal_eigenpair,
    realize,
)
from gm_torus.dual_eigensolver import apply_operator, assemble_operator, verify_1d_ode
from gm_torus.spectral_field import inner, laplacian_matrix, sup_norm


def params_for(W, hbar=1.0, P=(0.0,)):
    return SchrodingerParams(hbar, P, W)


class TestAssembly:
    def test_free_operator_is_scaled_laplacian(self, grid128):
        p = params_for(realize(PotentialSpec.zero(), grid128), hbar=0.7)
        A = assemble_operator(p)
        assert np.allclose(A, -(0.49 / 2) * laplacian_matrix(grid128), rtol=1e-15, atol=0)
        assert np.max(np.abs(A.sum(axis=1))) < 1e-9

    def test_constant_shifts_identity(self, grid128):
        A0 = assemble_operator(params_for(realize(PotentialSpec.zero(), grid128), P=(0.3,)))
        Ac = assemble_operator(params_for(realize(PotentialSpec.constant(2.5), grid128), P=(0.3,)))
        assert np.allclose(Ac - A0, 2.5 * np.eye(128), atol=1e-14, rtol=0)

    @settings(max_examples=10, deadline=None)
    @given(st.floats(-2, 2), st.floats(-2, 2), st.floats(0.2, 2))
    def test_transpose_is_reflected_drift(self, p0, p1, hbar):
        g = GridSpec(2, 8)
        W = realize(PotentialSpec.trig([((1, 0), 1.0, 0.0), ((1, 1), 0.0, 0.4)]), g)
        A = assemble_operator(SchrodingerParams(hbar, (p0, p1), W))
        B = assemble_operator(SchrodingerParams(hbar, (-p0, -p1), W))
        assert np.array_equal(A.T, B)

    def test_matrix_free_matches_dense(self, trig_params, trig_W):
        f = ScalarField(trig_W.grid, np.exp(np.sin(2 * np.pi * trig_W.grid.coordinates()[0])))
        A = assemble_operator(trig_params)
        assert np.allclose(A @ f.ravel(), apply_operator(trig_params, f).ravel(), atol=1e-9)
        assert np.allclose(A.T @ f.ravel(), apply_operator(trig_params, f, adjoint=True).ravel(), atol=1e-9)


class TestTrivialSolutions:
    @pytest.mark.parametrize("P", [0.0, 0.4, -1.3])
    @pytest.mark.parametrize("method", ["dense", "inverse_power"])
    def test_free(self, grid128, P, method):
        sol = principal_eigenpair(params_for(realize(PotentialSpec.zero(), grid128), P=(P,)), method)
        assert abs(sol.E0) < 1e-12
        assert np.max(np.abs(sol.w.values - 1.0)) < 1e-12
        assert np.max(np.abs(sol.w_star.values - 1.0)) < 1e-12

    def test_constant(self, grid128):
        sol = principal_eigenpair(params_for(realize(PotentialSpec.constant(-1.25), grid128), P=(0.2,)))
        assert abs(sol.E0 + 1.25) < 1e-12
        assert np.max(np.abs(sol.sigma.values - 1.0)) < 1e-12


class TestReferenceValues:
    def test_frozen_high_resolution_oracle(self, cos_W):
        sol = principal_eigenpair(params_for(cos_W))
        assert abs(sol.E0 - COS_E0_ORACLE) < 1e-10

    def test_independent_finite_difference_solve(self):
        # 2nd-order FD on a fine grid plus one Richardson step
        def fd_E0(n):
            h = 1.0 / n
            x = np.arange(n) * h
            main = 1.0 / h ** 2 + np.cos(2 * np.pi * x)
            off = -0.5 / h ** 2
            A = np.diag(main) + off * (np.eye(n, k=1) + np.eye(n, k=-1))
            A[0, -1] = A[-1, 0] = off
            return scipy.linalg.eigh(A, eigvals_only=True, subset_by_index=[0, 0])[0]

        e1, e2 = fd_E0(400), fd_E0(800)
        assert abs((4 * e2 - e1) / 3 - COS_E0_ORACLE) < 1e-9

    def test_invariants_on_reference_fixture(self, trig_solution):
        s = trig_solution
        assert s.w.values.min() > 0 and s.w_star.values.min() > 0
        assert abs(inner(s.w, s.w_star) - 1.0) < 1e-12
        assert abs(inner(s.w, s.w) - 1.0) < 1e-12
        assert abs(s.E0_imag) < 1e-10
        assert s.residual_w < 1e-8 and s.residual_w_star < 1e-8
        assert s.gap > 0

    def test_transpose_shares_eigenvalue(self, trig_params, trig_solution):
        ev = scipy.linalg.eigvals(assemble_operator(trig_params).T)
        assert abs(ev.real.min() - trig_solution.E0) < 1e-10


class TestCrossValidation:
    def test_dense_vs_inverse_power(self, trig_params):
        d = principal_eigenpair(trig_params, "dense")
        i = principal_eigenpair(trig_params, "inverse_power")
        assert abs(d.E0 - i.E0) < 1e-10
        assert sup_norm(d.sigma - i.sigma) < 1e-9
        assert abs(d.gap - i.gap) < 1e-6 * d.gap

    def test_dense_vs_inverse_power_2d(self):
        g = GridSpec(2, 16)
        W = realize(PotentialSpec.trig([((1, 0), 1.0, 0.0), ((0, 1), 0.5, 0.0), ((1, 1), 0.0, 0.2)]), g)
        p = SchrodingerParams(1.0, (0.3, -0.1), W)
        assert abs(principal_eigenpair(p, "dense").E0 - principal_eigenpair(p, "inverse_power").E0) < 1e-10

    def test_spectral_convergence(self):
        spec = PotentialSpec.trig(TRIG_REFERENCE)
        E = [principal_eigenpair(params_for(realize(spec, GridSpec(1, N)), P=(0.4,))).E0 for N in (64, 128)]
        assert abs(E[0] - E[1]) < 1e-9
        spec2 = PotentialSpec.trig([((1, 0), 1.0, 0.0), ((0, 1), 0.5, 0.0)])
        E2 = [principal_eigenpair(SchrodingerParams(1.0, (0.2, 0.1), realize(spec2, GridSpec(2, N)))).E0
              for N in (16, 32)]
        assert abs(E2[0] - E2[1]) < 1e-9

    def test_P_reflection_swaps_eigenvectors(self, trig_params, trig_solution):
        r = principal_eigenpair(trig_params.with_P(-trig_params.P_vec))
        assert abs(r.E0 - trig_solution.E0) < 1e-10

        def unit(f):
            return f * (1.0 / np.sqrt(inner(f, f)))

        assert sup_norm(unit(r.w) - unit(trig_solution.w_star)) < 1e-10
        assert sup_norm(unit(r.w_star) - unit(trig_solution.w)) < 1e-10

    def test_P_zero_is_self_adjoint(self, cos_W):
        s = principal_eigenpair(params_for(cos_W))
        assert sup_norm(s.w - s.w_star) < 1e-12


class TestGauge:
    def test_rescale_keeps_sigma(self, trig_solution):
        for c in (1.7, 0.3, 1e3):
            g = trig_solution.rescale(c)
            assert sup_norm(g.sigma - trig_solution.sigma) < 1e-12
            assert g.E0 == trig_solution.E0

    def test_record_fields(self, trig_solution):
        rec = trig_solution.to_record()
        assert set(rec) >= {"hbar", "P", "E0", "gap", "residual_w", "residual_w_star", "grid", "normalization_gauge"}


class TestOneDimensionalODE:
    def test_free(self, grid128):
        for P in (0.0, 0.7):
            sol = principal_eigenpair(params_for(realize(PotentialSpec.zero(), grid128), P=(P,)))
            assert verify_1d_ode(sol, 0.0) < 1e-12

    @pytest.mark.parametrize("P,C", [(0.3, 0.0), (0.1, 0.2)])
    def test_cosine(self, cos_W, P, C):
        sol = principal_eigenpair(params_for(cos_W, P=(P + C,)))
        assert verify_1d_ode(sol, C) < 1e-8

    def test_rejects_2d(self):
        g = GridSpec(2, 8)
        sol = principal_eigenpair(SchrodingerParams(1.0, (0.0, 0.0), realize(PotentialSpec.zero(), g)))
        with pytest.raises(DimError):
            verify_1d_ode(sol, 0.0)


class TestErrors:
    def test_budget(self):
        g = GridSpec(2, 66)
        with pytest.raises(BudgetError):
            principal_eigenpair(SchrodingerParams(1.0, (0.0, 0.0), realize(PotentialSpec.zero(), g)))
        with pytest.raises(BudgetError):
            principal_eigenpair(params_for(realize(PotentialSpec.zero(), GridSpec(1, 512))), "dense")

    def test_positivity_error_on_underflowing_tail(self):
        g = GridSpec(1, 256, 20.0)
        W = realize(PotentialSpec.wrapped_quadratic(1.0), g)
        with pytest.raises(PositivityError):
            principal_eigenpair(params_for(W))
        sol = principal_eigenpair(params_for(W), check_positivity=False)
        assert abs(sol.E0 - 0.5) < 1e-6

    def test_unknown_method(self, grid128):
        with pytest.raises(ValueError):
            principal_eigenpair(params_for(realize(PotentialSpec.zero(), grid128)), "lanczos")

    def test_params_validation(self, grid128):
        W = realize(PotentialSpec.zero(), grid128)
        for bad in [dict(hbar=0.0), dict(P=(0.1, 0.2))]:
            with pytest.raises(ValueError):
                SchrodingerParams(bad.get("hbar", 1.0), bad.get("P", (0.0,)), W)
