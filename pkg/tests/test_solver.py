import numpy as np
import pytest
from numpy.testing import assert_allclose

from blowup.geometry import ball, interval
from blowup.solver import (MeshParams, ProblemSpec, comparison_check,
                           default_window, first_integral_deviation,
                           graded_mesh, solve_large, solve_truncated)


class TestMesh:
    def test_graded_mesh_properties(self, mesh_params):
        g = interval(1.0)
        r = graded_mesh(g, mesh_params)
        assert r[0] == 0.0
        assert r[-1] == g.extent
        assert np.all(np.diff(r) > 0)
        widths = np.diff(r)
        # finest cell sits at the boundary and matches the requested size
        assert_allclose(widths[-1], mesh_params.finest_rel * g.extent,
                        rtol=0.01)
        assert widths[-1] == widths.min()

    def test_invalid_params_rejected(self):
        with pytest.raises(ValueError):
            MeshParams(finest_rel=0.0).validate()
        with pytest.raises(ValueError):
            MeshParams(grading=1.0).validate()


class TestTruncated:
    def test_small_boundary_value_stays_below_it(self, cubic, mesh_params):
        spec = ProblemSpec(p=2.0, nonlinearity=cubic,
                           potential=lambda d: 1.0, geometry=interval(1.0))
        sol = solve_truncated(spec, 1.0, mesh_params=mesh_params)
        assert sol.u[-1] == 1.0
        assert np.all(sol.u <= 1.0 + 1e-12)
        assert np.all(sol.u > 0.0)
        assert sol.residual_norm < 1e-9

    def test_p3_ball_radially_increasing(self, cubic, mesh_params):
        spec = ProblemSpec(p=3.0, nonlinearity=cubic,
                           potential=lambda d: 1.0, geometry=ball(1.0, 3))
        sol = solve_truncated(spec, 1e3, mesh_params=mesh_params)
        assert np.all(np.diff(sol.u) >= -1e-9 * 1e3)
        assert sol.residual_norm < 1e-9

    def test_rejects_nonpositive_boundary_value(self, cubic, mesh_params):
        spec = ProblemSpec(p=2.0, nonlinearity=cubic,
                           potential=lambda d: 1.0, geometry=interval(1.0))
        with pytest.raises(ValueError):
            solve_truncated(spec, 0.0, mesh_params=mesh_params)


class TestContinuation:
    def test_interval_matches_closed_form(self, interval_const_solve):
        sol = interval_const_solve["sol"]
        window = interval_const_solve["window"]
        d, u = sol.window_values(window)
        rel = np.abs(u * d / np.sqrt(2.0) - 1.0)
        assert np.max(rel) < 5e-4

    def test_window_values_stable_under_tighter_tol(self, cubic,
                                                    mesh_params):
        spec = ProblemSpec(p=2.0, nonlinearity=cubic,
                           potential=lambda d: 1.0, geometry=interval(1.0))
        window = default_window(mesh_params, spec.geometry)
        probes = np.geomspace(window[0] * 2, window[1] / 2, 12)
        out = {}
        for tol in (1e-5, 5e-6):
            sol, info = solve_large(spec, window, tol=tol,
                                    mesh_params=mesh_params)
            d, u = sol.window_values(window)
            out[tol] = np.exp(np.interp(np.log(probes), np.log(d[::-1]),
                                        np.log(u[::-1])))
        drift = np.max(np.abs(out[5e-6] / out[1e-5] - 1.0))
        assert drift < 1e-5

    def test_window_below_mesh_resolution_rejected(self, cubic, mesh_params):
        spec = ProblemSpec(p=2.0, nonlinearity=cubic,
                           potential=lambda d: 1.0, geometry=interval(1.0))
        with pytest.raises(ValueError):
            solve_large(spec, (1e-9, 1e-8), mesh_params=mesh_params)

    def test_budget_exhaustion_raises(self, cubic, mesh_params):
        spec = ProblemSpec(p=2.0, nonlinearity=cubic,
                           potential=lambda d: 1.0, geometry=interval(1.0))
        window = default_window(mesh_params, spec.geometry)
        with pytest.raises(RuntimeError):
            solve_large(spec, window, tol=1e-5, mesh_params=mesh_params,
                        max_levels=2)


class TestDiagnostics:
    def test_comparison_orders_boundary_values(self, cubic, mesh_params):
        spec = ProblemSpec(p=2.0, nonlinearity=cubic,
                           potential=lambda d: 1.0, geometry=interval(1.0))
        lo = solve_truncated(spec, 10.0, mesh_params=mesh_params)
        hi = solve_truncated(spec, 100.0, mesh_params=mesh_params)
        rep = comparison_check(hi, lo)
        assert rep["verdict"] == "PASS"
        same = comparison_check(lo, lo)
        assert same["verdict"] == "PASS"

    def test_comparison_flags_violation_node(self, cubic, mesh_params):
        spec = ProblemSpec(p=2.0, nonlinearity=cubic,
                           potential=lambda d: 1.0, geometry=interval(1.0))
        lo = solve_truncated(spec, 10.0, mesh_params=mesh_params)
        hi = solve_truncated(spec, 100.0, mesh_params=mesh_params)
        bumped = type(lo)(r=lo.r, u=lo.u.copy(), flux=lo.flux,
                          boundary_value=lo.boundary_value,
                          residual_norm=lo.residual_norm, spec=lo.spec)
        bumped.u[50] = hi.u[50] + 1.0
        rep = comparison_check(hi, bumped)
        assert rep["verdict"] == "FAIL"
        assert rep["worst_node"] == 50

    def test_energy_deviation_small_for_interval(self, interval_const_solve):
        dev = first_integral_deviation(interval_const_solve["sol"])
        assert dev < 0.01

    def test_mesh_convergence_order(self, cubic):
        # windowed profile converges in the grading parameter at second
        # order or better (offset ~ (grading - 1)^2)
        spec = ProblemSpec(p=2.0, nonlinearity=cubic,
                           potential=lambda d: 1.0, geometry=interval(1.0))
        vals = {}
        for g in (1.12, 1.06, 1.03):
            mp = MeshParams(finest_rel=1e-6, grading=g)
            window = default_window(mp, spec.geometry)
            sol, _ = solve_large(spec, window, tol=1e-5, mesh_params=mp)
            d, u = sol.window_values(window)
            probes = np.geomspace(2e-3, 5e-2, 10)
            vals[g] = np.exp(np.interp(np.log(probes), np.log(d[::-1]),
                                       np.log(u[::-1])))
        d12 = np.max(np.abs(vals[1.12] / vals[1.06] - 1.0))
        d23 = np.max(np.abs(vals[1.06] / vals[1.03] - 1.0))
        order = np.log2(d12 / d23)
        assert order > 1.8
