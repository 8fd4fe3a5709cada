import numpy as np
import pytest
from numpy.testing import assert_allclose

from blowup.expansion import (BoundaryExpansion, combined_limit_prediction,
                              default_eta, expansion_constants,
                              proof_functionals, residual_z)
from blowup.geometry import ball, interval


class TestConstants:
    def test_canonical_ball_values(self):
        c = expansion_constants(p=2.0, sigma=2.0, ell1=1.0, L1=0.0,
                                A=0.0, N=3)
        assert c.xi0 == 1.0
        assert c.C1 == 0.0
        assert_allclose(c.C2, 1.0 / 3.0)

    def test_gradient_case(self):
        c = expansion_constants(p=2.0, sigma=2.0, ell1=1.0, L1=0.0,
                                A=1.0, N=2)
        assert_allclose(c.C1, -0.5)
        # the alternative normalization produced by the order-matching
        # derivation, kept as a diagnostic
        assert_allclose(c.C1_alt, -1.0 / 3.0)

    def test_p3_amplitude(self):
        c = expansion_constants(p=3.0, sigma=3.0, ell1=0.5, L1=0.0,
                                A=0.0, N=3)
        assert_allclose(c.xi0, np.sqrt(8.0 / 5.0), rtol=1e-14)

    def test_degenerate_denominator_rejected(self):
        with pytest.raises(ValueError, match="sigma"):
            expansion_constants(p=1.5, sigma=0.0, ell1=1.0, L1=0.0,
                                A=0.0, N=2)

    def test_domain_validation(self):
        with pytest.raises(ValueError):
            expansion_constants(p=2.0, sigma=2.0, ell1=1.5, L1=0.0,
                                A=0.0, N=3)
        with pytest.raises(ValueError):
            expansion_constants(p=2.0, sigma=-0.5, ell1=1.0, L1=0.0,
                                A=0.0, N=3)


class TestProfile:
    def test_two_term_values_cubic(self, ht_cubic, kernel_const):
        c3 = expansion_constants(p=2.0, sigma=2.0, ell1=1.0, L1=0.0,
                                 A=0.0, N=3)
        be = BoundaryExpansion(c3, ht_cubic, kernel_const)
        assert_allclose(be.value(0.01, 1.0),
                        (np.sqrt(2.0) / 0.01) * (1.0 + 0.01 / 3.0),
                        rtol=1e-9)
        c2 = expansion_constants(p=2.0, sigma=2.0, ell1=1.0, L1=0.0,
                                 A=1.0, N=2)
        be2 = BoundaryExpansion(c2, ht_cubic, kernel_const)
        assert_allclose(be2.value(0.1, 0.0),
                        (np.sqrt(2.0) / 0.1) * 0.95, rtol=1e-9)

    def test_vanishing_correction_reduces_to_leading(self, ht_cubic,
                                                     kernel_const):
        c = expansion_constants(p=2.0, sigma=2.0, ell1=1.0, L1=0.0,
                                A=0.0, N=3)
        be = BoundaryExpansion(c, ht_cubic, kernel_const)
        assert be.value(0.02, 0.0) == be.leading(0.02)

    def test_positive_distance_required(self, ht_cubic, kernel_const):
        c = expansion_constants(p=2.0, sigma=2.0, ell1=1.0, L1=0.0,
                                A=0.0, N=3)
        be = BoundaryExpansion(c, ht_cubic, kernel_const)
        with pytest.raises(ValueError):
            be.value(0.0, 1.0)


class TestFunctionals:
    def test_default_proof_parameter(self):
        assert default_eta(2.0) == 0.25
        assert default_eta(3.0) == 0.5
        assert default_eta(1.5) == 0.25

    def test_combined_prediction_closed_form(self):
        c = expansion_constants(p=2.0, sigma=2.0, ell1=1.0, L1=0.0,
                                A=0.0, N=1)
        assert_allclose(combined_limit_prediction(c, 0.05, 0.25, 1), -0.1375)
        assert_allclose(combined_limit_prediction(c, 0.05, 0.25, -1), 0.1375)

    def test_mean_value_parameter_moves_terms_not_limit(self, ht_cubic,
                                                        kernel_const):
        c = expansion_constants(p=2.0, sigma=2.0, ell1=1.0, L1=0.0,
                                A=0.0, N=1)
        be = BoundaryExpansion(c, ht_cubic, kernel_const)
        a = proof_functionals(be, 1e-3, 0.0, 0.05, lam=0.0, sign=1)
        b = proof_functionals(be, 1e-3, 0.0, 0.05, lam=1.0, sign=1)
        assert a.s2 != b.s2
        assert_allclose(a.combined, b.combined, atol=5e-4)


class TestResidual:
    @pytest.mark.parametrize("sign", [1, -1])
    def test_interval_defect_sign(self, ht_cubic, kernel_const, sign):
        c = expansion_constants(p=2.0, sigma=2.0, ell1=1.0, L1=0.0,
                                A=0.0, N=1)
        be = BoundaryExpansion(c, ht_cubic, kernel_const)
        table = residual_z(be, interval(1.0), lambda d: 1.0, eps=0.05,
                           rho=1e-4, d_grid=np.geomspace(2e-4, 5e-2, 25),
                           sign=sign)
        assert table.predicted_sign == -sign
        assert table.sign_fraction == 1.0

    def test_ball_defect_sign_near_boundary(self, ht_cubic, kernel_const):
        c = expansion_constants(p=2.0, sigma=2.0, ell1=1.0, L1=0.0,
                                A=0.0, N=3)
        be = BoundaryExpansion(c, ht_cubic, kernel_const)
        table = residual_z(be, ball(1.0, 3), lambda d: 1.0, eps=0.05,
                           rho=1e-4, d_grid=np.geomspace(2e-4, 5e-2, 25),
                           sign=1)
        # the sign is only claimed sufficiently close to the boundary
        agree = np.sign(table.residual) == table.predicted_sign
        assert np.all(agree[table.d < 1e-2])
        assert table.sign_fraction > 0.9

    def test_degenerate_epsilon_runs_on_ball(self, ht_cubic, kernel_const):
        c = expansion_constants(p=2.0, sigma=2.0, ell1=1.0, L1=0.0,
                                A=0.0, N=3)
        be = BoundaryExpansion(c, ht_cubic, kernel_const)
        table = residual_z(be, ball(1.0, 3), lambda d: 1.0, eps=0.0,
                           rho=0.0, d_grid=np.geomspace(1e-3, 1e-2, 8),
                           sign=1)
        assert np.all(np.isfinite(table.residual))

    def test_exact_solution_trips_stencil_guard(self, ht_cubic, kernel_const):
        # on the interval with eps = rho = 0 the perturbed profile solves the
        # equation exactly, so the defect is round-off and the Richardson
        # consistency check must refuse to report signs for it
        c = expansion_constants(p=2.0, sigma=2.0, ell1=1.0, L1=0.0,
                                A=0.0, N=1)
        be = BoundaryExpansion(c, ht_cubic, kernel_const)
        with pytest.raises(RuntimeError, match="stencil"):
            residual_z(be, interval(1.0), lambda d: 1.0, eps=0.0,
                       rho=0.0, d_grid=np.geomspace(1e-3, 1e-2, 8), sign=1)
