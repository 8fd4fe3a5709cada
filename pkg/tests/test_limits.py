import numpy as np
import pytest
from numpy.testing import assert_allclose

from blowup.limits import (LimitReport, aitken_extrapolate, check_limit,
                           geometric_grid, richardson_pair)


def test_geometric_grid_directions():
    down = geometric_grid(1.0, 1e-3, ratio=10.0)
    assert_allclose(down, [1.0, 0.1, 0.01, 1e-3])
    up = geometric_grid(4.0, 64.0, ratio=2.0)
    assert_allclose(up, [4.0, 8.0, 16.0, 32.0, 64.0])


def test_geometric_grid_rejects_bad_input():
    with pytest.raises(ValueError):
        geometric_grid(-1.0, 1.0)
    with pytest.raises(ValueError):
        geometric_grid(1.0, 2.0, ratio=1.0)


def test_aitken_accelerates_geometric_error():
    t = 0.5 ** np.arange(8)
    values = 3.0 + 2.0 * t          # limit 3, error halving
    assert_allclose(aitken_extrapolate(values), 3.0, atol=1e-12)


def test_aitken_falls_back_on_flat_tail():
    assert aitken_extrapolate(np.array([1.0, 1.0, 1.0])) == 1.0
    assert aitken_extrapolate(np.array([2.5])) == 2.5
    assert np.isnan(aitken_extrapolate(np.array([np.nan])))


def test_limit_report_passes_converging_sequence():
    grid = geometric_grid(1e-1, 1e-4, ratio=2.0)
    rep = check_limit("demo", grid, 7.0 + grid, 7.0)
    assert rep.passed
    assert rep.error < 1e-6 * 8.0
    assert rep.tail_monotone


def test_limit_report_rejects_wrong_claim():
    grid = geometric_grid(1e-1, 1e-4, ratio=2.0)
    rep = check_limit("demo", grid, 7.0 + grid, 6.5)
    assert not rep.passed


def test_limit_report_rejects_growing_residual_tail():
    grid = np.array([1e-1, 1e-2, 1e-3, 1e-4])
    values = np.array([1.001, 1.0005, 1.002, 1.01])
    rep = LimitReport(name="demo", grid=grid, values=values, claimed=1.0)
    assert not rep.tail_monotone


def test_limit_report_tolerates_noise_below_floor():
    grid = np.array([1e-1, 1e-2, 1e-3, 1e-4])
    noise = np.array([3e-9, -2e-9, 4e-9, -1e-9])
    rep = check_limit("demo", grid, noise, 0.0)
    assert rep.passed


def test_richardson_pair_removes_first_order_error():
    values = np.array([5.0 + 0.4, 5.0 + 0.2, 5.0 + 0.1])
    assert_allclose(richardson_pair(values, order=1), 5.0, atol=1e-13)
