import pytest
from numpy.testing import assert_allclose

from blowup.geometry import Geometry, ball, interval


def test_interval_basics():
    g = interval(2.0)
    assert g.curvature == 0.0
    assert g.laplacian_distance(0.3) == 0.0
    assert_allclose(g.distance(1.5), 0.5)


def test_ball_curvature_and_distance_laplacian():
    g = ball(2.0, 3)
    assert_allclose(g.curvature, 0.5)
    assert_allclose(g.laplacian_distance(0.5), 2.0 / 1.5)


def test_invalid_geometries_rejected():
    with pytest.raises(ValueError):
        Geometry(kind="annulus", extent=1.0)
    with pytest.raises(ValueError):
        Geometry(kind="ball", extent=1.0, dimension=1)
    with pytest.raises(ValueError):
        Geometry(kind="interval", extent=1.0, dimension=3)
    with pytest.raises(ValueError):
        interval(-1.0)
