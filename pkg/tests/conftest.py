import numpy as np
import pytest

from blowup.geometry import ball, interval
from blowup.karamata import constant_kernel, pure_power
from blowup.solver import MeshParams, ProblemSpec, default_window, solve_large
from blowup.transform import HTransform, Primitive, ScaledTail


@pytest.fixture(scope="session")
def cubic():
    """f(u) = u**3 with the power extension anchored low enough that the
    solver only ever sees the exact cubic."""
    return pure_power(sigma=2.0, B=1e-6)


@pytest.fixture(scope="session")
def ht_cubic(cubic):
    return HTransform(ScaledTail(Primitive(cubic, 2.0)))


@pytest.fixture(scope="session")
def mesh_params():
    return MeshParams()


def _solve(spec, mesh_params):
    window = default_window(mesh_params, spec.geometry)
    sol, info = solve_large(spec, window, tol=1e-5, mesh_params=mesh_params)
    return {"sol": sol, "info": info, "window": window}


@pytest.fixture(scope="session")
def interval_const_solve(cubic, mesh_params):
    """Large solution of u'' = u**3 on the symmetric interval."""
    spec = ProblemSpec(p=2.0, geometry=interval(1.0),
                       potential=lambda d: 1.0, nonlinearity=cubic)
    return _solve(spec, mesh_params)


@pytest.fixture(scope="session")
def interval_gradient_solve(cubic, mesh_params):
    """Same problem with the linearly growing potential a = 1 + d."""
    spec = ProblemSpec(p=2.0, geometry=interval(1.0),
                       potential=lambda d: 1.0 + d, nonlinearity=cubic)
    return _solve(spec, mesh_params)


@pytest.fixture(scope="session")
def ball_solve(cubic, mesh_params):
    """Large solution on the unit ball in three dimensions."""
    spec = ProblemSpec(p=2.0, geometry=ball(1.0, 3),
                       potential=lambda d: 1.0, nonlinearity=cubic)
    return _solve(spec, mesh_params)


@pytest.fixture(scope="session")
def kernel_const():
    return constant_kernel()
