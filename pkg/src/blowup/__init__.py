"""Boundary asymptotics of blow-up solutions for the weighted p-Laplacian.

The library computes the two-term boundary expansion

    u(x) = xi0 * h(K(d(x))) * (1 + C1 d(x) + C2 H d(x) + o(d(x)))

for large solutions of div(|grad u|**(p-2) grad u) = a(x) f(u), where f is
normalized regularly varying, a has kernel-weighted boundary behavior, and h
inverts a scaled Keller-Osserman tail integral.  An independent radial
finite-difference solver provides numerical validation of the expansion.
"""

from .expansion import (BoundaryExpansion, ExpansionConstants,
                        expansion_constants, functional_limit_suite,
                        proof_functionals, residual_z)
from .geometry import Geometry, ball, interval
from .karamata import (Nonlinearity, PotentialModel, SlowPerturbation,
                       WeightKernel, check_f2, check_rv_index,
                       constant_kernel, exponential_kernel, kernel_limits,
                       perturbed_power, power_kernel, pure_power)
from .limits import LimitReport, check_limit, geometric_grid
from .solver import (MeshParams, ProblemSpec, RadialSolution,
                     comparison_check, default_window, fit_boundary_slope,
                     graded_mesh, solve_large, solve_truncated)
from .transform import (HTransform, Primitive, ScaledTail, keller_osserman,
                        verify_lemma2, verify_lemma3)
from .config import ExperimentConfig, InadmissibleConfig, load_config

__version__ = "0.1.0"

__all__ = [
    "BoundaryExpansion", "ExpansionConstants", "expansion_constants",
    "functional_limit_suite", "proof_functionals", "residual_z",
    "Geometry", "ball", "interval",
    "Nonlinearity", "PotentialModel", "SlowPerturbation", "WeightKernel",
    "check_f2", "check_rv_index", "constant_kernel", "exponential_kernel",
    "kernel_limits", "perturbed_power", "power_kernel", "pure_power",
    "LimitReport", "check_limit", "geometric_grid",
    "MeshParams", "ProblemSpec", "RadialSolution", "comparison_check",
    "default_window", "fit_boundary_slope", "graded_mesh", "solve_large",
    "solve_truncated",
    "HTransform", "Primitive", "ScaledTail", "keller_osserman",
    "verify_lemma2", "verify_lemma3",
    "ExperimentConfig", "InadmissibleConfig", "load_config",
    "__version__",
]
