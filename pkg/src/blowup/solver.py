"""Radial boundary-value solver used as an independent oracle.

Solves the flux-conservative discretization of

    r**(1-N) (r**(N-1) |u'|**(p-2) u')' = a(d) f(u)

on the interval or ball with zero flux at the center and a finite Dirichlet
value M at the boundary; the large (blow-up) solution is reached by
monotone continuation M -> infinity with warm starts.  The mesh is graded
geometrically toward the boundary since the solution gradient blows up
there.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.linalg import solve_banded

from .geometry import Geometry
from .karamata import Nonlinearity

__all__ = [
    "ProblemSpec",
    "MeshParams",
    "RadialSolution",
    "graded_mesh",
    "solve_truncated",
    "solve_large",
    "comparison_check",
    "SlopeFit",
    "fit_boundary_slope",
    "first_integral_deviation",
    "default_window",
]


@dataclass(frozen=True)
class ProblemSpec:
    """Problem data: exponent, geometry, potential a(d) > 0, nonlinearity."""

    p: float
    geometry: Geometry
    potential: Callable[[float], float]
    nonlinearity: Nonlinearity

    def __post_init__(self):
        if not self.p > 1:
            raise ValueError(f"need p > 1, got {self.p}")
        if not self.nonlinearity.sigma > self.p - 2.0:
            raise ValueError(
                f"need sigma > p - 2 for a finite blow-up profile "
                f"(sigma={self.nonlinearity.sigma}, p={self.p})")
        # sample strictly inside the domain: kernels with k(0) = 0 make the
        # potential vanish at the boundary itself, which is fine since the
        # discretization only ever evaluates it at interior nodes
        for d in np.linspace(0.0, self.geometry.extent, 18)[1:]:
            if not self.potential(d) > 0:
                raise ValueError(f"potential must be positive, a({d}) <= 0")


@dataclass(frozen=True)
class MeshParams:
    """Geometric boundary grading: the finest cell is ``finest_rel`` times
    the extent and cell widths grow by ``grading`` toward the center."""

    finest_rel: float = 1e-6
    grading: float = 1.06

    def validate(self):
        if not (0 < self.finest_rel < 1e-2):
            raise ValueError("finest_rel must be a small positive fraction")
        if not (1.0 < self.grading < 2.0):
            raise ValueError("grading ratio must lie in (1, 2)")


def graded_mesh(geometry: Geometry, params: MeshParams = MeshParams()) -> np.ndarray:
    """Nodes from the center r=0 to the boundary r=extent with cell widths
    growing geometrically away from the boundary."""
    params.validate()
    extent = geometry.extent
    h = params.finest_rel * extent
    widths = [h]
    total = h
    while total < extent:
        h *= params.grading
        widths.append(min(h, extent - total))
        total += widths[-1]
    r = extent - np.concatenate(([0.0], np.cumsum(widths)))
    r = np.maximum(r[::-1], 0.0)
    r[0] = 0.0
    return np.unique(r)


@dataclass
class RadialSolution:
    """Mesh, nodal values, and nodal fluxes |u'|**(p-2) u' (at faces,
    associated with the left face of each interior node)."""

    r: np.ndarray
    u: np.ndarray
    flux: np.ndarray
    boundary_value: float
    residual_norm: float
    spec: ProblemSpec = field(repr=False)

    @property
    def d(self) -> np.ndarray:
        return self.spec.geometry.extent - self.r

    def window_values(self, window) -> tuple:
        d = self.d
        mask = (d >= window[0]) & (d <= window[1])
        return d[mask], self.u[mask]


def _phi(s, p, eps2):
    if p == 2.0:
        return s
    return (s * s + eps2) ** ((p - 2.0) / 2.0) * s


def _phi_deriv(s, p, eps2):
    if p == 2.0:
        return np.ones_like(s)
    return (s * s + eps2) ** ((p - 4.0) / 2.0) * ((p - 1.0) * s * s + eps2)


def solve_truncated(spec: ProblemSpec, M: float,
                    mesh: Optional[np.ndarray] = None,
                    mesh_params: MeshParams = MeshParams(),
                    u0: Optional[np.ndarray] = None,
                    eps_reg: Optional[float] = None,
                    newton_tol: float = 1e-10,
                    max_newton: int = 200) -> RadialSolution:
    """Damped Newton solve of the truncated problem with Dirichlet value M
    at the boundary and zero flux at the center.

    The flux |u'|**(p-2) u' is regularized as (u'**2 + eps_reg**2)**((p-2)/2) u'
    to keep the Jacobian finite at the symmetric center for p != 2.
    """
    if M <= 0:
        raise ValueError("truncation level M must be positive")
    geom = spec.geometry
    p, N = spec.p, geom.dimension
    r = graded_mesh(geom, mesh_params) if mesh is None else np.asarray(mesh)
    n = len(r) - 1
    if eps_reg is None:
        # only guards the degenerate/singular flux derivative at exactly
        # zero gradient; must stay far below every physical gradient, which
        # is O(u/extent) or larger everywhere
        eps_reg = 0.0 if p == 2.0 else 1e-10
    if eps_reg < 0:
        raise ValueError("eps_reg must be nonnegative")
    eps2 = eps_reg * eps_reg

    h = np.diff(r)                      # n cell widths
    rf = 0.5 * (r[:-1] + r[1:])         # face positions
    w = rf ** (N - 1)                   # face weights
    # control volumes: V_0 for the center node, V_i between faces
    vol = np.empty(n)
    vol[0] = rf[0] ** N / N
    vol[1:] = (rf[1:] ** N - rf[:-1] ** N) / N
    d_nodes = geom.extent - r[:n]
    a_nodes = np.array([spec.potential(float(d)) for d in d_nodes])

    f = spec.nonlinearity
    if u0 is None:
        # a flat start has zero gradient everywhere, which makes the
        # degenerate diffusion Jacobian useless for p > 2; seed a mild ramp
        u = M * np.maximum(0.1, (r[:n] / geom.extent) ** 2)
    else:
        u = np.array(u0, dtype=float)

    def residual(u_int):
        full = np.concatenate((u_int, [M]))
        s = np.diff(full) / h
        flux = w * _phi(s, p, eps2)
        res = np.empty(n)
        res[0] = flux[0] - a_nodes[0] * f(u_int[0]) * vol[0]
        res[1:] = flux[1:] - flux[:-1] - a_nodes[1:] * f(u_int[1:]) * vol[1:]
        scale = np.maximum.reduce([
            np.abs(flux[:n]), np.concatenate(([0.0], np.abs(flux[:-1]))),
            a_nodes * f(u_int) * vol, np.ones(n)])
        return res, scale, flux, s

    def scaled_norm(res, scale):
        return float(np.max(np.abs(res) / scale))

    def merit(res, scale0):
        # line-search merit: 2-norm against the scale frozen at the start of
        # the step, so shrinking a flux-dominated residual counts as progress
        return float(np.linalg.norm(res / scale0))

    res, scale, flux, s = residual(u)
    norm = scaled_norm(res, scale)
    last = None
    for _ in range(max_newton):
        if norm < newton_tol:
            break
        dphi = _phi_deriv(s, p, eps2)
        c_right = w * dphi / h                       # d flux_i / d u_{i+1}
        fp = np.array([f.deriv(float(v)) for v in u])
        # banded Jacobian: ab[0]=super, ab[1]=diag, ab[2]=sub
        ab = np.zeros((3, n))
        ab[1, 0] = -c_right[0] - a_nodes[0] * vol[0] * fp[0]
        ab[1, 1:] = -c_right[1:] - c_right[:-1] - a_nodes[1:] * vol[1:] * fp[1:]
        ab[0, 1:] = c_right[:-1]                     # d res_i / d u_{i+1}
        ab[2, :-1] = c_right[:-1]                    # d res_i / d u_{i-1}
        step = solve_banded((1, 1), ab, -res)
        m0 = merit(res, scale)
        alpha = 1.0
        improved = False
        for _ in range(40):
            u_try = u + alpha * step
            if np.all(u_try > 0):
                res_t, scale_t, flux_t, s_t = residual(u_try)
                m_t = merit(res_t, scale)
                if m_t < m0 * (1.0 - 1e-4 * alpha) or scaled_norm(res_t, scale_t) < newton_tol:
                    u, res, scale, flux, s = u_try, res_t, scale_t, flux_t, s_t
                    norm = scaled_norm(res, scale)
                    improved = True
                    break
            alpha *= 0.5
        if not improved:
            last = u
            break
    if norm >= newton_tol * 10.0:
        raise RuntimeError(
            f"Newton did not converge (scaled residual {norm:.3e}); "
            "last iterate attached", last if last is not None else u)
    full_u = np.concatenate((u, [M]))
    full_flux = np.concatenate(([0.0], _phi(np.diff(full_u) / h, p, eps2)))
    return RadialSolution(r=r, u=full_u, flux=full_flux, boundary_value=M,
                          residual_norm=norm, spec=spec)


def default_window(mesh_params: MeshParams, geometry: Geometry) -> tuple:
    """Evaluation window away from both the truncation layer and the region
    where higher-order terms dominate."""
    return (500.0 * mesh_params.finest_rel * geometry.extent,
            0.1 * geometry.extent)


@dataclass
class ContinuationInfo:
    levels: list = field(default_factory=list)
    window_changes: list = field(default_factory=list)
    refinements: list = field(default_factory=list)
    monotone_min_increment: float = np.inf
    final_finest_rel: float = np.nan
    converged: bool = False

    def to_dict(self) -> dict:
        return {
            "levels": self.levels,
            "window_changes": self.window_changes,
            "refinements": self.refinements,
            "monotone_min_increment": self.monotone_min_increment,
            "final_finest_rel": self.final_finest_rel,
            "converged": self.converged,
        }


def _probe_values(sol: RadialSolution, d_probe: np.ndarray) -> np.ndarray:
    """Log-log interpolation of the solution onto probe distances."""
    d = sol.d[::-1]
    u = sol.u[::-1]
    keep = d > 0
    return np.exp(np.interp(np.log(d_probe), np.log(d[keep]),
                            np.log(np.maximum(u[keep], 1e-300))))


def _layer_jump(sol: RadialSolution) -> float:
    """Relative jump across the boundary cell.  Once the truncation layer
    becomes thinner than the finest cell this blows up, and the discrete
    near-boundary values start polluting the interior."""
    return (sol.boundary_value - sol.u[-2]) / max(abs(sol.u[-2]), 1.0)


def solve_large(spec: ProblemSpec, window: tuple, tol: float = 1e-5,
                M0: Optional[float] = None,
                mesh_params: MeshParams = MeshParams(),
                max_levels: int = 80) -> tuple:
    """Monotone continuation toward the large solution: solve the truncated
    problem for M_j = M0 * 4**j with warm starts until the solution changes
    by less than ``tol`` relatively on the evaluation window.

    The boundary layer of the truncated solution thins as M grows; whenever
    the jump across the finest cell exceeds unity the boundary grading is
    refined and the level re-solved, so the layer stays resolved.  Nodewise
    monotonicity in M is recorded for every pair of consecutive levels
    sharing a mesh.  Returns (solution, ContinuationInfo).
    """
    from dataclasses import replace

    if not window[0] < window[1]:
        raise ValueError("window must satisfy d_min < d_max")
    params = mesh_params
    mesh = graded_mesh(spec.geometry, params)
    d_probe = np.geomspace(window[0], window[1], 48)
    if window[0] < 2.0 * params.finest_rel * spec.geometry.extent:
        raise ValueError("window lower end is below the mesh resolution")
    if M0 is None:
        M0 = 10.0
    info = ContinuationInfo()
    sol = solve_truncated(spec, M0, mesh=mesh, mesh_params=params)
    info.levels.append(M0)
    prev = sol
    prev_probe = _probe_values(sol, d_probe)
    M = M0
    for _ in range(max_levels):
        M *= 4.0
        sol_new = solve_truncated(spec, M, mesh=mesh, mesh_params=params,
                                  u0=prev.u[:-1])
        refines = 0
        while _layer_jump(sol_new) > 1.0 and refines < 6:
            params = replace(params, finest_rel=params.finest_rel / 16.0)
            params.validate()
            mesh = graded_mesh(spec.geometry, params)
            d_new = spec.geometry.extent - mesh[:-1]
            u0 = np.exp(np.interp(np.log(np.maximum(d_new, 1e-300)),
                                  np.log(prev.d[::-1][prev.d[::-1] > 0]),
                                  np.log(prev.u[::-1][prev.d[::-1] > 0])))
            sol_new = solve_truncated(spec, M, mesh=mesh, mesh_params=params,
                                      u0=np.minimum(u0, M))
            info.refinements.append({"M": M, "finest_rel": params.finest_rel})
            refines += 1
        if sol_new.r.shape == prev.r.shape and np.array_equal(sol_new.r, prev.r):
            rel_inc = (sol_new.u[:-1] - prev.u[:-1]) \
                / np.maximum(np.abs(prev.u[:-1]), 1e-300)
            info.monotone_min_increment = min(info.monotone_min_increment,
                                              float(np.min(rel_inc)))
        probe = _probe_values(sol_new, d_probe)
        change = float(np.max(np.abs(probe / prev_probe - 1.0)))
        info.levels.append(M)
        info.window_changes.append(change)
        prev, prev_probe, sol = sol_new, probe, sol_new
        if change < tol:
            info.converged = True
            break
    info.final_finest_rel = params.finest_rel
    if not info.converged:
        raise RuntimeError(
            "continuation did not stabilize within the level budget; "
            f"window changes: {info.window_changes}")
    return sol, info


def comparison_check(sol_a: RadialSolution, sol_b: RadialSolution,
                     rel_tol: float = 1e-12) -> dict:
    """Verify the discrete comparison property sol_a >= sol_b nodewise (up
    to relative round-off), for two solutions on the same mesh with
    sol_a boundary value >= sol_b boundary value."""
    if sol_a.r.shape != sol_b.r.shape or not np.allclose(sol_a.r, sol_b.r):
        raise ValueError("solutions live on different meshes")
    if sol_a.boundary_value < sol_b.boundary_value:
        raise ValueError("expected sol_a boundary value >= sol_b")
    deficit = sol_b.u - sol_a.u
    scale = np.maximum(np.abs(sol_a.u), 1.0)
    worst = float(np.max(deficit / scale))
    idx = int(np.argmax(deficit / scale))
    return {
        "verdict": "PASS" if worst <= rel_tol else "FAIL",
        "max_relative_deficit": worst,
        "worst_node": idx,
        "margin": -worst,
    }


@dataclass
class SlopeFit:
    slope: float
    intercept: float
    r2: float
    prediction: float
    n_nodes: int
    reliable: bool
    window: tuple

    def to_dict(self) -> dict:
        return {
            "slope": self.slope, "intercept": self.intercept, "r2": self.r2,
            "prediction": self.prediction, "n_nodes": self.n_nodes,
            "reliable": self.reliable, "window": list(self.window),
        }


def fit_boundary_slope(sol: RadialSolution, be, window: tuple) -> SlopeFit:
    """Least-squares fit of e(d) = u(d)/(xi0 h(K(d))) - 1 against slope*d +
    intercept on the window; the expansion predicts slope C1 + C2*H and
    intercept 0."""
    d, u = sol.window_values(window)
    if len(d) < 8:
        raise ValueError(f"only {len(d)} nodes in window {window}; need >= 8")
    lead = np.array([be.leading(float(x)) for x in d])
    e = u / lead - 1.0
    slope, intercept = np.polyfit(d, e, 1)
    fitted = slope * d + intercept
    ss_res = float(np.sum((e - fitted) ** 2))
    ss_tot = float(np.sum((e - np.mean(e)) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    c = be.constants
    H = sol.spec.geometry.curvature
    prediction = c.C1 + c.C2 * H
    return SlopeFit(slope=float(slope), intercept=float(intercept), r2=r2,
                    prediction=float(prediction), n_nodes=len(d),
                    reliable=bool(r2 >= 0.9), window=tuple(window))


def first_integral_deviation(sol: RadialSolution) -> float:
    """On the interval with constant potential and p = 2 the quantity
    (u')**2/2 - a*F(u) is a first integral; returns its relative variation
    across the mesh (a second-order consistency check)."""
    spec = sol.spec
    if spec.geometry.kind != "interval" or spec.p != 2.0:
        raise ValueError("first integral requires the interval and p = 2")
    from .transform import Primitive
    prim = Primitive(spec.nonlinearity, spec.p)
    a0 = spec.potential(0.0)
    s = np.diff(sol.u) / np.diff(sol.r)
    umid = 0.5 * (sol.u[:-1] + sol.u[1:])
    # restrict to resolved cells: the midpoint rule is meaningless across a
    # cell where the solution changes by a large factor
    resolved = np.abs(np.diff(sol.u)) < 0.05 * umid
    kinetic = 0.5 * s * s
    potential = a0 * np.array([prim(float(v)) for v in umid])
    E = kinetic - potential
    # the constant is pinned at the center where both terms are smallest and
    # the discretization sharpest; scale per cell since the two terms cancel
    # to many digits near the boundary
    scale = np.maximum.reduce([kinetic, potential, np.full_like(E, abs(E[0]))])
    dev = np.abs(E - E[0]) / np.maximum(scale, 1e-300)
    return float(np.max(dev[resolved]))
