"""Normalized regularly varying nonlinearities and weight kernels.

The absorption term is represented in normalized regularly varying form

    f(u) = A0 * u**(sigma+1) * exp(integral_B^u phi(t)/t dt),   u >= B,

with a slowly varying perturbation ``phi`` vanishing at infinity, extended
below the representation anchor B by a pure power so that f(0) = 0 and f is
positive and increasing.  Weight kernels are positive increasing C^1
functions k on (0, nu) whose antiderivative quotient K/k has a first-order
limit ell1 in [0, 1] at 0+ and a second-order limit L1.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import quad

from .limits import LimitReport, aitken_extrapolate, check_limit, geometric_grid

__all__ = [
    "SlowPerturbation",
    "Nonlinearity",
    "WeightKernel",
    "PotentialModel",
    "pure_power",
    "perturbed_power",
    "power_kernel",
    "constant_kernel",
    "exponential_kernel",
    "check_rv_index",
    "kernel_limits",
    "check_f2",
    "check_potential_expansion",
]


@dataclass(frozen=True)
class SlowPerturbation:
    """Slowly varying perturbation phi on [B, inf) with phi(t) -> 0.

    ``alpha`` is the decay index: t*phi'(t)/phi(t) -> -alpha.  It is None for
    the trivial (identically zero) perturbation, where the decay condition is
    vacuous.  ``integral_over_t`` optionally supplies a closed form for
    integral_lo^hi phi(t)/t dt; without it the integral is computed by
    adaptive quadrature at 1e-12 relative tolerance.
    """

    phi: Callable[[float], float]
    phi_deriv: Callable[[float], float]
    alpha: Optional[float]
    integral_over_t: Optional[Callable[[float, float], float]] = None
    trivial: bool = False

    @staticmethod
    def zero() -> "SlowPerturbation":
        return SlowPerturbation(
            phi=lambda t: 0.0,
            phi_deriv=lambda t: 0.0,
            alpha=None,
            integral_over_t=lambda lo, hi: 0.0,
            trivial=True,
        )

    def integral(self, lo: float, hi: float) -> float:
        if self.trivial:
            return 0.0
        if self.integral_over_t is not None:
            return self.integral_over_t(lo, hi)
        val, err = quad(lambda t: self.phi(t) / t, lo, hi,
                        epsrel=1e-12, epsabs=1e-14, limit=200)
        if not np.isfinite(val):
            raise FloatingPointError(
                f"perturbation quadrature failed on [{lo}, {hi}]")
        return val


@dataclass(frozen=True)
class Nonlinearity:
    """Absorption nonlinearity in normalized regularly varying form.

    On [B, inf) the function is exactly the representation
    A0 * u**(sigma+1) * exp(integral_B^u phi/t); on [0, B) it is extended by
    f(B) * (u/B)**low_range_exponent so that f(0) = 0 and f stays positive
    and increasing.
    """

    A0: float
    sigma: float
    B: float
    perturbation: SlowPerturbation
    low_range_exponent: float = None  # type: ignore[assignment]

    def __post_init__(self):
        if not (self.A0 > 0):
            raise ValueError("amplitude A0 must be positive")
        if not (self.B > 0):
            raise ValueError("representation anchor B must be positive")
        if not (self.sigma + 1 > 0):
            raise ValueError("need sigma + 1 > 0 for an increasing nonlinearity")
        if self.low_range_exponent is None:
            object.__setattr__(self, "low_range_exponent", self.sigma + 1)
        if not (self.low_range_exponent > 0):
            raise ValueError("low-range exponent must be positive")

    # -- evaluation ---------------------------------------------------------

    def slow_exponent(self, u: float) -> float:
        """integral_B^u phi(t)/t dt for u >= B."""
        return self.perturbation.integral(self.B, u)

    def value_at_anchor(self) -> float:
        return self.A0 * self.B ** (self.sigma + 1)

    def _eval_scalar(self, u: float) -> float:
        if not np.isfinite(u) or u < 0:
            raise ValueError(f"nonlinearity argument must be finite and >= 0, got {u}")
        if u == 0.0:
            return 0.0
        if u < self.B:
            return self.value_at_anchor() * (u / self.B) ** self.low_range_exponent
        return self.A0 * u ** (self.sigma + 1) * np.exp(self.slow_exponent(u))

    def __call__(self, u):
        if np.isscalar(u):
            return self._eval_scalar(float(u))
        arr = np.asarray(u, dtype=float)
        return np.array([self._eval_scalar(float(v)) for v in arr]).reshape(arr.shape)

    def deriv(self, u):
        """f'(u); uses the logarithmic derivative of the representation, no
        numerical differentiation."""
        if not np.isscalar(u):
            arr = np.asarray(u, dtype=float)
            return np.array([self.deriv(float(v)) for v in arr]).reshape(arr.shape)
        u = float(u)
        if u < 0 or not np.isfinite(u):
            raise ValueError(f"nonlinearity argument must be finite and >= 0, got {u}")
        if u == 0.0:
            e = self.low_range_exponent
            if e > 1:
                return 0.0
            if e == 1:
                return self.value_at_anchor() / self.B
            return np.inf
        if u < self.B:
            e = self.low_range_exponent
            return self.value_at_anchor() * e * (u / self.B) ** (e - 1) / self.B
        return self._eval_scalar(u) * (self.sigma + 1 + self.perturbation.phi(u)) / u


@dataclass(frozen=True)
class WeightKernel:
    """Positive increasing C^1 weight kernel on (0, nu) with its
    antiderivative K(t) = integral_0^t k and declared (when known in closed
    form) limits ell1 and L1 of (K/k)' at 0+."""

    k: Callable[[float], float]
    k_deriv: Callable[[float], float]
    nu: float
    K_closed_form: Optional[Callable[[float], float]] = None
    ell1: Optional[float] = None
    L1: Optional[float] = None
    name: str = "kernel"

    def __call__(self, t):
        if np.isscalar(t):
            return self.k(float(t))
        return np.array([self.k(float(v)) for v in np.asarray(t, dtype=float)])

    def deriv(self, t):
        if np.isscalar(t):
            return self.k_deriv(float(t))
        return np.array([self.k_deriv(float(v)) for v in np.asarray(t, dtype=float)])

    def K(self, t):
        if not np.isscalar(t):
            return np.array([self.K(float(v)) for v in np.asarray(t, dtype=float)])
        t = float(t)
        if t == 0.0:
            return 0.0
        if not (0.0 < t < self.nu):
            raise ValueError(f"antiderivative argument {t} outside (0, {self.nu})")
        if self.K_closed_form is not None:
            return self.K_closed_form(t)
        # k may vanish at 0; integrate on geometrically graded blocks
        # shrinking toward the origin, absolute tolerance 1e-12.
        total = 0.0
        hi = t
        for _ in range(200):
            lo = hi / 2.0
            block, _ = quad(self.k, lo, hi, epsrel=1e-12, epsabs=1e-14, limit=100)
            total += block
            if block < 1e-13 * max(total, 1e-12) or lo < 1e-300:
                break
            hi = lo
        return total

    def quotient_deriv(self, t: float) -> float:
        """(K/k)'(t) = 1 - K(t) k'(t) / k(t)^2."""
        kv = self.k(t)
        if kv == 0.0:
            raise ZeroDivisionError(f"kernel vanishes at t={t}")
        return 1.0 - self.K(t) * self.k_deriv(t) / kv ** 2


@dataclass(frozen=True)
class PotentialModel:
    """Variable potential a with first-order boundary expansion
    a(d) = k(d)**p * (1 + A*d + o(d))."""

    kernel: WeightKernel
    A: float
    p: float
    exact_form: Callable[[float], float] = None  # type: ignore[assignment]

    def __post_init__(self):
        if self.A < 0:
            warnings.warn(
                "first-order potential coefficient A < 0; the expansion "
                "constants remain well defined but the positivity assumption "
                "on A is violated", stacklevel=2)
        if self.exact_form is None:
            kernel, A, p = self.kernel, self.A, self.p
            object.__setattr__(
                self, "exact_form",
                lambda d: kernel.k(d) ** p * (1.0 + A * d))

    def __call__(self, d):
        if np.isscalar(d):
            return self.exact_form(float(d))
        return np.array([self.exact_form(float(v)) for v in np.asarray(d, dtype=float)])


# -- built-in families ------------------------------------------------------

def pure_power(A0: float = 1.0, sigma: float = 2.0, B: float = 1.0,
               low_range_exponent: Optional[float] = None) -> Nonlinearity:
    """f(u) = A0 * u**(sigma+1), the trivial-perturbation family."""
    return Nonlinearity(A0=A0, sigma=sigma, B=B,
                        perturbation=SlowPerturbation.zero(),
                        low_range_exponent=low_range_exponent)


def perturbed_power(A0: float = 1.0, sigma: float = 2.0, c: float = 1.0,
                    alpha: float = 2.0, B: float = 1.0,
                    low_range_exponent: Optional[float] = None) -> Nonlinearity:
    """Perturbed power with phi(t) = c * t**(-alpha); the inner integral has
    the closed form (c/alpha) * (lo**(-alpha) - hi**(-alpha))."""
    if alpha <= 0:
        raise ValueError("decay index alpha must be positive")
    pert = SlowPerturbation(
        phi=lambda t: c * t ** (-alpha),
        phi_deriv=lambda t: -c * alpha * t ** (-alpha - 1.0),
        alpha=alpha,
        integral_over_t=lambda lo, hi: (c / alpha) * (lo ** (-alpha) - hi ** (-alpha)),
    )
    return Nonlinearity(A0=A0, sigma=sigma, B=B, perturbation=pert,
                        low_range_exponent=low_range_exponent)


def power_kernel(gamma: float, nu: float = 1.0) -> WeightKernel:
    """k(t) = t**gamma; K/k = t/(gamma+1), so ell1 = 1/(gamma+1), L1 = 0."""
    if gamma <= 0:
        raise ValueError("power kernel exponent must be positive")
    return WeightKernel(
        k=lambda t: t ** gamma,
        k_deriv=lambda t: gamma * t ** (gamma - 1.0),
        nu=nu,
        K_closed_form=lambda t: t ** (gamma + 1.0) / (gamma + 1.0),
        ell1=1.0 / (gamma + 1.0),
        L1=0.0,
        name=f"power(gamma={gamma})",
    )


def constant_kernel(nu: float = 1.0) -> WeightKernel:
    """k == 1; K(t) = t, ell1 = 1, L1 = 0."""
    return WeightKernel(
        k=lambda t: 1.0,
        k_deriv=lambda t: 0.0,
        nu=nu,
        K_closed_form=lambda t: t,
        ell1=1.0,
        L1=0.0,
        name="constant",
    )


def exponential_kernel(beta: float, nu: float = 1.0) -> WeightKernel:
    """k(t) = exp(beta*t); (K/k)' = exp(-beta*t), so ell1 = 1, L1 = -beta."""
    if beta <= 0:
        raise ValueError("exponential kernel rate must be positive")
    return WeightKernel(
        k=lambda t: np.exp(beta * t),
        k_deriv=lambda t: beta * np.exp(beta * t),
        nu=nu,
        K_closed_form=lambda t: (np.exp(beta * t) - 1.0) / beta,
        ell1=1.0,
        L1=-beta,
        name=f"exponential(beta={beta})",
    )


# -- verification operations ------------------------------------------------

@dataclass
class RVIndexReport:
    """Residuals f(xi*u)/f(u) - xi**q per scale factor xi."""

    q: float
    per_xi: dict = field(default_factory=dict)  # xi -> LimitReport
    passed: bool = True

    def to_dict(self) -> dict:
        return {
            "q": self.q,
            "passed": self.passed,
            "per_xi": {str(xi): rep.to_dict() for xi, rep in self.per_xi.items()},
        }


def check_rv_index(f: Callable[[float], float], q: float, xi_grid,
                   u_grid, rel_tol: float = 1e-6) -> RVIndexReport:
    """Check f(xi*u)/f(u) -> xi**q along u_grid for each xi."""
    u_grid = np.asarray(u_grid, dtype=float)
    if u_grid.size == 0 or np.any(np.diff(u_grid) <= 0):
        raise ValueError("u_grid must be non-empty and increasing")
    report = RVIndexReport(q=q)
    for xi in np.asarray(xi_grid, dtype=float):
        residuals = np.full(u_grid.shape, np.nan)
        for i, u in enumerate(u_grid):
            with np.errstate(over="ignore", invalid="ignore"):
                try:
                    r = f(xi * u) / f(u) - xi ** q
                except (OverflowError, FloatingPointError):
                    continue
            if np.isfinite(r):
                residuals[i] = r
        rep = check_limit(f"rv_index(xi={xi})", u_grid, residuals, 0.0,
                          rel_tol=rel_tol)
        report.per_xi[float(xi)] = rep
        report.passed = report.passed and rep.passed
    return report


@dataclass
class KernelLimitsReport:
    ell1: float
    L1: float
    grid: np.ndarray
    quotient_deriv: np.ndarray
    second_order: np.ndarray
    ell1_in_range: bool

    def to_dict(self) -> dict:
        return {
            "ell1": self.ell1,
            "L1": self.L1,
            "grid": self.grid.tolist(),
            "quotient_deriv": self.quotient_deriv.tolist(),
            "second_order": self.second_order.tolist(),
            "ell1_in_range": self.ell1_in_range,
        }


def kernel_limits(kernel: WeightKernel, t_grid=None,
                  rel_tol: float = 1e-6) -> KernelLimitsReport:
    """Estimate ell1 = lim (K/k)'(t) and the second-order limit L1 at 0+.

    ell1 comes from extrapolating (K/k)' = 1 - K*k'/k**2 along the grid;
    L1 from Richardson-extrapolated difference quotients of the same values
    (this avoids dividing by t with an inexact ell1).
    """
    if t_grid is None:
        t_grid = geometric_grid(min(0.1, 0.25 * kernel.nu), 1e-7, ratio=2.0)
    t_grid = np.asarray(t_grid, dtype=float)
    if np.any(np.diff(t_grid) >= 0) or np.any(t_grid <= 0):
        raise ValueError("t_grid must be strictly decreasing and positive")
    v = np.array([kernel.quotient_deriv(t) for t in t_grid])
    ell1 = aitken_extrapolate(v)
    # difference quotients: (v(t_j) - v(t_{j+1})) / (t_j - t_{j+1}) -> L1
    dq = (v[:-1] - v[1:]) / (t_grid[:-1] - t_grid[1:])
    L1 = aitken_extrapolate(dq)
    in_range = -rel_tol <= ell1 <= 1.0 + rel_tol
    return KernelLimitsReport(ell1=float(ell1), L1=float(L1), grid=t_grid,
                              quotient_deriv=v, second_order=dq,
                              ell1_in_range=bool(in_range))


@dataclass
class DecayWindowReport:
    """Verdict for the perturbation decay-index window
    (sigma+2)/p - 1 < alpha < sigma+2."""

    status: str  # "pass" | "fail" | "exempt"
    alpha_declared: Optional[float]
    alpha_estimated: Optional[float]
    window: Optional[tuple]
    margins: Optional[tuple]
    limit_report: Optional[LimitReport]

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "alpha_declared": self.alpha_declared,
            "alpha_estimated": self.alpha_estimated,
            "window": list(self.window) if self.window else None,
            "margins": list(self.margins) if self.margins else None,
            "limit_report": self.limit_report.to_dict() if self.limit_report else None,
        }


def check_f2(n: Nonlinearity, p: float, t_max: float = 1e8) -> DecayWindowReport:
    """Verify t*phi'(t)/phi(t) -> -alpha numerically and that alpha lies
    strictly inside ((sigma+2)/p - 1, sigma+2).  Pure powers are exempt."""
    pert = n.perturbation
    if pert.trivial:
        return DecayWindowReport(status="exempt", alpha_declared=None,
                                 alpha_estimated=None, window=None,
                                 margins=None, limit_report=None)
    grid = geometric_grid(max(2.0 * n.B, 2.0), t_max, ratio=2.0)
    vals = np.full(grid.shape, np.nan)
    for i, t in enumerate(grid):
        ph = pert.phi(t)
        if ph != 0.0 and np.isfinite(ph):
            vals[i] = t * pert.phi_deriv(t) / ph
    claimed = -pert.alpha if pert.alpha is not None else aitken_extrapolate(vals)
    rep = check_limit("decay_index", grid, vals, claimed)
    alpha_est = -rep.extrapolated
    lo = (n.sigma + 2.0) / p - 1.0
    hi = n.sigma + 2.0
    margin_lo = alpha_est - lo
    margin_hi = hi - alpha_est
    tol = 1e-9 * (1.0 + abs(alpha_est))
    ok = rep.passed and margin_lo > tol and margin_hi > tol
    return DecayWindowReport(
        status="pass" if ok else "fail",
        alpha_declared=pert.alpha,
        alpha_estimated=float(alpha_est),
        window=(lo, hi),
        margins=(float(margin_lo), float(margin_hi)),
        limit_report=rep,
    )


def check_potential_expansion(pot: PotentialModel, d_grid=None) -> LimitReport:
    """Check (a(d)/k(d)**p - 1 - A*d)/d -> 0 as d -> 0+."""
    if d_grid is None:
        d_grid = geometric_grid(min(0.1, 0.25 * pot.kernel.nu), 1e-7, ratio=2.0)
    d_grid = np.asarray(d_grid, dtype=float)
    vals = np.array([
        (pot.exact_form(d) / pot.kernel.k(d) ** pot.p - 1.0 - pot.A * d) / d
        for d in d_grid
    ])
    return check_limit("potential_expansion", d_grid, vals, 0.0)
