"""Primitive, scaled tail integral, and the implicit blow-up profile
transform.

For a nonlinearity f with primitive F(t) = integral_0^t f, the scaled tail

    calF(t) = ((p-1)/p)**(1/p) * integral_t^inf F(x)**(-1/p) dx

is finite whenever the absorption is strong enough (Keller-Osserman), is
strictly decreasing, and its inverse h (calF(h(t)) = t) carries the leading
boundary blow-up profile.  This module also hosts the numerical
verification suites for the tail limits the asymptotic expansion rests on.
"""

from __future__ import annotations

import warnings
from bisect import bisect_right, insort
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import IntegrationWarning, quad as _quad


def quad(*args, **kwargs):
    # quadrature tolerances are pushed to the float64 roundoff limit on
    # purpose; silence the resulting roundoff warnings
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IntegrationWarning)
        return _quad(*args, **kwargs)

from .karamata import Nonlinearity, WeightKernel
from .limits import LimitReport, aitken_extrapolate, check_limit, geometric_grid

__all__ = [
    "Primitive",
    "ScaledTail",
    "HTransform",
    "KellerOssermanReport",
    "keller_osserman",
    "check_index_ratio",
    "verify_lemma2",
    "verify_lemma3",
]

_QUAD_OPTS = dict(epsrel=1e-13, epsabs=1e-300, limit=200)


def _scale_factor(p: float) -> float:
    """((p-1)/p)**(1/p), the prefactor of the scaled tail."""
    return ((p - 1.0) / p) ** (1.0 / p)


def _chunked_quad(fn, lo: float, hi: float, chunk: float = 10.0) -> float:
    """Adaptive quadrature on [lo, hi], split geometrically when the interval
    spans many decades so each quad call sees a tame integrand."""
    if hi <= lo:
        return 0.0
    total = 0.0
    a = lo
    while a < hi:
        b = min(hi, max(a * chunk, a + 1.0) if a > 0 else min(hi, 1.0))
        if b <= a:
            b = hi
        val, _ = quad(fn, a, b, **_QUAD_OPTS)
        total += val
        a = b
    return total


class Primitive:
    """F(t) = integral_0^t f(s) ds with an incremental, monotone cache.

    New values are assembled from the nearest cached knot below t, so the
    increments are positive and repeated evaluations are consistent and
    nondecreasing in t.
    """

    def __init__(self, nonlinearity: Nonlinearity, p: float):
        if not (1.0 < p < np.inf):
            raise ValueError(f"exponent p must lie in (1, inf), got {p}")
        self.n = nonlinearity
        self.p = float(p)
        self._knots = [0.0]
        self._values = {0.0: 0.0}

    @property
    def sigma(self) -> float:
        return self.n.sigma

    def __call__(self, t):
        if not np.isscalar(t):
            return np.array([self(float(v)) for v in np.asarray(t, dtype=float)])
        t = float(t)
        if not np.isfinite(t) or t < 0:
            raise ValueError(f"primitive argument must be finite and >= 0, got {t}")
        if t in self._values:
            return self._values[t]
        i = bisect_right(self._knots, t) - 1
        base = self._knots[i]
        val = self._values[base] + _chunked_quad(self.n, base, t)
        insort(self._knots, t)
        self._values[t] = val
        return val

    def index_ratio(self, t: float) -> float:
        """t*f(t)/F(t); tends to sigma+2 at infinity."""
        return t * self.n(t) / self(t)

    def tail_model_onset(self, rel: float = 0.01, cap: float = 1e8) -> float:
        """Smallest grid point where t*f/F is within ``rel`` of sigma+2,
        capped; used as the split point of the tail quadrature."""
        target = self.sigma + 2.0
        t = max(self.n.B, 1.0) * 10.0
        while t < cap:
            if abs(self.index_ratio(t) - target) <= rel * abs(target):
                return t
            t *= 10.0
        return cap


def check_index_ratio(prim: Primitive, t_grid=None,
                      rel_tol: float = 1e-6) -> LimitReport:
    """Check t*f(t)/F(t) -> sigma+2 along a geometric grid."""
    if t_grid is None:
        t_grid = geometric_grid(max(4.0 * prim.n.B, 4.0), 1e8, ratio=4.0)
    vals = np.array([prim.index_ratio(t) for t in np.asarray(t_grid, dtype=float)])
    return check_limit("index_ratio", t_grid, vals, prim.sigma + 2.0,
                       rel_tol=rel_tol)


@dataclass
class KellerOssermanReport:
    """Classification of the tail integral integral^inf F**(-1/p)."""

    classification: str          # "CONVERGES" | "DIVERGES"
    analytic: str                # verdict from the index test sigma > p-2
    numeric: str                 # verdict from dyadic tail integrals
    agreement: bool
    tail_integrals: np.ndarray
    tail_ratios: np.ndarray
    ratio_extrapolated: float

    def to_dict(self) -> dict:
        return {
            "classification": self.classification,
            "analytic": self.analytic,
            "numeric": self.numeric,
            "agreement": self.agreement,
            "tail_integrals": self.tail_integrals.tolist(),
            "tail_ratios": self.tail_ratios.tolist(),
            "ratio_extrapolated": self.ratio_extrapolated,
        }


def keller_osserman(prim: Primitive, n_dyadic: int = 18) -> KellerOssermanReport:
    """Classify convergence of the tail integral with two pieces of evidence:
    the analytic index test (converges iff sigma > p-2) and dyadic tail
    integrals over [T, 2T] whose ratio tends to 2**(1-(sigma+2)/p)."""
    analytic = "CONVERGES" if prim.sigma > prim.p - 2.0 else "DIVERGES"
    T0 = max(2.0 * prim.n.B, 2.0)
    integrals = []
    invp = -1.0 / prim.p
    for j in range(n_dyadic):
        T = T0 * 2.0 ** j
        val, _ = quad(lambda x: prim(x) ** invp, T, 2.0 * T, **_QUAD_OPTS)
        integrals.append(val)
    integrals = np.asarray(integrals)
    ratios = integrals[1:] / integrals[:-1]
    ratio = aitken_extrapolate(ratios)
    numeric = "CONVERGES" if ratio < 0.98 else "DIVERGES"
    classification = analytic
    return KellerOssermanReport(
        classification=classification,
        analytic=analytic,
        numeric=numeric,
        agreement=analytic == numeric,
        tail_integrals=integrals,
        tail_ratios=ratios,
        ratio_extrapolated=float(ratio),
    )


class ScaledTail:
    """calF(t) = ((p-1)/p)**(1/p) * integral_t^inf F(x)**(-1/p) dx.

    The integral is split at S = max(t, split_point): [t, S] by adaptive
    quadrature, (S, inf) by exponential blocks x in [S*e**m, S*e**(m+1)]
    accumulated until the increment is negligible (the integrand decays like
    a power with exponent (sigma+2)/p > 1 once the regular-variation index
    has converged, so the blocks shrink geometrically).
    """

    def __init__(self, primitive: Primitive, split_point: Optional[float] = None):
        if primitive.sigma <= primitive.p - 2.0:
            raise ValueError(
                "scaled tail diverges: need sigma > p - 2 "
                f"(sigma={primitive.sigma}, p={primitive.p})")
        self.primitive = primitive
        self.split_point = (primitive.tail_model_onset()
                            if split_point is None else float(split_point))
        self._prefactor = _scale_factor(primitive.p)
        self._knots: list[float] = []
        self._values: dict[float, float] = {}

    def _integrand(self, x: float) -> float:
        return self.primitive(x) ** (-1.0 / self.primitive.p)

    def _tail_from(self, S: float) -> float:
        total = 0.0
        e = np.e
        lo = S
        for _ in range(400):
            hi = lo * e
            block, _ = quad(self._integrand, lo, hi, **_QUAD_OPTS)
            total += block
            if block < 1e-13 * total:
                break
            lo = hi
        else:
            raise FloatingPointError(
                f"tail integral from {S} failed to converge; the absorption "
                "may be too close to the divergence borderline")
        return total

    def __call__(self, t):
        if not np.isscalar(t):
            return np.array([self(float(v)) for v in np.asarray(t, dtype=float)])
        t = float(t)
        if t <= 0:
            raise ValueError(f"scaled tail argument must be positive, got {t}")
        if t in self._values:
            return self._values[t]
        # Below the topmost cached knot the value is the knot value plus a
        # short finite increment; the improper tail is computed once per
        # fresh upper argument.
        if self._knots and t < self._knots[-1]:
            i = bisect_right(self._knots, t)
            base = self._knots[i]
            val = self._values[base] + self._prefactor * _chunked_quad(
                self._integrand, t, base)
        else:
            S = max(t, self.split_point)
            val = self._prefactor * (_chunked_quad(self._integrand, t, S)
                                     + self._tail_from(S))
        insort(self._knots, t)
        self._values[t] = val
        return val

    def deriv(self, t: float) -> float:
        """calF'(t) = -((p-1)/p)**(1/p) * F(t)**(-1/p)."""
        return -self._prefactor * self.primitive(t) ** (-1.0 / self.primitive.p)


class HTransform:
    """The decreasing bijection h with calF(h(t)) = t.

    A monotone bracket table on log-spaced nodes localizes the root; a
    safeguarded Newton iteration (bisection fallback whenever a step leaves
    the bracket) then polishes it to |calF(h) - t| <= newton_rtol * t.
    """

    def __init__(self, tail: ScaledTail, x_range: Optional[tuple] = None,
                 n_table: int = 64, newton_rtol: float = 1e-13):
        self.tail = tail
        self.newton_rtol = float(newton_rtol)
        if x_range is None:
            x_range = (min(tail.primitive.n.B, 1.0) / 100.0, 1e10)
        x_nodes = np.geomspace(x_range[0], x_range[1], n_table)
        # evaluate top-down so the tail cache grows by finite increments
        t_nodes = np.array([tail(x) for x in x_nodes[::-1]])[::-1]
        if np.any(np.diff(t_nodes) >= 0):
            raise ValueError("scaled tail is not strictly decreasing on the "
                             "bracket table; widen the quadrature tolerances")
        # store sorted by t ascending (x descending)
        self._t_table = t_nodes[::-1].copy()
        self._x_table = x_nodes[::-1].copy()
        self.t_min = float(self._t_table[0])
        self.t_max = float(self._t_table[-1])

    @property
    def primitive(self) -> Primitive:
        return self.tail.primitive

    def working_range(self) -> tuple:
        return (self.t_min, self.t_max)

    def __call__(self, t):
        if not np.isscalar(t):
            return np.array([self(float(v)) for v in np.asarray(t, dtype=float)])
        t = float(t)
        if not (self.t_min <= t <= self.t_max):
            raise ValueError(
                f"argument {t} outside the transform working range "
                f"({self.t_min:.3e}, {self.t_max:.3e}); rebuild with a wider "
                "bracket table")
        i = int(np.searchsorted(self._t_table, t))
        i = min(max(i, 1), len(self._t_table) - 1)
        lo = self._x_table[i]        # calF(lo) >= t
        hi = self._x_table[i - 1]    # calF(hi) <= t
        x = np.sqrt(lo * hi)
        for _ in range(100):
            g = self.tail(x) - t
            if abs(g) <= self.newton_rtol * t:
                return x
            if g > 0:
                lo = x
            else:
                hi = x
            step = g / self.tail.deriv(x)
            x_new = x - step
            if not (lo < x_new < hi):
                x_new = np.sqrt(lo * hi)
            if abs(x_new - x) <= 1e-16 * x:
                return x_new
            x = x_new
        if abs(self.tail(x) - t) <= 1e-9 * t:
            return x
        raise RuntimeError(f"transform inversion failed to converge at t={t}")

    def derivs(self, t: float) -> tuple:
        """(h, h', h'') computed from h(t) via the implicit function theorem:
        h' = -(p/(p-1))**(1/p) F(h)**(1/p),
        h'' = (p-1)**(-2/p) * p**((2-p)/p) * f(h) * F(h)**((2-p)/p)."""
        p = self.primitive.p
        h = self(t)
        F_h = self.primitive(h)
        f_h = self.primitive.n(h)
        h1 = -((p / (p - 1.0)) ** (1.0 / p)) * F_h ** (1.0 / p)
        h2 = (p - 1.0) ** (-2.0 / p) * p ** ((2.0 - p) / p) * f_h * F_h ** ((2.0 - p) / p)
        return h, h1, h2


# -- limit-verification suites ----------------------------------------------

@dataclass
class SuiteReport:
    """Per-part verdicts of a limit-verification suite."""

    suite: str
    parts: dict = field(default_factory=dict)  # label -> LimitReport
    passed: bool = True

    def add(self, label: str, rep: LimitReport) -> None:
        self.parts[label] = rep
        self.passed = self.passed and rep.passed

    def to_dict(self) -> dict:
        return {
            "suite": self.suite,
            "passed": self.passed,
            "parts": {k: v.to_dict() for k, v in self.parts.items()},
        }


def verify_lemma2(n: Nonlinearity, p: float, part: str,
                  a_values=None, tail: Optional[ScaledTail] = None,
                  t_grid=None, rel_tol: float = 1e-6) -> SuiteReport:
    """Tail limits of f, F, calF at infinity, each scaled by calF(t).

    part "i":   (t f'(t)/f(t) - sigma - 1) / calF(t) -> 0
    part "ii":  ((p/(p-1))**((p-1)/p) F**((p-1)/p)/(f calF)
                 - (sigma+2-p)/((p-1)(sigma+2))) / calF(t) -> 0
    part "iii": (f(a t)/(a**(p-1) f(t)) - a**(sigma+2-p)) / calF(t) -> 0

    Part "ii" subtracts two near-equal O(1) quantities before dividing by a
    vanishing calF(t), so its default grid stops at 1e6 where float64
    quadrature noise stays below the pass tolerance.
    """
    if part not in ("i", "ii", "iii"):
        raise ValueError(f"unknown part {part!r}")
    if tail is None:
        tail = ScaledTail(Primitive(n, p))
    prim = tail.primitive
    sigma = n.sigma
    if t_grid is None:
        t_max = 1e6 if part == "ii" else 1e8
        t_grid = geometric_grid(max(4.0 * n.B, 4.0), t_max, ratio=2.0)
    t_grid = np.asarray(t_grid, dtype=float)
    report = SuiteReport(suite=f"lemma2({part})")

    if part == "i":
        vals = np.full(t_grid.shape, np.nan)
        for j, t in enumerate(t_grid):
            with np.errstate(over="ignore", invalid="ignore"):
                vals[j] = (t * n.deriv(t) / n(t) - sigma - 1.0) / tail(t)
        report.add("i", check_limit("lemma2_i", t_grid, vals, 0.0, rel_tol=rel_tol))
    elif part == "ii":
        pref = (p / (p - 1.0)) ** ((p - 1.0) / p)
        const = (sigma + 2.0 - p) / ((p - 1.0) * (sigma + 2.0))
        vals = np.full(t_grid.shape, np.nan)
        for j, t in enumerate(t_grid):
            with np.errstate(over="ignore", invalid="ignore"):
                calF = tail(t)
                vals[j] = (pref * prim(t) ** ((p - 1.0) / p) / (n(t) * calF)
                           - const) / calF
        report.add("ii", check_limit("lemma2_ii", t_grid, vals, 0.0, rel_tol=rel_tol))
    else:
        if a_values is None:
            a_values = (0.5, 2.0)
        for a in a_values:
            if a <= 0:
                raise ValueError("scale factors must be positive")
            vals = np.full(t_grid.shape, np.nan)
            for j, t in enumerate(t_grid):
                with np.errstate(over="ignore", invalid="ignore"):
                    vals[j] = ((n(a * t) / (a ** (p - 1.0) * n(t))
                                - a ** (sigma + 2.0 - p)) / tail(t))
            report.add(f"iii(a={a})",
                       check_limit(f"lemma2_iii(a={a})", t_grid, vals, 0.0,
                                   rel_tol=rel_tol))
    return report


def verify_lemma3(ht: HTransform, kernel: Optional[WeightKernel], xi0: float,
                  part: str, t_grid=None, rel_tol: float = 1e-6) -> SuiteReport:
    """Limits of the implicit transform at 0+.

    part "i":   t h'/h -> -p/(sigma+2-p)
    part "ii":  h'/(t h'') -> -(sigma+2-p)/(sigma+2)
    part "iii": h/(t**2 h'') -> (sigma+2-p)**2 / (p (sigma+2))
    part "iv":  (h'/(t h'') + (sigma+2-p)/(sigma+2)) / t -> 0
    part "v":   t**(-1) (1 + k'K/k**2 * h'(K)/(K h''(K))
                - f(xi0 h(K)) / ((p-1) xi0**(p-1) f(h(K))))
                -> (sigma+2-p) L1 / (sigma+2)

    Parts "iv" and "v" divide an O(t) defect by t, so their default grids
    stop near 3e-5 where the transform's solve tolerance is still below the
    pass tolerance after the division.
    """
    if part not in ("i", "ii", "iii", "iv", "v"):
        raise ValueError(f"unknown part {part!r}")
    prim = ht.primitive
    p, sigma = prim.p, prim.sigma
    spp = sigma + 2.0 - p
    if t_grid is None:
        if part in ("iv", "v"):
            t_grid = geometric_grid(0.05, 3e-5, ratio=2.0)
        else:
            t_grid = geometric_grid(0.1, 1e-7, ratio=2.0)
    t_grid = np.asarray(t_grid, dtype=float)
    lo, hi = ht.working_range()
    usable = (t_grid > lo) & (t_grid < hi)
    t_grid = t_grid[usable]
    if part == "v":
        if kernel is None:
            raise ValueError("part v needs a weight kernel")
        Kvals = np.array([kernel.K(t) for t in t_grid])
        keep = (Kvals > lo) & (Kvals < hi)
        t_grid, Kvals = t_grid[keep], Kvals[keep]
    if t_grid.size < 4:
        raise ValueError("fewer than 4 usable grid points inside the "
                         "transform working range")
    report = SuiteReport(suite=f"lemma3({part})")
    vals = np.full(t_grid.shape, np.nan)

    if part in ("i", "ii", "iii", "iv"):
        for j, t in enumerate(t_grid):
            h, h1, h2 = ht.derivs(t)
            if part == "i":
                vals[j] = t * h1 / h
            elif part == "ii":
                vals[j] = h1 / (t * h2)
            elif part == "iii":
                vals[j] = h / (t * t * h2)
            else:
                vals[j] = (h1 / (t * h2) + spp / (sigma + 2.0)) / t
        claimed = {
            "i": -p / spp,
            "ii": -spp / (sigma + 2.0),
            "iii": spp * spp / (p * (sigma + 2.0)),
            "iv": 0.0,
        }[part]
        report.add(part, check_limit(f"lemma3_{part}", t_grid, vals, claimed,
                                     rel_tol=rel_tol))
        return report

    # part v
    L1 = kernel.L1
    if L1 is None:
        from .karamata import kernel_limits
        L1 = kernel_limits(kernel).L1
    for j, (t, K) in enumerate(zip(t_grid, Kvals)):
        h, h1, h2 = ht.derivs(K)
        kk = kernel.k_deriv(t) * K / kernel.k(t) ** 2
        f_ratio = prim.n(xi0 * h) / (xi0 ** (p - 1.0) * prim.n(h))
        vals[j] = (1.0 + kk * h1 / (K * h2) - f_ratio / (p - 1.0)) / t
    claimed = spp * L1 / (sigma + 2.0)
    report.add("v", check_limit("lemma3_v", t_grid, vals, claimed,
                                rel_tol=rel_tol))
    return report
