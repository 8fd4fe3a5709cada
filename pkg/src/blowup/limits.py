"""Shared machinery for estimating one-sided limits from geometric grids.

Every analytic limit claimed by the library (regular-variation indices,
kernel limits, the lemma suites, the boundary-functional limits) is turned
into the same falsifiable check: evaluate the quantity along a geometric
grid, extrapolate once, and compare the extrapolant against the claimed
value while requiring the residual tail to be non-increasing.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Shared pass criterion: |extrapolated - claimed| < REL_TOL * (1 + |claimed|)
# with residual magnitudes non-increasing over the last three grid points.
REL_TOL = 1e-6

# Residuals below this (scaled) floor are treated as converged noise; the
# monotone-tail requirement is waived for them.  Without a floor, sequences
# that are identically zero up to round-off would fail the tail check.
NOISE_FLOOR = 1e-7


def geometric_grid(start: float, stop: float, ratio: float = 2.0) -> np.ndarray:
    """Grid start, start/ratio, ... down to (or up to) stop, endpoint included
    when it lands on the progression.  Works toward 0+ (start > stop) or
    toward infinity (start < stop)."""
    if start <= 0 or stop <= 0 or ratio <= 1:
        raise ValueError("geometric_grid needs positive endpoints and ratio > 1")
    span = np.log(max(start, stop) / min(start, stop)) / np.log(ratio)
    n = int(np.floor(span + 1e-9)) + 1
    if start > stop:
        return start * ratio ** -np.arange(n, dtype=float)
    return start * ratio ** np.arange(n, dtype=float)


def aitken_extrapolate(values: np.ndarray) -> float:
    """One level of Aitken delta-squared extrapolation on the tail of a
    sequence.  Degenerate differences (constant or noise-level sequences)
    fall back to the last finite entry."""
    v = np.asarray(values, dtype=float)
    v = v[np.isfinite(v)]
    if v.size == 0:
        return np.nan
    if v.size < 3:
        return float(v[-1])
    a, b, c = v[-3], v[-2], v[-1]
    denom = (c - b) - (b - a)
    if abs(denom) < 1e-14 * (abs(a) + abs(b) + abs(c) + 1e-300):
        return float(c)
    extrap = c - (c - b) ** 2 / denom
    # Aitken can misfire on non-geometric error tails; never let it move the
    # estimate far outside the range spanned by the last entries.
    spread = abs(c - a) + abs(c - b)
    if abs(extrap - c) > 10 * spread + 1e-300:
        return float(c)
    return float(extrap)


@dataclass
class LimitReport:
    """Evidence record for one claimed limit."""

    name: str
    grid: np.ndarray
    values: np.ndarray
    claimed: float
    extrapolated: float = field(init=False)
    error: float = field(init=False)
    tail_monotone: bool = field(init=False)
    passed: bool = field(init=False)
    rel_tol: float = REL_TOL
    notes: str = ""

    def __post_init__(self) -> None:
        self.grid = np.asarray(self.grid, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        self.extrapolated = aitken_extrapolate(self.values)
        scale = 1.0 + abs(self.claimed)
        self.error = abs(self.extrapolated - self.claimed)
        residuals = np.abs(self.values[np.isfinite(self.values)] - self.claimed)
        floor = max(NOISE_FLOOR, 0.5 * self.rel_tol) * scale
        tail = residuals[-3:] if residuals.size >= 3 else residuals
        if tail.size == 0:
            self.tail_monotone = False
        else:
            clipped = np.maximum(tail, floor)
            self.tail_monotone = bool(np.all(clipped[1:] <= clipped[:-1] * (1.0 + 1e-9)))
        self.passed = bool(np.isfinite(self.extrapolated)) and (
            self.error < self.rel_tol * scale
        ) and self.tail_monotone

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "grid": self.grid.tolist(),
            "values": self.values.tolist(),
            "claimed": self.claimed,
            "extrapolated": self.extrapolated,
            "error": self.error,
            "rel_tol": self.rel_tol,
            "tail_monotone": self.tail_monotone,
            "passed": self.passed,
            "notes": self.notes,
        }


def check_limit(
    name: str,
    grid,
    values,
    claimed: float,
    rel_tol: float = REL_TOL,
    notes: str = "",
) -> LimitReport:
    """Build a :class:`LimitReport` from sampled values of a quantity whose
    limit along ``grid`` is ``claimed``."""
    return LimitReport(name=name, grid=np.asarray(grid), values=np.asarray(values),
                       claimed=claimed, rel_tol=rel_tol, notes=notes)


def richardson_pair(values: np.ndarray, order: int = 1) -> float:
    """Richardson extrapolation assuming error ~ C * t^order on a ratio-2
    geometric grid ordered toward the limit point."""
    v = np.asarray(values, dtype=float)
    v = v[np.isfinite(v)]
    if v.size < 2:
        return float(v[-1]) if v.size else np.nan
    w = 2.0 ** order
    return float((w * v[-1] - v[-2]) / (w - 1.0))
