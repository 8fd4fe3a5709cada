"""Radial geometries: symmetric interval and ball.

Both are parametrized by a radial coordinate r measured from the center,
with boundary distance d = extent - r.  The mean curvature convention is
H = 1/R on the ball of radius R (boundary curved toward the interior
counts positive) and H = 0 on the interval; with this convention the
solver-measured boundary slope matches C1 + C2*H.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Geometry:
    kind: str        # "interval" | "ball"
    extent: float    # half-length L of the interval (0, 2L), or radius R
    dimension: int = 1

    def __post_init__(self):
        if self.kind not in ("interval", "ball"):
            raise ValueError(f"unknown geometry kind {self.kind!r}")
        if self.extent <= 0:
            raise ValueError("geometry extent must be positive")
        if self.kind == "interval" and self.dimension != 1:
            raise ValueError("interval geometry is one-dimensional")
        if self.kind == "ball" and self.dimension < 2:
            raise ValueError("ball geometry needs dimension >= 2")

    @property
    def curvature(self) -> float:
        """Boundary mean curvature under this library's sign convention."""
        return 1.0 / self.extent if self.kind == "ball" else 0.0

    def distance(self, r: float) -> float:
        return self.extent - r

    def laplacian_distance(self, d: float) -> float:
        """Radial value substituted for the Laplacian of the distance
        function in the boundary functionals; zero on the interval."""
        if self.kind == "interval":
            return 0.0
        return (self.dimension - 1) / (self.extent - d)


def interval(half_length: float) -> Geometry:
    return Geometry(kind="interval", extent=half_length, dimension=1)


def ball(radius: float, dimension: int) -> Geometry:
    return Geometry(kind="ball", extent=radius, dimension=dimension)
