"""Piecewise-linear complex integration paths."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class PathError(ValueError):
    """Raised for degenerate or malformed complex paths."""


@dataclass(frozen=True)
class ComplexPath:
    """Oriented polyline in the complex plane.

    The path is parameterized piecewise-linearly; arc length is available
    per segment and cumulatively. Vertices must be pairwise distinct in
    consecutive position and the total length finite and positive.
    """

    vertices: tuple = field(default_factory=tuple)

    def __post_init__(self):
        verts = tuple(complex(v) for v in self.vertices)
        object.__setattr__(self, "vertices", verts)
        if len(verts) < 2:
            raise PathError("path needs at least 2 vertices")
        arr = np.asarray(verts, dtype=complex)
        if not np.all(np.isfinite(arr.real)) or not np.all(np.isfinite(arr.imag)):
            raise PathError("non-finite vertex")
        seg = np.diff(arr)
        if np.any(seg == 0):
            raise PathError("consecutive vertices must be distinct")
        object.__setattr__(self, "_seg", seg)
        object.__setattr__(self, "_lengths", np.abs(seg))

    @classmethod
    def line(cls, a, b) -> "ComplexPath":
        return cls((complex(a), complex(b)))

    @classmethod
    def from_points(cls, pts) -> "ComplexPath":
        return cls(tuple(complex(p) for p in pts))

    @classmethod
    def polygon(cls, pts) -> "ComplexPath":
        """Closed polyline through pts, returning to the first point."""
        pts = [complex(p) for p in pts]
        return cls(tuple(pts + [pts[0]]))

    @property
    def segments(self) -> np.ndarray:
        """Array of (start, delta) pairs, shape (n_seg, 2)."""
        starts = np.asarray(self.vertices[:-1], dtype=complex)
        return np.stack([starts, self._seg], axis=1)

    @property
    def length(self) -> float:
        return float(np.sum(self._lengths))

    @property
    def start(self) -> complex:
        return self.vertices[0]

    @property
    def end(self) -> complex:
        return self.vertices[-1]

    def reversed(self) -> "ComplexPath":
        return ComplexPath(tuple(reversed(self.vertices)))

    def point(self, s: float) -> complex:
        """Point at arc length s from the start."""
        if s < -1e-12 or s > self.length * (1 + 1e-12):
            raise PathError("arc length outside path")
        acc = 0.0
        n = len(self._seg)
        for i in range(n):
            z0, dz = self.vertices[i], self._seg[i]
            ell = abs(dz)
            if s <= acc + ell or i == n - 1:
                t = min(max((s - acc) / ell, 0.0), 1.0)
                return complex(z0 + dz * t)
            acc += ell
        return self.vertices[-1]

    def min_distance(self, w: complex) -> float:
        """Distance from point w to the polyline."""
        w = complex(w)
        best = np.inf
        for z0, dz in zip(self.vertices[:-1], self._seg):
            t = ((w - z0) / dz).real  # projection in segment units
            t = min(max(t, 0.0), 1.0)
            best = min(best, abs(w - (z0 + t * dz)))
        return float(best)
