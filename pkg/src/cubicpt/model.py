"""The semiclassical cubic family V(x, h) = i x^3 + i a h^{4/5} x - 1.

This module owns the potential, its three tracked zeros, the branch
structure of sqrt(V) (cuts along the outward rays through the zeros,
normalized to sqrt(V)(0) = i), and the eigenvalue scaling h = lambda^{-5/6}
between the physical operator -d^2/dx^2 + i x^3 + i a x and its
semiclassical form -h^2 d^2/dx^2 + V.

Square roots and quarter roots of V are evaluated through per-segment
tables of the unwrapped argument of V: the table fixes the 2 pi branch
window, the returned value itself is exact. Continuation along any path
that avoids the cuts is therefore globally consistent.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .numkit import ComplexPath, PolyCoeff, quad_contour

_ROOT0 = (cmath.exp(-1j * cmath.pi / 6), cmath.exp(-5j * cmath.pi / 6), 1j)
_COLLISION_TOL = 1e-8


class ModelError(RuntimeError):
    pass


class RootCollisionError(ModelError):
    """Two tracked potential zeros closer than the labeling tolerance."""


class CutProximityError(ModelError):
    """Evaluation point or path too close to a branch cut."""


@dataclass(frozen=True)
class ModelParams:
    """Coupling and semiclassical parameter of the cubic family.

    h is non-negative real in the standard regime; a complex h with
    positive real part arises transiently when eigenvalue curves are
    continued through the non-real regime (alpha < 0).
    """

    alpha: float
    h: complex = 0.0

    def __post_init__(self):
        h = complex(self.h)
        if h.imag == 0:
            h = h.real
            if h < 0:
                raise ModelError("h must be non-negative")
        elif h.real <= 0:
            raise ModelError("complex h requires positive real part")
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "alpha", float(self.alpha))

    @property
    def beta(self) -> complex:
        """Coefficient of the linear term: alpha * h^{4/5}."""
        if self.h == 0:
            return 0.0
        return self.alpha * self.h ** 0.8


def potential(x: complex, p: ModelParams) -> complex:
    """V(x) = i x^3 + i alpha h^{4/5} x - 1, exactly as written."""
    return 1j * x ** 3 + 1j * p.beta * x - 1.0


def potential_poly(p: ModelParams) -> PolyCoeff:
    """V as a cubic-polynomial coefficient object."""
    return PolyCoeff(c0=-1.0 + 0j, c1=1j * p.beta, c2=0j, c3=1j)


def potential_derivative(x: complex, p: ModelParams) -> complex:
    return 3j * x ** 2 + 1j * p.beta


@dataclass(frozen=True)
class TurningPointSet:
    """The three zeros of V, labeled by continuity from h = 0."""

    x_plus: complex
    x_minus: complex
    x_i: complex

    def as_tuple(self):
        return (self.x_plus, self.x_minus, self.x_i)

    def nearest_label(self, z: complex) -> str:
        d = {"plus": abs(z - self.x_plus), "minus": abs(z - self.x_minus),
             "i": abs(z - self.x_i)}
        return min(d, key=d.get)


def _cubic_roots(beta: complex) -> np.ndarray:
    """Roots of x^3 + beta x + i = 0 (Cardano plus Newton polishing)."""
    roots = np.roots([1.0, 0.0, beta, 1j])
    # two Newton steps on V restore full double accuracy
    for _ in range(2):
        f = roots ** 3 + beta * roots + 1j
        fp = 3.0 * roots ** 2 + beta
        roots = roots - f / fp
    return roots


def turning_points(p: ModelParams) -> TurningPointSet:
    """Track the three zeros from the h = 0 configuration.

    Labels follow nearest-neighbor continuation over a geometric ladder
    of intermediate beta values; a collision error is raised when two
    tracked zeros come within 1e-8.
    """
    labels = list(_ROOT0)
    beta = p.beta
    if beta != 0:
        ladder = [beta * 2.0 ** (k - 15) for k in range(16)]
        for b in ladder:
            roots = _cubic_roots(b)
            taken = []
            new_labels = []
            for ref in labels:
                dists = [abs(r - ref) if i not in taken else math.inf
                         for i, r in enumerate(roots)]
                j = int(np.argmin(dists))
                taken.append(j)
                new_labels.append(complex(roots[j]))
            labels = new_labels
    tps = TurningPointSet(*labels)
    pts = tps.as_tuple()
    for i in range(3):
        for j in range(i + 1, 3):
            if abs(pts[i] - pts[j]) < _COLLISION_TOL:
                raise RootCollisionError(
                    f"turning points within {_COLLISION_TOL} at alpha={p.alpha}, h={p.h}")
    for t in pts:
        if abs(potential(t, p)) > 1e-13 * (1.0 + abs(t) ** 3):
            raise ModelError(f"root residual too large at {t}")
    return tps


@dataclass
class BranchChart:
    """Branch data for sqrt(V): cuts along the outward rays through the
    turning points, base point 0 with sqrt(V)(0) = i."""

    params: ModelParams
    tps: TurningPointSet = None
    base_point: complex = 0j
    base_value: complex = 1j
    _tables: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.tps is None:
            self.tps = turning_points(self.params)

    @property
    def cut_origins(self):
        return self.tps.as_tuple()

    def segment_cut_clearance(self, a: complex, b: complex) -> float:
        """Minimum distance between segment [a, b] and any cut ray."""
        best = math.inf
        for x0 in self.cut_origins:
            d = _segment_ray_distance(a, b, x0, x0 / abs(x0))
            best = min(best, d)
        return best

    def point_cut_distance(self, z: complex) -> float:
        best = math.inf
        for x0 in self.cut_origins:
            best = min(best, _point_ray_distance(z, x0, x0 / abs(x0)))
        return best


_RAY_T_MIN = 1e-9  # the cut is the open ray; its origin (the zero) is fair


def _point_ray_distance(z: complex, origin: complex, direction: complex) -> float:
    t = ((z - origin) * direction.conjugate()).real / abs(direction) ** 2
    t = max(t, _RAY_T_MIN)
    return abs(z - (origin + t * direction))


def _point_segment_distance(w: complex, a: complex, b: complex) -> float:
    ab = b - a
    t = ((w - a) * ab.conjugate()).real / abs(ab) ** 2
    t = min(max(t, 0.0), 1.0)
    return abs(w - (a + t * ab))


def _segment_crosses_ray(a: complex, b: complex, origin: complex,
                         direction: complex) -> bool:
    """Exact transversal intersection of [a, b] with the open cut ray."""
    ab = b - a
    det = ab.real * (-direction.imag) - (-direction.real) * ab.imag
    if abs(det) < 1e-14 * abs(ab) * abs(direction):
        return False  # near-parallel: covered by the distance check
    rhs = origin - a
    s = (rhs.real * (-direction.imag) - (-direction.real) * rhs.imag) / det
    t = (ab.real * rhs.imag - ab.imag * rhs.real) / det
    return -1e-12 <= s <= 1.0 + 1e-12 and t >= _RAY_T_MIN


def _segment_ray_distance(a: complex, b: complex, origin: complex,
                          direction: complex) -> float:
    if _segment_crosses_ray(a, b, origin, direction):
        return 0.0
    d = min(_point_ray_distance(a, origin, direction),
            _point_ray_distance(b, origin, direction))
    # nearest approach of the ray interior to the segment
    for t in (_RAY_T_MIN, 0.5, 1.0, 2.0, 5.0, 20.0):
        d = min(d, _point_segment_distance(origin + t * direction, a, b))
    return d


class _ArgTable:
    """Unwrapped arg V along one segment; exact roots with tracked branch.

    Segment ends lying on a potential zero are clipped: along a straight
    chord into a simple zero the argument tends to a constant, and the
    interpolation clamps to the clipped end value.
    """

    def __init__(self, z0: complex, z1: complex, p: ModelParams):
        self.z0 = z0
        self.dz = z1 - z0
        self.p = p
        scale = 1.0 + max(abs(z0), abs(z1)) ** 3
        t_lo = 1e-9 if abs(potential(z0, p)) < 1e-10 * scale else 0.0
        t_hi = 1.0 - 1e-9 if abs(potential(z1, p)) < 1e-10 * scale else 1.0
        ts = np.linspace(t_lo, t_hi, 65)
        for _ in range(14):
            vals = potential(self.z0 + self.dz * ts, p)
            tiny = np.abs(vals) < 1e-13 * scale
            if np.any(tiny):
                # nudge interior samples off an exact zero crossing
                ts = ts.copy()
                ts[tiny] = np.clip(ts[tiny] + 1e-9, t_lo, t_hi - 1e-12)
                vals = potential(self.z0 + self.dz * ts, p)
            ang = np.angle(vals)
            dtheta = np.diff(np.unwrap(ang))
            # a jump of exactly pi is a zero crossing on the segment and
            # stays under refinement; everything else must resolve
            bad = (np.abs(dtheta) >= 0.5) & (np.abs(np.abs(dtheta) - np.pi) > 0.01)
            if not np.any(bad):
                break
            newts = 0.5 * (ts[:-1][bad] + ts[1:][bad])
            ts = np.sort(np.concatenate([ts, newts]))
        theta = np.unwrap(np.angle(potential(self.z0 + self.dz * ts, p)))
        self.ts = ts
        self.theta = theta

    def anchor(self, t: float, theta_value: float):
        """Shift the table so theta(t) equals the given continued value."""
        self.theta = self.theta + (theta_value - self.theta_at(t))

    def theta_at(self, t):
        return np.interp(t, self.ts, self.theta)

    def root_at(self, t, power: float = 0.5):
        """V(z(t))^power with the tracked branch, t scalar or array."""
        t = np.real(np.asarray(t)).astype(float)
        v = potential(self.z0 + self.dz * t, self.p)
        th_guess = self.theta_at(t)
        k = np.round((th_guess - np.angle(v)) / (2.0 * np.pi))
        th = np.angle(v) + 2.0 * np.pi * k
        return np.abs(v) ** power * np.exp(1j * power * th)

    @property
    def t_start(self) -> float:
        return float(self.ts[0])

    @property
    def theta_end(self) -> float:
        return float(self.theta[-1])


class BranchedRoot:
    """sqrt(V) and V^{1/4} continued along explicit polylines from 0.

    The continuation respects the chart's cuts: straight evaluation paths
    that would cross a cut are re-routed through -0.5i, and paths closer
    to a cut than 1e-12 are rejected.
    """

    DETOUR = -0.5j

    def __init__(self, chart: BranchChart):
        self.chart = chart
        self.p = chart.params
        self._theta0 = math.pi  # arg V(0) = arg(-1), fixing sqrt(V)(0) = i

    def _route(self, a: complex, b: complex):
        if abs(b - a) == 0:
            return None
        if self.chart.segment_cut_clearance(a, b) > 1e-12:
            return [a, b]
        via = self.DETOUR
        if (self.chart.segment_cut_clearance(a, via) > 1e-12
                and self.chart.segment_cut_clearance(via, b) > 1e-12):
            return [a, via, b]
        raise CutProximityError(f"no cut-free route from {a} to {b}")

    def tables_along(self, waypoints, theta_start: float = None):
        """Anchored _ArgTable chain along consecutive waypoints.

        With theta_start None the chain is continued from the base point
        0, pinning the sqrt(V)(0) = i normalization; the first waypoint
        must then be 0. Chain continuity is established at each shared
        vertex (at the clipped parameter when a vertex is a zero of V).
        """
        tables = []
        theta = theta_start
        for a, b in zip(waypoints[:-1], waypoints[1:]):
            tab = _ArgTable(complex(a), complex(b), self.p)
            if theta is None:
                if complex(a) != 0j:
                    raise ModelError("base-anchored chain must start at 0")
                tab.anchor(0.0, self._theta0)
            else:
                tab.anchor(tab.t_start, theta)
            # continuity value for the next segment, taken at this
            # segment's (possibly clipped) end
            theta = float(tab.theta_at(tab.ts[-1]))
            tables.append(tab)
        return tables

    def theta_at_point(self, z: complex) -> float:
        """Unwrapped arg V at z, continued from the base point."""
        z = complex(z)
        if z == 0:
            return self._theta0
        route = self._route(0j, z)
        tables = self.tables_along(route)
        return tables[-1].theta_end

    def _on_pt_fixed_ray(self, z: complex) -> bool:
        """Points of the upper imaginary axis beyond x_i: the one cut ray
        fixed by the PT symmetry x -> -conj(x). The two lateral branch
        limits there are +-real; the PT-symmetric (real) value is taken
        by straight continuation through the simple zero."""
        x_i = self.chart.tps.x_i
        return (abs(z.real) <= 1e-12 and abs(x_i.real) <= 1e-12
                and z.imag > x_i.imag + 1e-12)

    def _theta_through_axis(self, z: complex) -> float:
        tab = _ArgTable(0j, z, self.p)
        tab.anchor(0.0, self._theta0)
        return tab.theta_end

    def sqrt_at(self, z: complex) -> complex:
        z = complex(z)
        if self._on_pt_fixed_ray(z):
            th = self._theta_through_axis(z)
        else:
            if self.chart.point_cut_distance(z) <= 1e-12:
                raise CutProximityError(f"{z} is within 1e-12 of a branch cut")
            th = self.theta_at_point(z)
        v = potential(z, self.p)
        return cmath.sqrt(abs(v)) * cmath.exp(0.5j * th)

    def quarter_at(self, z: complex) -> complex:
        z = complex(z)
        if self._on_pt_fixed_ray(z):
            th = self._theta_through_axis(z)
        else:
            if self.chart.point_cut_distance(z) <= 1e-12:
                raise CutProximityError(f"{z} is within 1e-12 of a branch cut")
            th = self.theta_at_point(z)
        v = potential(z, self.p)
        return abs(v) ** 0.25 * cmath.exp(0.25j * th)


def sqrt_V(x: complex, p: ModelParams, chart: BranchChart = None) -> complex:
    """The branch of sqrt(V) holomorphic off the cuts with value i at 0."""
    chart = chart or BranchChart(p)
    return BranchedRoot(chart).sqrt_at(x)


def action_integral(p: ModelParams, z_from: complex, z_to: complex, tol: float = 1e-12,
                    *, chart: BranchChart = None, sqrt_from: bool = False,
                    sqrt_to: bool = False, waypoints=None) -> complex:
    """int sqrt(V) dz from z_from to z_to with branch-consistent root.

    Endpoints at turning points must be flagged (sqrt_from / sqrt_to) so
    the quadrature grades out the square-root vanishing. Waypoints, when
    given, fix the integration polyline; otherwise the straight segment
    (or the standard detour) is used. The value only depends on the
    homotopy class, and all routes used here avoid the cuts.
    """
    chart = chart or BranchChart(p)
    br = BranchedRoot(chart)
    if waypoints is None:
        pts = br._route(complex(z_from), complex(z_to))
    else:
        pts = [complex(w) for w in waypoints]
    # anchor the chain by continuing the branch from the base point to a
    # point just inside the first segment (the endpoint itself may be a
    # zero of V, where arg V is undefined)
    first = _ArgTable(pts[0], pts[1], p)
    t_a = max(first.t_start, 1e-6)
    z_a = pts[0] + (pts[1] - pts[0]) * t_a
    first.anchor(t_a, br.theta_at_point(z_a))
    tables = [first]
    theta = float(first.theta_at(first.ts[-1]))
    if len(pts) > 2:
        for tab in br.tables_along(pts[1:], theta):
            tables.append(tab)

    total = 0j
    nseg = len(tables)
    for i, tab in enumerate(tables):
        def f(t, tab=tab):
            return tab.root_at(t) * tab.dz
        res = quad_contour(f, ComplexPath.line(0.0, 1.0), tol,
                           sqrt_start=(sqrt_from and i == 0),
                           sqrt_end=(sqrt_to and i == nseg - 1), vectorized=True)
        total += res.value
    return total


@dataclass(frozen=True)
class ScaleMap:
    """Eigenvalue scaling lambda <-> h = lambda^{-5/6} and the matching
    coordinate change x_physical = h^{-2/5} x_semiclassical."""

    lam: complex
    h: complex

    def to_physical(self, x_semiclassical: complex) -> complex:
        return self.h ** (-0.4) * x_semiclassical

    def to_semiclassical(self, x_physical: complex) -> complex:
        return self.h ** 0.4 * x_physical


def scale(lam: complex) -> ScaleMap:
    lam = complex(lam)
    if lam.real <= 0:
        raise ModelError("scaling requires Re lambda > 0")
    if lam.imag == 0:
        h = lam.real ** (-5.0 / 6.0)
    else:
        h = lam ** (-5.0 / 6.0)
    return ScaleMap(lam=lam, h=h)


def unscale(s: ScaleMap) -> complex:
    return s.h ** (-1.2)
