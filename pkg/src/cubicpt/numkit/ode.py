"""Second-order linear complex ODEs along polyline paths.

integrate_ode2 propagates w'' = coeff(z) w together with its derivative,
using an adaptive Dormand-Prince 8(5,3) pair. Two execution paths share
the tableau: a generic one for arbitrary coefficient callables, and a
compiled one (fastode) for cubic-polynomial coefficients, which is what
every production integration in this package uses.

Solutions that traverse hundreds of e-folds are kept representable by
periodic renormalization: each stored sample carries a real log scale,
and the true solution is value * exp(logscale).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _dop853_tableau as tb
from .paths import ComplexPath


class OdeError(RuntimeError):
    pass


class StepSizeUnderflow(OdeError):
    """Step control collapsed, typically a coefficient singularity."""


class NonFiniteCoefficient(OdeError):
    pass


@dataclass
class PolyCoeff:
    """Cubic-polynomial ODE coefficient scale*(c0 + c1 z + c2 z^2 + c3 z^3).

    Recognized by integrate_ode2 as eligible for the compiled kernel.
    """

    c0: complex = 0j
    c1: complex = 0j
    c2: complex = 0j
    c3: complex = 0j
    scale: complex = 1.0 + 0j

    def __call__(self, z: complex) -> complex:
        return self.scale * (self.c0 + z * (self.c1 + z * (self.c2 + z * self.c3)))


@dataclass
class OdeSolution:
    """Sampled solution along a path.

    values/derivatives are scaled samples; the true solution at sample i
    is values[i] * exp(logscales[i]) (same factor for derivatives).
    """

    path: ComplexPath
    positions: np.ndarray
    values: np.ndarray
    derivatives: np.ndarray
    logscales: np.ndarray
    tolerance: float
    achieved_error_estimate: float
    flagged: bool = False
    # optional co-integrated quadratures, in end-scale units:
    # true integral = value * exp(2 * logscale_end)
    pairing_integral: complex | None = None
    abs2_integral: float | None = None
    logscale_end: float = 0.0
    nfev: int = 0

    def __post_init__(self):
        n = len(self.positions)
        if not (len(self.values) == len(self.derivatives) == len(self.logscales) == n):
            raise OdeError("inconsistent sample arrays")
        if not (np.all(np.isfinite(self.values)) and np.all(np.isfinite(self.derivatives))):
            raise OdeError("non-finite sample")
        self.flagged = bool(self.flagged or
                            self.achieved_error_estimate > 10.0 * self.tolerance)

    @property
    def end_state(self):
        """(position, value, derivative, logscale) at the path end."""
        return (self.positions[-1], self.values[-1],
                self.derivatives[-1], self.logscales[-1])

    def value_at_start(self) -> complex:
        return self.values[0] * np.exp(self.logscales[0] - self.logscales.max())


_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 10.0
_RENORM_LIMIT = 1e100


def _segment_step_py(f, t, y, h):
    """One DOP853 step for complex state vector y; returns y_new, err5, err3."""
    k = np.empty((13, y.size), dtype=complex)
    k[0] = f(t, y)
    for s in range(1, 12):
        dy = (k[:s].T @ tb.A[s, :s]) * h
        k[s] = f(t + tb.C[s] * h, y + dy)
    y_new = y + h * (k[:12].T @ tb.B)
    k[12] = f(t + h, y_new)
    err5 = h * (k.T @ tb.E5)
    err3 = h * (k.T @ tb.E3)
    return y_new, err5, err3, k[12]


def _integrate_segment_py(coeff, z0, dz, w, u, rtol, sink, sigma, renorm, err_acc):
    """Advance (w, u=dw/dtau) across one segment; returns state and stats."""
    dz2 = dz * dz

    def f(t, y):
        q = coeff(z0 + dz * t)
        if not (math.isfinite(q.real) and math.isfinite(q.imag)):
            raise NonFiniteCoefficient(f"coefficient non-finite at {z0 + dz * t}")
        return np.array([y[1], dz2 * q * y[0]], dtype=complex)

    t = 0.0
    y = np.array([w, u], dtype=complex)
    q0 = abs(coeff(z0)) * abs(dz2)
    h = min(1.0, 0.05 / (math.sqrt(q0) + 1.0))
    nfev = 0
    while t < 1.0:
        h = min(h, 1.0 - t)
        if h < 1e-13:
            raise StepSizeUnderflow(f"step underflow at z = {z0 + dz * t}")
        y_new, err5, err3, _ = _segment_step_py(f, t, y, h)
        nfev += 13
        scale_f = np.maximum(np.abs(y), np.abs(y_new)) * rtol + rtol * np.max(np.abs(y))
        e5 = np.linalg.norm(err5 / scale_f) ** 2
        e3 = np.linalg.norm(err3 / scale_f) ** 2
        if e5 == 0.0:
            err_norm = 0.0
        else:
            err_norm = abs(h) * e5 / math.sqrt((e5 + 0.01 * e3) * y.size)
        if err_norm < 1.0:
            t += h
            y = y_new
            err_acc[0] += err_norm * rtol
            if renorm:
                m = max(abs(y[0]), abs(y[1]))
                if m > _RENORM_LIMIT:
                    y /= m
                    sigma += math.log(m)
            sink.append((z0 + dz * t, y[0], y[1] / dz, sigma))
            factor = _MAX_FACTOR if err_norm == 0 else min(
                _MAX_FACTOR, _SAFETY * err_norm ** (-1.0 / 8.0))
            h *= factor
        else:
            h *= max(_MIN_FACTOR, _SAFETY * err_norm ** (-1.0 / 8.0))
    return y[0], y[1], sigma, nfev


def integrate_ode2(coeff, path: ComplexPath, init_value: complex,
                   init_derivative: complex, tol: float, *,
                   renormalize: bool = False) -> OdeSolution:
    """Solve w'' = coeff(z) w along the path with adaptive stepping.

    init_derivative is dw/dz at the path start. Set renormalize=True for
    solutions expected to traverse large dynamic range; samples then carry
    per-sample log scales.
    """
    if not (1e-14 <= tol <= 1e-3):
        raise ValueError("tol must lie in [1e-14, 1e-3]")
    if isinstance(coeff, PolyCoeff):
        from .fastode import integrate_poly_path
        return integrate_poly_path(coeff, path, init_value, init_derivative,
                                   tol, renormalize=renormalize)

    sink = [(complex(path.start), complex(init_value), complex(init_derivative), 0.0)]
    err_acc = [0.0]
    w = complex(init_value)
    sigma = 0.0
    nfev = 0
    for z0, dzc in path.segments:
        u = complex(sink[-1][2]) * dzc  # dw/dtau for this segment
        w, u, sigma, ne = _integrate_segment_py(
            coeff, complex(z0), complex(dzc), w, u, tol, sink, sigma, renormalize, err_acc)
        nfev += ne
        sink[-1] = (complex(z0 + dzc), w, u / dzc, sigma)
    arr = np.array([(p, v, d) for p, v, d, _ in sink], dtype=complex)
    sig = np.array([s for _, _, _, s in sink], dtype=float)
    return OdeSolution(
        path=path, positions=arr[:, 0], values=arr[:, 1], derivatives=arr[:, 2],
        logscales=sig, tolerance=tol, achieved_error_estimate=err_acc[0],
        logscale_end=sigma, nfev=nfev)
