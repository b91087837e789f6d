"""Adaptive Gauss-Kronrod quadrature along complex polylines.

A 7-15 nested pair drives recursive bisection with a worst-panel-first
heap. Endpoint square-root singularities, the generic behavior of action
integrands at simple potential zeros, are removed by the substitution
t = s^2 on the flagged end before any panel is formed. Panel results are
combined with compensated summation.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

from .accum import KahanSum
from .paths import ComplexPath

# Gauss-Kronrod 7-15 nodes and weights on [-1, 1] (QUADPACK values).
_XGK = np.array([
    0.991455371120813, 0.949107912342759, 0.864864423359769,
    0.741531185599394, 0.586087235467691, 0.405845151377397,
    0.207784955007898, 0.0,
])
_WGK = np.array([
    0.022935322010529, 0.063092092629979, 0.104790010322250,
    0.140653259715525, 0.169004726639267, 0.190350578064785,
    0.204432940075298, 0.209482141084728,
])
_WG = np.array([
    0.129484966168870, 0.279705391489277, 0.381830050505119,
    0.417959183673469,
])

_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])  # 15 ascending nodes
_W_K = np.concatenate([_WGK[:-1], _WGK[::-1]])
_W_G = np.zeros(15)
_W_G[1:-1:2] = np.concatenate([_WG[:-1], _WG[::-1]])


class QuadratureError(RuntimeError):
    pass


class NonFiniteIntegrand(QuadratureError):
    pass


class NonConvergence(QuadratureError):
    pass


@dataclass
class QuadratureResult:
    value: complex
    error_estimate: float
    evaluations: int

    def __post_init__(self):
        if not np.isfinite(self.error_estimate):
            raise QuadratureError("non-finite error estimate")
        if self.evaluations <= 0:
            raise QuadratureError("no evaluations recorded")


class _Eval:
    """Wraps the user integrand; counts calls and tracks max |f|."""

    def __init__(self, f, vectorized: bool):
        self.f = f
        self.vectorized = vectorized
        self.count = 0
        self.max_abs = 0.0

    def __call__(self, z: np.ndarray) -> np.ndarray:
        if self.vectorized:
            vals = np.asarray(self.f(z), dtype=complex)
        else:
            vals = np.array([self.f(zz) for zz in z], dtype=complex)
        self.count += len(z)
        if not np.all(np.isfinite(vals)):
            raise NonFiniteIntegrand("integrand returned a non-finite value")
        m = float(np.max(np.abs(vals)))
        if m > self.max_abs:
            self.max_abs = m
        return vals


def _panel(g, a: float, b: float):
    """One GK15 evaluation of integrand g over [a, b]."""
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    vals = g(mid + half * _NODES)
    ik = half * np.sum(vals * _W_K)
    ig = half * np.sum(vals * _W_G)
    return complex(ik), abs(ik - ig)


def _segment_integrands(path: ComplexPath, fev, sqrt_start: bool, sqrt_end: bool):
    """Yield smooth [0,1]-parameterized integrands, one per segment."""
    segs = [(complex(z0), complex(dz)) for z0, dz in path.segments]
    if len(segs) == 1 and sqrt_start and sqrt_end:
        z0, dz = segs[0]
        segs = [(z0, dz / 2), (z0 + dz / 2, dz / 2)]
    n = len(segs)
    out = []
    for i, (z0, dz) in enumerate(segs):
        if i == 0 and sqrt_start:
            def g(s, z0=z0, dz=dz):
                s = np.asarray(s)
                return fev(z0 + dz * s * s) * (2.0 * s) * dz
        elif i == n - 1 and sqrt_end:
            def g(u, z0=z0, dz=dz):
                u = np.asarray(u)
                return fev(z0 + dz * (1.0 - (1.0 - u) ** 2)) * (2.0 * (1.0 - u)) * dz
        else:
            def g(t, z0=z0, dz=dz):
                return fev(z0 + dz * np.asarray(t)) * dz
        out.append(g)
    return out


def quad_contour(f, path: ComplexPath, tol: float, *, sqrt_start: bool = False,
                 sqrt_end: bool = False, vectorized: bool = False,
                 max_panels: int = 8192) -> QuadratureResult:
    """Integrate f along the polyline to relative tolerance tol.

    The absolute floor is 1e-15 * path length * max sampled |f|, so a
    zero integral of an oscillatory integrand converges.
    """
    if not (0 < tol < 1):
        raise ValueError("tol must be in (0, 1)")
    fev = _Eval(f, vectorized)
    heap = []  # (-err, seq, a, b, value, g_index)
    seq = 0
    running_value = 0j
    running_err = 0.0
    integrands = _segment_integrands(path, fev, sqrt_start, sqrt_end)
    for gi, g in enumerate(integrands):
        val, err = _panel(g, 0.0, 1.0)
        heapq.heappush(heap, (-err, seq, 0.0, 1.0, val, gi))
        running_value += val
        running_err += err
        seq += 1

    while True:
        tol_abs = 1e-15 * path.length * max(fev.max_abs, 1e-300)
        if running_err <= max(tol * abs(running_value), tol_abs):
            break
        if len(heap) >= max_panels:
            raise NonConvergence(
                f"quadrature did not converge within {max_panels} panels "
                f"(error {running_err:.3e}, value {abs(running_value):.3e})")
        negerr, _, a, b, val_p, gi = heapq.heappop(heap)
        running_value -= val_p
        running_err += negerr
        m = 0.5 * (a + b)
        if m == a or m == b:
            raise NonConvergence("panel collapsed to machine width")
        g = integrands[gi]
        for lo, hi in ((a, m), (m, b)):
            val, err = _panel(g, lo, hi)
            heapq.heappush(heap, (-err, seq, lo, hi, val, gi))
            running_value += val
            running_err += err
            seq += 1

    # clean compensated pass over the final panel decomposition
    acc = KahanSum()
    err_sum = 0.0
    for negerr, _, _, _, val, _ in heap:
        acc.add(val)
        err_sum += -negerr
    return QuadratureResult(acc.value, err_sum, fev.count)


def gauss_legendre_nodes(n: int):
    """Nodes and weights on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w
