"""Action integrals, closed-form constants, quantization, and asymptotic
predictors.

The bounded-line action A(alpha, h) = int sqrt(V) dz between the two low
turning points is purely imaginary; Im A drives the quantization rule
Im A = pi (n + 1/2) h whose solution h_n seeds the eigenvalue solver.
The constants

    C = int_0^1 sqrt(1 - t^3) dt = 2 sqrt(3) pi^{3/2} / (15 G(2/3) G(5/6))
    r = (1/2) int_0^1 t / sqrt(1 - t^3) dt = G(2/3) G(5/6) / (2 sqrt(pi))
    c = (5/2)^{1/5} pi^{-3/5} (G(2/3) G(5/6))^{6/5}

(with G the Gamma function) are each computed along two independent
routes and cross-validated. At alpha = 0 the action is h-independent and
equals i sqrt(3) C, giving the closed-form ladder h_n = sqrt(3) C / (pi
(n + 1/2)).

Norm and instability predictors are log-space first: the predicted
squared norm grows like exp(C/h), which leaves double range near
quantization number ~400.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import BranchChart, ModelParams, action_integral, turning_points
from .numkit import ComplexPath, gamma, quad_contour

GROWTH_RATE = math.pi / math.sqrt(3.0)

# quantization ladder index vs the 1-based spectral index: the ground
# state is the n = 0 rung, so spectral index n maps to rung n - 1
DEFAULT_BS_OFFSET = -1


class SemiclassicsError(RuntimeError):
    pass


@dataclass(frozen=True)
class ActionConstants:
    C: float
    r: float
    c: float
    growth_rate: float
    C_quadrature: float
    r_quadrature: float
    c_log_route: float

    @property
    def norm_prefactor(self) -> float:
        """sqrt(2)/2 * Gamma(1/4), the squared-norm prefactor constant."""
        return 0.5 * math.sqrt(2.0) * gamma(0.25)


def _c_closed_form() -> float:
    return ((5.0 / 2.0) ** 0.2 * math.pi ** (-0.6)
            * gamma(2.0 / 3.0) ** 1.2 * gamma(5.0 / 6.0) ** 1.2)


def _c_log_route() -> float:
    logs = (0.2 * math.log(2.5) - 0.6 * math.log(math.pi)
            + 1.2 * math.log(gamma(2.0 / 3.0)) + 1.2 * math.log(gamma(5.0 / 6.0)))
    return math.exp(logs)


def constants(tol: float = 1e-13) -> ActionConstants:
    """Quadrature and Gamma closed forms, cross-validated to 1e-12."""
    C_gamma = (2.0 * math.sqrt(3.0) * math.pi ** 1.5
               / (15.0 * gamma(2.0 / 3.0) * gamma(5.0 / 6.0)))
    r_gamma = gamma(2.0 / 3.0) * gamma(5.0 / 6.0) / (2.0 * math.sqrt(math.pi))
    C_quad = quad_contour(lambda t: np.sqrt(1.0 - t ** 3),
                          ComplexPath.line(0.0, 1.0), tol,
                          sqrt_end=True, vectorized=True).value.real
    r_quad = 0.5 * quad_contour(lambda t: t / np.sqrt(1.0 - t ** 3),
                                ComplexPath.line(0.0, 1.0), tol,
                                sqrt_end=True, vectorized=True).value.real
    cc = _c_closed_form()
    out = ActionConstants(C=C_gamma, r=r_gamma, c=cc, growth_rate=GROWTH_RATE,
                          C_quadrature=C_quad, r_quadrature=r_quad,
                          c_log_route=_c_log_route())
    if abs(C_quad - C_gamma) > 1e-12 or abs(r_quad - r_gamma) > 1e-12:
        raise SemiclassicsError("constant routes disagree beyond 1e-12")
    return out


_CONSTANTS_CACHE = None


def cached_constants() -> ActionConstants:
    global _CONSTANTS_CACHE
    if _CONSTANTS_CACHE is None:
        _CONSTANTS_CACHE = constants()
    return _CONSTANTS_CACHE


def action_ellf(p: ModelParams, tol: float = 1e-12, *,
                chart: BranchChart = None) -> complex:
    """int sqrt(V) dz between the two low turning points.

    Integrated along the straight chord (homotopic to the bounded Stokes
    line inside the cut plane) with square-root grading at both ends.
    """
    chart = chart or BranchChart(p)
    tps = chart.tps
    act = action_integral(p, tps.x_minus, tps.x_plus, tol, chart=chart,
                          sqrt_from=True, sqrt_to=True)
    if isinstance(p.h, float) and abs(act.real) > 1e-10:
        raise SemiclassicsError(f"bounded-line action not imaginary: {act}")
    if isinstance(p.h, float) and act.imag <= 0:
        raise SemiclassicsError(f"bounded-line action has wrong sign: {act}")
    return act


@dataclass(frozen=True)
class BsSolution:
    n: int
    alpha: float
    h: float
    lambda_bs: float
    residual: float


def bs_solve(n: int, alpha: float, tol: float = 1e-12,
             quad_tol: float = 1e-13) -> BsSolution:
    """Solve Im A(alpha, h) = pi (n + 1/2) h for h.

    n is the quantization-ladder index (n >= 0); spectral indices are
    shifted by DEFAULT_BS_OFFSET before seeding. At alpha = 0 the action
    is h-independent and the rule is closed-form.
    """
    if n < 0:
        raise SemiclassicsError("quantization index must be >= 0")
    k = constants_im_target(n)
    cst = cached_constants()
    h0 = math.sqrt(3.0) * cst.C / k
    if alpha == 0.0:
        h = h0
        residual = _bs_residual(h, alpha, k, quad_tol)
        return BsSolution(n=n, alpha=alpha, h=h, lambda_bs=h ** (-1.2),
                          residual=residual)
    h = h0
    for _ in range(40):
        g = _bs_residual(h, alpha, k, quad_tol)
        if abs(g) <= tol:
            break
        dh = 1e-6 * h
        gp = (_bs_residual(h + dh, alpha, k, quad_tol)
              - _bs_residual(h - dh, alpha, k, quad_tol)) / (2.0 * dh)
        if gp == 0:
            raise SemiclassicsError("quantization Newton stalled (flat residual)")
        step = -g / gp
        max_step = 0.5 * h
        if abs(step) > max_step:
            step = math.copysign(max_step, step)
        h += step
        if h <= 0:
            raise SemiclassicsError("quantization Newton left h > 0")
    else:
        raise SemiclassicsError(
            f"no quantization convergence for n={n}, alpha={alpha}: residual {g:.3e}")
    residual = _bs_residual(h, alpha, k, quad_tol)
    return BsSolution(n=n, alpha=alpha, h=h, lambda_bs=h ** (-1.2),
                      residual=residual)


def constants_im_target(n: int) -> float:
    return math.pi * (n + 0.5)


def _bs_residual(h: float, alpha: float, k: float, quad_tol: float) -> float:
    act = action_ellf(ModelParams(alpha, h), quad_tol)
    return act.imag - k * h


def bs_two_term(n: int, alpha: float) -> float:
    """Two-term expansion of the quantization root h_n."""
    cst = cached_constants()
    k = math.pi * (n + 0.5)
    return (math.sqrt(3.0) * cst.C / k
            - 3.0 ** 0.9 * alpha * cst.r * cst.C ** 0.8 / (math.pi ** 1.8
              * (n + 0.5) ** 1.8))


@dataclass(frozen=True)
class NormPrediction:
    log_value: float
    prefactor: float

    @property
    def value(self) -> float:
        if self.log_value > 700.0:
            return math.inf
        return math.exp(self.log_value)


def predict_norm_sq(n: int, alpha: float, h: float) -> NormPrediction:
    """Predicted squared norm of the anchored kernel solution:
    (sqrt(2)/2) Gamma(1/4) h^{1/4} exp(C/h + alpha r h^{-1/5})."""
    if not (0.0 < h):
        raise SemiclassicsError("h must be positive")
    cst = cached_constants()
    pref = cst.norm_prefactor
    log_value = (math.log(pref) + 0.25 * math.log(h) + cst.C / h
                 + alpha * cst.r * h ** (-0.2))
    return NormPrediction(log_value=log_value, prefactor=pref)


def predict_log_kappa(n: int, alpha: float) -> float:
    """Growth-law prediction of log kappa_n, defined up to an additive
    alpha-dependent constant: (pi/sqrt(3)) n - (1/4) log n + alpha c n^{1/5}."""
    if n < 1:
        raise SemiclassicsError("n must be >= 1")
    cst = cached_constants()
    return GROWTH_RATE * n - 0.25 * math.log(n) + alpha * cst.c * n ** 0.2
