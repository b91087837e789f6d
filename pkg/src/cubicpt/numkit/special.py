"""Gamma and Airy Ai, the two special functions the asymptotics need.

gamma: Lanczos approximation (g = 607/128, 15 terms), positive real
arguments only.

airy_ai: three regimes stitched by |z| and sector.
  * |z| <= 4.0       Maclaurin series in double precision.
  * 4.0 < |z| <= R   Maclaurin series accumulated in double-double; the
                     series cancels to ~e^{2 xi} with xi = (2/3)|z|^{3/2},
                     which exceeds double precision well before the
                     asymptotic expansion becomes usable.
  * |z| > R          asymptotic expansion; arguments with |arg z| > 2pi/3
                     are mapped into the reliable sector with the
                     rotation identity Ai(z) = -w Ai(wz) - w^2 Ai(w^2 z),
                     w = exp(2i pi/3), instead of evaluating the decaying
                     series near its anti-Stokes directions.
  R is 7.5 in the recessive sector |arg z| < pi/3 (the asymptotic series
  is already at its floor there) and 9.0 elsewhere.
"""

from __future__ import annotations

import cmath
import math
import warnings

from .accum import DoubleDouble

__all__ = ["gamma", "airy_ai", "AiryUnderflow", "DomainError"]


class DomainError(ValueError):
    pass


class AiryUnderflow(UserWarning):
    """Ai underflowed to zero for a large positive argument."""


class AiryOverflow(UserWarning):
    """Ai exceeded double range in a growth sector."""


_LANCZOS_G = 607.0 / 128.0
_LANCZOS_C = [
    0.99999999999999709182,
    57.156235665862923517,
    -59.597960355475491248,
    14.136097974741747174,
    -0.49191381609762019978,
    0.33994649984811888699e-4,
    0.46523628927048575665e-4,
    -0.98374475304879564677e-4,
    0.15808870322491248884e-3,
    -0.21026444172410488319e-3,
    0.21743961811521264320e-3,
    -0.16431810653676389022e-3,
    0.84418223983852743293e-4,
    -0.26190838401581408670e-4,
    0.36899182659531622704e-5,
]
_SQRT_2PI = math.sqrt(2.0 * math.pi)


def gamma(x: float) -> float:
    """Gamma function for real x in (0, 170), relative error <= 1e-13."""
    x = float(x)
    if not (0.0 < x < 170.0):
        raise DomainError(f"gamma requires x in (0, 170), got {x}")
    acc = _LANCZOS_C[0]
    for k in range(1, len(_LANCZOS_C)):
        acc += _LANCZOS_C[k] / (x - 1.0 + k)
    t = x + _LANCZOS_G - 0.5
    # split the power so intermediates stay in range up to x ~ 170
    u = t ** (0.5 * (x - 0.5))
    return _SQRT_2PI * acc * u * math.exp(-t) * u


# Ai(0) = 3^{-2/3}/Gamma(2/3) and -Ai'(0) = 3^{-1/3}/Gamma(1/3)
_AI0 = 3.0 ** (-2.0 / 3.0) / gamma(2.0 / 3.0)
_AIP0 = 3.0 ** (-1.0 / 3.0) / gamma(1.0 / 3.0)
# same constants with their second double word: the f and g sums cancel to
# ~e^{2 xi} of their size, so the prefactor error budget is double-double
_AI0_DD = DoubleDouble(0.3550280538878172, 2.05233632436212e-17)
_AIP0_DD = DoubleDouble(0.2588194037928068, -2.522243111610832e-17)

_OMEGA = cmath.exp(2j * cmath.pi / 3.0)


def _ai_series_double(z: complex) -> complex:
    z3 = z * z * z
    f_term = 1.0 + 0j
    g_term = z
    f_sum = f_term
    g_sum = g_term
    for k in range(200):
        f_term = f_term * z3 / ((3 * k + 2) * (3 * k + 3))
        g_term = g_term * z3 / ((3 * k + 3) * (3 * k + 4))
        f_sum += f_term
        g_sum += g_term
        if abs(f_term) < 1e-18 * abs(f_sum) and abs(g_term) < 1e-18 * (abs(g_sum) + 1e-300):
            break
    return _AI0 * f_sum - _AIP0 * g_sum


def _dd_cmul(ar, ai, br, bi):
    """Complex product with all four components double-double."""
    rr = ar * br - ai * bi
    ri = ar * bi + ai * br
    return rr, ri


def _ai_series_dd(z: complex) -> complex:
    # cube z in double-double: the series cancellation amplifies any
    # rounding of z^3 by ~e^{2 xi}
    zr, zi = z.real, z.imag
    z2_re = DoubleDouble(zr) * zr - DoubleDouble(zi) * zi
    z2_im = DoubleDouble(zr) * zi * 2.0
    z3_re = z2_re * zr - z2_im * zi
    z3_im = z2_re * zi + z2_im * zr
    f_re, f_im = DoubleDouble(1.0), DoubleDouble(0.0)
    g_re, g_im = DoubleDouble(zr), DoubleDouble(zi)
    fs_re, fs_im = DoubleDouble(1.0), DoubleDouble(0.0)
    gs_re, gs_im = DoubleDouble(zr), DoubleDouble(zi)
    for k in range(400):
        f_re, f_im = _dd_cmul(f_re, f_im, z3_re, z3_im)
        df = (3 * k + 2) * (3 * k + 3)
        f_re, f_im = f_re / df, f_im / df
        g_re, g_im = _dd_cmul(g_re, g_im, z3_re, z3_im)
        dg = (3 * k + 3) * (3 * k + 4)
        g_re, g_im = g_re / dg, g_im / dg
        fs_re, fs_im = fs_re + f_re, fs_im + f_im
        gs_re, gs_im = gs_re + g_re, gs_im + g_im
        t_mag = max(f_re.abs(), f_im.abs(), g_re.abs(), g_im.abs())
        s_mag = max(fs_re.abs(), fs_im.abs(), gs_re.abs(), gs_im.abs(), 1e-300)
        if t_mag < 1e-34 * s_mag:
            break
    out_re = _AI0_DD * fs_re - _AIP0_DD * gs_re
    out_im = _AI0_DD * fs_im - _AIP0_DD * gs_im
    return complex(float(out_re), float(out_im))


def _ai_asymptotic(z: complex) -> complex:
    """Recessive expansion, reliable for |arg z| <= 2pi/3 and |z| >= ~7."""
    sqrt_z = cmath.sqrt(z)  # principal: |arg z| < pi keeps this unambiguous
    xi = (2.0 / 3.0) * z * sqrt_z
    if xi.real > 745.0:
        warnings.warn("Ai underflow for large positive argument",
                      AiryUnderflow, stacklevel=3)
        return 0.0j
    if xi.real < -700.0:
        warnings.warn("Ai overflow in growth sector", AiryOverflow, stacklevel=3)
        return complex(math.inf, math.inf)
    term = 1.0 + 0j
    acc = term
    prev = abs(term)
    k = 0
    while True:
        k += 1
        term = term * (-(3 * k - 0.5) * (3 * k - 1.5) * (3 * k - 2.5)
                       / (54.0 * k * (k - 0.5))) / xi
        mag = abs(term)
        if mag >= prev or mag < 1e-18 * abs(acc):
            break
        acc += term
        prev = mag
        if k > 80:
            break
    pref = cmath.exp(-xi) / (2.0 * math.sqrt(math.pi) * z ** 0.25)
    return pref * acc


def airy_ai(z: complex) -> complex:
    """Airy function Ai of a complex argument, |z| <= 1e4.

    Relative error <= 1e-10 for |z| <= 10 and <= 1e-8 beyond.
    """
    z = complex(z)
    az = abs(z)
    if az > 1e4:
        raise DomainError("airy_ai limited to |z| <= 1e4")
    if az <= 4.0:
        return _ai_series_double(z)
    in_recessive = abs(cmath.phase(z)) < math.pi / 3.0
    radius = 7.5 if in_recessive else 9.0
    if az <= radius:
        return _ai_series_dd(z)
    if abs(cmath.phase(z)) <= 2.0 * math.pi / 3.0:
        return _ai_asymptotic(z)
    # rotate out of the sector where the decaying expansion is unusable
    return -_OMEGA * airy_ai(_OMEGA * z) - _OMEGA ** 2 * airy_ai(_OMEGA ** 2 * z)
