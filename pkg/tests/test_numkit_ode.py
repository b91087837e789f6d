import cmath

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cubicpt.numkit import (ComplexPath, OdeSolution, PolyCoeff,
                            StepSizeUnderflow, integrate_ode2)
from cubicpt.numkit.special import airy_ai, gamma


def test_cosh_closed_form():
    sol = integrate_ode2(lambda z: 1.0 + 0j, ComplexPath.line(0, 1), 1.0, 0.0,
                         1e-12)
    assert abs(sol.values[-1] - np.cosh(1.0)) < 1e-11


def test_cosh_fast_path_matches_generic():
    generic = integrate_ode2(lambda z: 1.0 + 0j, ComplexPath.line(0, 1),
                             1.0, 0.0, 1e-12)
    fast = integrate_ode2(PolyCoeff(c0=1.0), ComplexPath.line(0, 1),
                          1.0, 0.0, 1e-12)
    assert abs(generic.values[-1] - fast.values[-1]) < 1e-12


def test_airy_equation_derived_oracle():
    # w'' = z w from the known Airy data; oracle from the power series
    ai0 = airy_ai(0.0).real
    aip0 = -(3.0 ** (-1.0 / 3.0)) / gamma(1.0 / 3.0)
    sol = integrate_ode2(PolyCoeff(c1=1.0), ComplexPath.line(0, 2), ai0, aip0,
                         1e-12)
    expected = _airy_series(2.0)
    assert abs(sol.values[-1] - expected) < 1e-10
    assert abs(expected - 0.0349241) < 1e-6


def _airy_series(z):
    # independent Maclaurin oracle, summed with exact term recursions
    from math import fsum
    ai0 = 0.3550280538878172
    aip0 = -0.2588194037928068
    f_terms, g_terms = [1.0], [z]
    f, g = 1.0, z
    for k in range(60):
        f = f * z ** 3 / ((3 * k + 2) * (3 * k + 3))
        g = g * z ** 3 / ((3 * k + 3) * (3 * k + 4))
        f_terms.append(f)
        g_terms.append(g)
    return ai0 * fsum(f_terms) + aip0 * fsum(g_terms)


def test_zero_data_gives_zero_solution():
    sol = integrate_ode2(PolyCoeff(c1=1.0), ComplexPath.line(0, 2), 0.0, 0.0,
                         1e-12)
    assert np.all(sol.values == 0)
    assert np.all(sol.derivatives == 0)


@settings(max_examples=12, deadline=None)
@given(st.complex_numbers(min_magnitude=0.1, max_magnitude=10,
                          allow_nan=False, allow_infinity=False))
def test_linearity(a):
    base = integrate_ode2(PolyCoeff(c0=-4.0, c1=0.5j), ComplexPath.line(0, 2),
                          1.0, 0.5j, 1e-11)
    scaled = integrate_ode2(PolyCoeff(c0=-4.0, c1=0.5j), ComplexPath.line(0, 2),
                            a, a * 0.5j, 1e-11)
    ref = a * base.values[-1]
    assert abs(scaled.values[-1] - ref) <= 1e-9 * max(1.0, abs(ref))


def test_complex_path_segments():
    # continuation around a bend reproduces the entire function cosh(z)
    path = ComplexPath.from_points([0, 1 + 0.5j, 2])
    sol = integrate_ode2(PolyCoeff(c0=1.0), path, 1.0, 0.0, 1e-12)
    assert abs(sol.values[-1] - np.cosh(2.0)) < 1e-10


def test_renormalization_keeps_samples_finite():
    # stiff growth over a long range: w'' = 100 w, e-folds ~ 10*30 = 300
    sol = integrate_ode2(PolyCoeff(c0=100.0), ComplexPath.line(0, 70.0),
                         1.0, 10.0, 1e-10, renormalize=True)
    assert np.all(np.isfinite(sol.values))
    total = np.log(np.abs(sol.values[-1])) + sol.logscales[-1]
    assert abs(total - 700.0) < 1e-4 * 700


def test_tolerance_domain_enforced():
    with pytest.raises(ValueError):
        integrate_ode2(PolyCoeff(c0=1.0), ComplexPath.line(0, 1), 1, 0, 1e-2)
    with pytest.raises(ValueError):
        integrate_ode2(PolyCoeff(c0=1.0), ComplexPath.line(0, 1), 1, 0, 1e-15)


def test_nonfinite_coefficient_rejected():
    from cubicpt.numkit import NonFiniteCoefficient

    def coeff(z):
        return complex("nan") if 0.4 < z.real < 0.6 else 1.0 + 0j

    with pytest.raises(NonFiniteCoefficient):
        integrate_ode2(coeff, ComplexPath.line(0, 1), 1.0, 0.0, 1e-10)


def test_achieved_error_estimate_positive():
    sol = integrate_ode2(PolyCoeff(c0=-400.0), ComplexPath.line(0, 3),
                         1.0, 0.0, 1e-11)
    assert sol.achieved_error_estimate > 0
    assert np.isfinite(sol.achieved_error_estimate)
