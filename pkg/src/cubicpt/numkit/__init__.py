"""Foundation numerics: complex-path ODE integration, adaptive contour
quadrature, compensated accumulation, and the special functions the
asymptotics require."""

from .accum import DDSum, DoubleDouble, KahanSum, log_sum_exp, make_accumulator
from .ode import (NonFiniteCoefficient, OdeError, OdeSolution, PolyCoeff,
                  StepSizeUnderflow, integrate_ode2)
from .paths import ComplexPath, PathError
from .quad import (NonConvergence, NonFiniteIntegrand, QuadratureError,
                   QuadratureResult, quad_contour)
from .special import AiryOverflow, AiryUnderflow, DomainError, airy_ai, gamma

__all__ = [
    "AiryOverflow", "AiryUnderflow", "ComplexPath", "DDSum", "DomainError",
    "DoubleDouble", "KahanSum", "NonConvergence", "NonFiniteCoefficient",
    "NonFiniteIntegrand", "OdeError", "OdeSolution", "PathError", "PolyCoeff",
    "QuadratureError", "QuadratureResult", "StepSizeUnderflow", "airy_ai",
    "gamma", "integrate_ode2", "log_sum_exp", "make_accumulator",
    "quad_contour",
]
