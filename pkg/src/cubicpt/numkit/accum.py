"""Compensated and double-double accumulation.

All quadrature sums in this package run through one of these accumulators:
the denominator integrals downstream cancel to ~1e-10 of the summand
magnitude, so plain left-to-right summation is not acceptable.
"""

from __future__ import annotations

import math


class KahanSum:
    """Kahan-Neumaier compensated summation for complex values."""

    __slots__ = ("_sr", "_si", "_cr", "_ci")

    def __init__(self):
        self._sr = 0.0
        self._si = 0.0
        self._cr = 0.0
        self._ci = 0.0

    def add(self, z):
        z = complex(z)
        for part, s_attr, c_attr in ((z.real, "_sr", "_cr"), (z.imag, "_si", "_ci")):
            s = getattr(self, s_attr)
            t = s + part
            if abs(s) >= abs(part):
                c = (s - t) + part
            else:
                c = (part - t) + s
            setattr(self, s_attr, t)
            setattr(self, c_attr, getattr(self, c_attr) + c)

    @property
    def value(self) -> complex:
        return complex(self._sr + self._cr, self._si + self._ci)


def _two_sum(a: float, b: float):
    s = a + b
    bb = s - a
    err = (a - (s - bb)) + (b - bb)
    return s, err


def _split(a: float):
    t = 134217729.0 * a  # 2**27 + 1
    hi = t - (t - a)
    return hi, a - hi


def _two_prod(a: float, b: float):
    p = a * b
    ah, al = _split(a)
    bh, bl = _split(b)
    err = ((ah * bh - p) + ah * bl + al * bh) + al * bl
    return p, err


class DoubleDouble:
    """Unevaluated sum of two doubles, ~32 significant digits.

    Supports just the operations the Airy series and the optional
    high-precision accumulator need: +, -, * and division by a double.
    """

    __slots__ = ("hi", "lo")

    def __init__(self, hi: float = 0.0, lo: float = 0.0):
        self.hi = float(hi)
        self.lo = float(lo)

    @classmethod
    def from_float(cls, x: float) -> "DoubleDouble":
        return cls(float(x), 0.0)

    def __float__(self) -> float:
        return self.hi + self.lo

    def __repr__(self):
        return f"DoubleDouble({self.hi!r}, {self.lo!r})"

    def __add__(self, other):
        if not isinstance(other, DoubleDouble):
            other = DoubleDouble.from_float(other)
        s, e = _two_sum(self.hi, other.hi)
        e += self.lo + other.lo
        hi, lo = _two_sum(s, e)
        return DoubleDouble(hi, lo)

    __radd__ = __add__

    def __neg__(self):
        return DoubleDouble(-self.hi, -self.lo)

    def __sub__(self, other):
        if not isinstance(other, DoubleDouble):
            other = DoubleDouble.from_float(other)
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, DoubleDouble):
            p, e = _two_prod(self.hi, other.hi)
            e += self.hi * other.lo + self.lo * other.hi
            hi, lo = _two_sum(p, e)
            return DoubleDouble(hi, lo)
        other = float(other)
        p, e = _two_prod(self.hi, other)
        e += self.lo * other
        hi, lo = _two_sum(p, e)
        return DoubleDouble(hi, lo)

    __rmul__ = __mul__

    def __truediv__(self, other):
        d = float(other)
        q1 = (self.hi + self.lo) / d
        # one Newton correction on the residual
        p, e = _two_prod(q1, d)
        r = ((self.hi - p) - e) + self.lo
        q2 = r / d
        hi, lo = _two_sum(q1, q2)
        return DoubleDouble(hi, lo)

    def abs(self) -> float:
        return abs(self.hi + self.lo)


class DDSum:
    """Double-double accumulator for complex summands.

    Drop-in alternative to KahanSum when the cancellation depth exceeds
    what a compensated double can carry (instability records past the
    double-precision index ceiling).
    """

    __slots__ = ("_re", "_im")

    def __init__(self):
        self._re = DoubleDouble()
        self._im = DoubleDouble()

    def add(self, z):
        z = complex(z)
        self._re = self._re + z.real
        self._im = self._im + z.imag

    @property
    def value(self) -> complex:
        return complex(float(self._re), float(self._im))


def make_accumulator(precision: str = "double"):
    """Accumulator factory keyed by the CLI precision switch."""
    if precision == "double":
        return KahanSum()
    if precision == "dd":
        return DDSum()
    raise ValueError(f"unknown precision {precision!r}")


def log_sum_exp(logs, signs=None):
    """log|sum s_i e^{l_i}| with complex phases, for log-space norms."""
    logs = list(logs)
    if not logs:
        return -math.inf
    m = max(logs)
    if signs is None:
        signs = [1.0] * len(logs)
    acc = sum(s * math.exp(l - m) for l, s in zip(logs, signs))
    if acc == 0:
        return -math.inf
    return m + math.log(abs(acc))
