"""Numerical laboratory for the complex cubic oscillator
-d^2/dx^2 + i x^3 + i alpha x: spectrum, Stokes geometry, and the
exponential growth of spectral-projection norms."""

__version__ = "0.1.0"
