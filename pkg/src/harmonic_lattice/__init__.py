"""Computational laboratory for discrete harmonic functions on Z^2."""

__version__ = "0.1.0"
