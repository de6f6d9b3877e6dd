"""Numerical laboratory for the complex m-Hessian equation."""

__version__ = "0.1.0"
