"""Curvature engine and Euler-Lagrange residual checks for quadratic curvature functionals on 3-metrics."""

__version__ = "0.1.0"
