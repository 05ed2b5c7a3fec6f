"""Numerical laboratory for elliptic inequalities near the boundary of geodesic balls."""

__version__ = "0.1.0"
