"""Boundary seminorms, conformal maps and regularity estimators for planar Jordan curves."""

__version__ = "0.1.0"
