"""Numerical toolkit for Lagrangian mean curvature type equations on uniform grids."""
from .grid import GridFunction, GridSpec, jacobi_eigh, lagrangian_angle
from .phase import PhaseSpec, Variant

__all__ = ["GridFunction", "GridSpec", "PhaseSpec", "Variant", "jacobi_eigh", "lagrangian_angle"]
__version__ = "0.1.0"
