"""Numerical laboratory for the one-dimensional Muskat interface equation."""
from .grid import GridFunction, Grid, make_grid, sample
from .quadrature import QuadratureConfig

__all__ = ["Grid", "GridFunction", "make_grid", "sample", "QuadratureConfig"]
__version__ = "0.1.0"
