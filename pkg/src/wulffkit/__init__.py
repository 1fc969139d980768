"""Numerical toolkit for anisotropic surface energies on convex surfaces."""

__version__ = "0.1.0"
