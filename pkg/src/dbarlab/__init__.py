"""Numerical toolkit for dbar homotopy operators on model strictly pseudoconvex domains."""

__version__ = "0.1.0"
