"""Homodyne tomography workbench: simulate, diagnose and analyse quadrature data."""

__version__ = "0.1.0"
