"""Divergence-stability toolkit for cubic Lagrange Stokes elements."""

__version__ = "0.1.0"
