"""Jacobi fields, holonomy and flats for Riemannian submersions from compact Lie groups."""

__version__ = "0.1.0"
