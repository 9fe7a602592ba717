"""Convex polyhedra in H^3, their de Sitter duals, and the realization solver."""

__version__ = "0.1.0"
