"""Dirichlet eigenvalues on domains of the hyperbolic upper half-space, and universal inequalities for them."""

__version__ = "0.1.0"
