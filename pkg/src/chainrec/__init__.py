"""Finite-resolution chain recurrence, attractors, and shadowing on grid
models of compact metric spaces."""

__version__ = "0.1.0"
