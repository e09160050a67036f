"""Finite-volume experiments for very fast diffusion with dynamic boundary conditions."""

__version__ = "0.1.0"
