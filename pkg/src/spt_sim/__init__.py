"""Rabi model with A^2 and antisqueezing terms: analytic limits and exact numerics."""

__version__ = "0.1.0"
