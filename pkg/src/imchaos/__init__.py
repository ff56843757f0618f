"""Simulation and verification lab for imaginary Gaussian multiplicative chaos."""

__version__ = "0.1.0"
