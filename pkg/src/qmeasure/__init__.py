"""Quantum measure theory on finite and continuum systems."""

__version__ = "0.1.0"
