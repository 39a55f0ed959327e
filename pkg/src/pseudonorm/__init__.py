"""Resolvent norms of complex Schrödinger operators."""

__version__ = "0.1.0"
