"""Finite-length toolkit for privacy amplification against side-channel key leakage."""

__version__ = "0.1.0"
