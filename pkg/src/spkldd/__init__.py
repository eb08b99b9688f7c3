"""Strictly k-piecewise datasets and their long-distance-dependency profiles."""

__version__ = "0.1.0"
