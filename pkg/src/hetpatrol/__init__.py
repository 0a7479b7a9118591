"""Heterogeneous multi-robot patrol and RF source-seeking simulator."""

__version__ = "0.1.0"
