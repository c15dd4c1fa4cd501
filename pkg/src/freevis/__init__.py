"""Densities of visible elements and test elements in free groups and lattices."""

__version__ = "0.1.0"
