"""Symmetry-assisted matching decoder for the XY surface code under biased noise."""

__version__ = "0.1.0"
