"""Pseudo-spectral toolkit for 2D vorticity in similarity variables."""

__version__ = "0.1.0"
