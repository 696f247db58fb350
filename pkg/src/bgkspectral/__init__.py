"""Spectral toolkit for the linearized scalar BGK model."""

__version__ = "0.1.0"
