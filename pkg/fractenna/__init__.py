"""Pixelated fractal microstrip patch antenna: design equations, FDTD, GA optimization."""

__version__ = "0.1.0"
