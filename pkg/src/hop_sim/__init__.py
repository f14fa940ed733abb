"""Simulation and verification toolkit for Heckman-Opdam diffusions."""

__version__ = "0.1.0"
