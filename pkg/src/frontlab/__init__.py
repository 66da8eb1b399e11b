"""Travelling fronts of the porous medium equation with reaction."""

__version__ = "0.1.0"
