"""Numerical laboratory for excited-state quantum phase transitions."""

__version__ = "0.1.0"
