"""Generalized Phan geometries of types A, B, C over finite fields."""

__version__ = "0.1.0"
