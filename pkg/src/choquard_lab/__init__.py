"""Numerics for the nonlocal (Choquard) Sobolev inequality and its stability."""

__version__ = "0.1.0"
