"""Checker, redundancy-eliminating clause compiler, and certified proof
search for dependently typed signatures."""

__version__ = "0.1.0"
